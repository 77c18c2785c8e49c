#include "pentrace/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "pentrace/descriptive.hpp"

namespace pentrace {

const char* to_string(Aggregation a) {
  switch (a) {
    case Aggregation::none: return "none";
    case Aggregation::median: return "median";
    case Aggregation::ncv: return "ncv";
    case Aggregation::p95: return "p95";
    case Aggregation::slope: return "slope";
  }
  return "none";
}

namespace {

constexpr Aggregation kVectorAggs[] = {Aggregation::median, Aggregation::ncv, Aggregation::p95,
                                       Aggregation::slope};

std::string feature_name(const std::string& signal, const std::string& projection,
                         Surface surface, Aggregation agg) {
  std::string n = signal;
  if (!projection.empty()) n += ":" + projection;
  n += ":";
  n += to_string(surface);
  n += ":";
  n += to_string(agg);
  return n;
}

// Included strokes per surface; leading/trailing in-air runs are dropped
// unless include_boundary_air is set.
struct StrokeView {
  std::vector<Stroke> all;
  std::vector<Stroke> on;
  std::vector<Stroke> air;
};

StrokeView make_view(const Session& s, const FeatureConfig& cfg) {
  StrokeView v;
  v.all = segment_strokes(s);
  for (std::size_t i = 0; i < v.all.size(); ++i) {
    const Stroke& st = v.all[i];
    if (st.surface == Surface::on_surface) {
      v.on.push_back(st);
    } else {
      const bool boundary = (i == 0) || (i + 1 == v.all.size());
      if (cfg.include_boundary_air || !boundary) v.air.push_back(st);
    }
  }
  return v;
}

double stroke_duration(const Session& s, const Stroke& st) {
  return s.samples[st.end - 1].t - s.samples[st.begin].t;
}

double spatial_scale(const FeatureConfig& cfg) {
  return cfg.units_per_mm ? 1.0 / *cfg.units_per_mm : 1.0;
}

// Derivative of f(t) on nonuniform timestamps: three-point central stencil
// in the interior, first-order one-sided at the ends. Exact on affine f.
std::vector<double> differentiate(std::span<const double> f, std::span<const double> t) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  d[0] = (f[1] - f[0]) / (t[1] - t[0]);
  d[n - 1] = (f[n - 1] - f[n - 2]) / (t[n - 1] - t[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = t[i] - t[i - 1];
    const double h2 = t[i + 1] - t[i];
    d[i] = (-h2 / (h1 * (h1 + h2))) * f[i - 1] + ((h2 - h1) / (h1 * h2)) * f[i] +
           (h1 / (h2 * (h1 + h2))) * f[i + 1];
  }
  return d;
}

// Per-sample kinematics of one stroke (needs >= 3 samples).
struct StrokeKinematics {
  std::vector<double> t;           // per sample
  std::vector<double> vx, vy;      // signed components
  std::vector<double> speed;       // magnitude
  std::vector<double> ax, ay, acc;
  std::vector<double> omega_t;     // per angular-velocity value
  std::vector<double> omega;       // signed, from unwrapped segment headings
};

StrokeKinematics stroke_kinematics(const Session& s, const Stroke& st, double scale) {
  StrokeKinematics k;
  const std::size_t n = st.size();
  std::vector<double> xs(n), ys(n);
  k.t.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& smp = s.samples[st.begin + i];
    xs[i] = smp.x * scale;
    ys[i] = smp.y * scale;
    k.t[i] = smp.t;
  }
  k.vx = differentiate(xs, k.t);
  k.vy = differentiate(ys, k.t);
  k.speed.resize(n);
  for (std::size_t i = 0; i < n; ++i) k.speed[i] = std::hypot(k.vx[i], k.vy[i]);
  k.ax = differentiate(k.vx, k.t);
  k.ay = differentiate(k.vy, k.t);
  k.acc.resize(n);
  for (std::size_t i = 0; i < n; ++i) k.acc[i] = std::hypot(k.ax[i], k.ay[i]);

  // Heading per segment, unwrapped; angular velocity between consecutive
  // segment midpoints.
  if (n >= 3) {
    std::vector<double> phi(n - 1), tmid(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      phi[i] = std::atan2(ys[i + 1] - ys[i], xs[i + 1] - xs[i]);
      tmid[i] = 0.5 * (k.t[i] + k.t[i + 1]);
    }
    for (std::size_t i = 1; i < phi.size(); ++i) {
      double d = phi[i] - phi[i - 1];
      while (d > M_PI) d -= 2.0 * M_PI;
      while (d < -M_PI) d += 2.0 * M_PI;
      phi[i] = phi[i - 1] + d;
    }
    k.omega.resize(n - 2);
    k.omega_t.resize(n - 2);
    for (std::size_t i = 0; i + 1 < phi.size(); ++i) {
      k.omega[i] = (phi[i + 1] - phi[i]) / (tmid[i + 1] - tmid[i]);
      k.omega_t[i] = k.t[i + 1];
    }
  }
  return k;
}

struct Series {
  std::vector<double> values;  // used for median/ncv/p95 (magnitudes)
  std::vector<double> signed_values;  // used for slope
  std::vector<double> t;
};

// median/ncv/p95 over `values`, slope of `signed_values` against time.
void emit_series(std::vector<FeatureValue>& out, const std::string& signal,
                 const std::string& projection, Surface surface, const Series& series) {
  std::span<const double> vals(series.values);
  for (Aggregation agg : kVectorAggs) {
    FeatureValue fv;
    fv.name = feature_name(signal, projection, surface, agg);
    fv.surface = surface;
    fv.aggregation = agg;
    if (!vals.empty()) {
      switch (agg) {
        case Aggregation::median: fv.value = median(vals); break;
        case Aggregation::ncv: fv.value = ncv(vals); break;
        case Aggregation::p95: fv.value = quantile(vals, 0.95); break;
        case Aggregation::slope: fv.value = ols_slope(series.t, series.signed_values); break;
        default: break;
      }
    }
    out.push_back(std::move(fv));
  }
}

// Per-stroke vectors aggregate against their own 0-based index.
void emit_vector(std::vector<FeatureValue>& out, const std::string& signal, Surface surface,
                 std::span<const double> vals) {
  for (Aggregation agg : kVectorAggs) {
    FeatureValue fv;
    fv.name = feature_name(signal, "", surface, agg);
    fv.surface = surface;
    fv.aggregation = agg;
    if (!vals.empty()) {
      switch (agg) {
        case Aggregation::median: fv.value = median(vals); break;
        case Aggregation::ncv: fv.value = ncv(vals); break;
        case Aggregation::p95: fv.value = quantile(vals, 0.95); break;
        case Aggregation::slope: fv.value = ols_slope_indexed(vals); break;
        default: break;
      }
    }
    out.push_back(std::move(fv));
  }
}

void emit_scalar(std::vector<FeatureValue>& out, const std::string& signal,
                 const std::string& projection, Surface surface, std::optional<double> value) {
  FeatureValue fv;
  fv.name = feature_name(signal, projection, surface, Aggregation::none);
  fv.surface = surface;
  fv.aggregation = Aggregation::none;
  fv.value = value;
  out.push_back(std::move(fv));
}

double entropy_1d(std::span<const double> v, int bins) {
  const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
  const double mn = *mn_it, mx = *mx_it;
  if (mx == mn) return 0.0;
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (double x : v) {
    auto b = static_cast<int>((x - mn) / (mx - mn) * bins);
    counts[static_cast<std::size_t>(std::min(b, bins - 1))]++;
  }
  double h = 0.0;
  const double n = static_cast<double>(v.size());
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double entropy_2d(std::span<const double> xs, std::span<const double> ys, int bins) {
  const auto [xmn_it, xmx_it] = std::minmax_element(xs.begin(), xs.end());
  const auto [ymn_it, ymx_it] = std::minmax_element(ys.begin(), ys.end());
  const double xmn = *xmn_it, xmx = *xmx_it, ymn = *ymn_it, ymx = *ymx_it;
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins) * bins, 0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    int bx = xmx == xmn ? 0 : std::min(static_cast<int>((xs[i] - xmn) / (xmx - xmn) * bins),
                                       bins - 1);
    int by = ymx == ymn ? 0 : std::min(static_cast<int>((ys[i] - ymn) / (ymx - ymn) * bins),
                                       bins - 1);
    counts[static_cast<std::size_t>(bx) * bins + by]++;
  }
  double h = 0.0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double circular_mean_deg(std::span<const double> deg) {
  double s = 0.0, c = 0.0;
  for (double d : deg) {
    const double r = d * M_PI / 180.0;
    s += std::sin(r);
    c += std::cos(r);
  }
  double m = std::atan2(s, c) * 180.0 / M_PI;
  if (m < 0) m += 360.0;
  return m;
}

// Unwraps angles (degrees) into (mean-180, mean+180]; statistics on the
// unwrapped values avoid the 0/360 seam for concentrated data.
std::vector<double> unwrap_around_mean(std::span<const double> deg) {
  const double mu = circular_mean_deg(deg);
  std::vector<double> out(deg.size());
  for (std::size_t i = 0; i < deg.size(); ++i) {
    double d = deg[i] - mu;
    while (d > 180.0) d -= 360.0;
    while (d <= -180.0) d += 360.0;
    out[i] = mu + d;
  }
  return out;
}

double wrap360(double d) {
  d = std::fmod(d, 360.0);
  if (d < 0) d += 360.0;
  return d;
}

// duration sums shared between temporal and other features
struct Durations {
  double on = 0.0;
  double air = 0.0;   // included strokes only
  bool air_present = false;
  double global() const { return on + air; }
};

Durations compute_durations(const Session& s, const StrokeView& view) {
  Durations d;
  for (const Stroke& st : view.on) d.on += stroke_duration(s, st);
  d.air_present = !view.air.empty();
  for (const Stroke& st : view.air) d.air += stroke_duration(s, st);
  return d;
}

// On-surface per-sample speeds per stroke (strokes with >= 3 samples), used
// by the pen-stop detector.
struct SpeedRun {
  const Stroke* stroke;
  std::vector<double> speed;
  std::vector<double> t;
};

}  // namespace

std::vector<FeatureValue> temporal_features(const Session& s, const FeatureConfig& cfg) {
  std::vector<FeatureValue> out;
  const StrokeView view = make_view(s, cfg);
  const Durations dur = compute_durations(s, view);

  emit_scalar(out, "duration_writing", "", Surface::global_, dur.global());
  emit_scalar(out, "duration_writing", "", Surface::on_surface, dur.on);
  emit_scalar(out, "duration_writing", "", Surface::in_air,
              dur.air_present ? std::optional<double>(dur.air) : std::nullopt);
  emit_scalar(out, "duration_ratio", "", Surface::global_,
              dur.air_present && dur.air > 0.0 ? std::optional<double>(dur.on / dur.air)
                                               : std::nullopt);

  std::vector<double> on_durs, air_durs;
  for (const Stroke& st : view.on) on_durs.push_back(stroke_duration(s, st));
  for (const Stroke& st : view.air) air_durs.push_back(stroke_duration(s, st));
  emit_vector(out, "stroke_duration", Surface::on_surface, on_durs);
  emit_vector(out, "stroke_duration", Surface::in_air, air_durs);

  std::optional<double> ratio;
  const auto med_on = median(on_durs);
  const auto med_air = median(air_durs);
  if (med_on && med_air && *med_air > 0.0) ratio = *med_on / *med_air;
  emit_scalar(out, "stroke_duration_ratio", "", Surface::global_, ratio);
  return out;
}

std::vector<FeatureValue> kinematic_features(const Session& s, const FeatureConfig& cfg) {
  std::vector<FeatureValue> out;
  const StrokeView view = make_view(s, cfg);
  const double scale = spatial_scale(cfg);

  for (Surface surface : {Surface::on_surface, Surface::in_air}) {
    const auto& strokes = surface == Surface::on_surface ? view.on : view.air;
    Series speed, vx, vy, acc, ax, ay, omega;
    for (const Stroke& st : strokes) {
      if (st.size() < 3) continue;
      const StrokeKinematics k = stroke_kinematics(s, st, scale);
      for (std::size_t i = 0; i < k.t.size(); ++i) {
        speed.values.push_back(k.speed[i]);
        speed.signed_values.push_back(k.speed[i]);
        speed.t.push_back(k.t[i]);
        vx.values.push_back(std::abs(k.vx[i]));
        vx.signed_values.push_back(k.vx[i]);
        vx.t.push_back(k.t[i]);
        vy.values.push_back(std::abs(k.vy[i]));
        vy.signed_values.push_back(k.vy[i]);
        vy.t.push_back(k.t[i]);
        acc.values.push_back(k.acc[i]);
        acc.signed_values.push_back(k.acc[i]);
        acc.t.push_back(k.t[i]);
        ax.values.push_back(std::abs(k.ax[i]));
        ax.signed_values.push_back(k.ax[i]);
        ax.t.push_back(k.t[i]);
        ay.values.push_back(std::abs(k.ay[i]));
        ay.signed_values.push_back(k.ay[i]);
        ay.t.push_back(k.t[i]);
      }
      for (std::size_t i = 0; i < k.omega.size(); ++i) {
        omega.values.push_back(std::abs(k.omega[i]));
        omega.signed_values.push_back(k.omega[i]);
        omega.t.push_back(k.omega_t[i]);
      }
    }
    emit_series(out, "velocity", "", surface, speed);
    emit_series(out, "velocity", "horizontal", surface, vx);
    emit_series(out, "velocity", "vertical", surface, vy);
    emit_series(out, "acceleration", "", surface, acc);
    emit_series(out, "acceleration", "horizontal", surface, ax);
    emit_series(out, "acceleration", "vertical", surface, ay);
    emit_series(out, "angular_velocity", "", surface, omega);
  }
  return out;
}

std::vector<FeatureValue> dynamic_features(const Session& s, const FeatureConfig& cfg) {
  (void)cfg;
  std::vector<FeatureValue> out;

  Series pressure;
  for (const Sample& smp : s.samples) {
    if (smp.pen_status != kPenOnSurface) continue;
    pressure.values.push_back(smp.pressure);
    pressure.signed_values.push_back(smp.pressure);
    pressure.t.push_back(smp.t);
  }
  emit_series(out, "pressure", "", Surface::on_surface, pressure);

  Series tilt;
  std::vector<double> azimuth_raw, azimuth_t;
  for (const Sample& smp : s.samples) {
    tilt.values.push_back(smp.tilt);
    tilt.signed_values.push_back(smp.tilt);
    tilt.t.push_back(smp.t);
    azimuth_raw.push_back(smp.azimuth);
    azimuth_t.push_back(smp.t);
  }
  emit_series(out, "tilt", "", Surface::global_, tilt);

  // Azimuth is circular: aggregate on values unwrapped around the circular
  // mean, report the median back in [0, 360).
  for (Aggregation agg : kVectorAggs) {
    FeatureValue fv;
    fv.name = feature_name("azimuth", "", Surface::global_, agg);
    fv.surface = Surface::global_;
    fv.aggregation = agg;
    if (!azimuth_raw.empty()) {
      const std::vector<double> unwrapped = unwrap_around_mean(azimuth_raw);
      switch (agg) {
        case Aggregation::median: fv.value = wrap360(*median(unwrapped)); break;
        case Aggregation::p95: fv.value = wrap360(*quantile(unwrapped, 0.95)); break;
        case Aggregation::ncv: {
          std::vector<double> sorted(unwrapped);
          std::sort(sorted.begin(), sorted.end());
          const double q1 = quantile_sorted(sorted, 0.25);
          const double q3 = quantile_sorted(sorted, 0.75);
          if (!iqr_is_degenerate(q1, q3))
            fv.value = wrap360(*median(unwrapped)) / (q3 - q1);
          break;
        }
        case Aggregation::slope: fv.value = ols_slope(azimuth_t, unwrapped); break;
        default: break;
      }
    }
    out.push_back(std::move(fv));
  }
  return out;
}

std::vector<FeatureValue> spatial_features(const Session& s, const FeatureConfig& cfg) {
  std::vector<FeatureValue> out;
  const StrokeView view = make_view(s, cfg);
  const double scale = spatial_scale(cfg);

  for (Surface surface : {Surface::on_surface, Surface::in_air}) {
    const auto& strokes = surface == Surface::on_surface ? view.on : view.air;
    std::vector<double> widths, heights;
    for (const Stroke& st : strokes) {
      double xmn = s.samples[st.begin].x, xmx = xmn;
      double ymn = s.samples[st.begin].y, ymx = ymn;
      for (std::size_t i = st.begin + 1; i < st.end; ++i) {
        xmn = std::min(xmn, s.samples[i].x);
        xmx = std::max(xmx, s.samples[i].x);
        ymn = std::min(ymn, s.samples[i].y);
        ymx = std::max(ymx, s.samples[i].y);
      }
      widths.push_back((xmx - xmn) * scale);
      heights.push_back((ymx - ymn) * scale);
    }
    emit_vector(out, "stroke_width", surface, widths);
    emit_vector(out, "stroke_height", surface, heights);
  }
  return out;
}

std::vector<FeatureValue> other_features(const Session& s, const FeatureConfig& cfg) {
  std::vector<FeatureValue> out;
  const StrokeView view = make_view(s, cfg);
  const Durations dur = compute_durations(s, view);
  const double scale = spatial_scale(cfg);

  std::size_t interruptions = 0;
  for (std::size_t i = 1; i < s.samples.size(); ++i) {
    if (s.samples[i - 1].pen_status == kPenOnSurface && s.samples[i].pen_status == kPenInAir)
      ++interruptions;
  }
  emit_scalar(out, "interruptions", "", Surface::global_, static_cast<double>(interruptions));
  emit_scalar(out, "interruptions_relative", "", Surface::global_,
              dur.global() > 0.0
                  ? std::optional<double>(static_cast<double>(interruptions) / dur.global())
                  : std::nullopt);

  // pen stops: on-surface runs below a tenth of the session's p95 speed
  // lasting at least pen_stop_min_duration
  std::vector<SpeedRun> runs;
  std::vector<double> all_speeds;
  for (const Stroke& st : view.on) {
    if (st.size() < 3) continue;
    StrokeKinematics k = stroke_kinematics(s, st, scale);
    SpeedRun run{&st, std::move(k.speed), std::move(k.t)};
    all_speeds.insert(all_speeds.end(), run.speed.begin(), run.speed.end());
    runs.push_back(std::move(run));
  }
  std::optional<double> stop_count;
  std::vector<double> stop_durations;
  if (!all_speeds.empty()) {
    const double threshold = *quantile(all_speeds, 0.95) * cfg.pen_stop_velocity_fraction;
    std::size_t n_stops = 0;
    for (const SpeedRun& run : runs) {
      std::size_t i = 0;
      while (i < run.speed.size()) {
        if (run.speed[i] >= threshold) {
          ++i;
          continue;
        }
        std::size_t j = i;
        while (j < run.speed.size() && run.speed[j] < threshold) ++j;
        const double d = run.t[j - 1] - run.t[i];
        if (d >= cfg.pen_stop_min_duration) {
          ++n_stops;
          stop_durations.push_back(d);
        }
        i = j;
      }
    }
    stop_count = static_cast<double>(n_stops);
  }
  emit_scalar(out, "pen_stops", "", Surface::on_surface, stop_count);
  emit_vector(out, "pen_stop_duration", Surface::on_surface, stop_durations);

  emit_scalar(out, "tempo", "", Surface::on_surface,
              dur.on > 0.0
                  ? std::optional<double>(static_cast<double>(view.on.size()) / dur.on)
                  : std::nullopt);
  emit_scalar(out, "tempo", "", Surface::in_air,
              dur.air_present && dur.air > 0.0
                  ? std::optional<double>(static_cast<double>(view.air.size()) / dur.air)
                  : std::nullopt);

  for (Surface surface : {Surface::on_surface, Surface::in_air}) {
    const auto& strokes = surface == Surface::on_surface ? view.on : view.air;
    std::vector<double> xs, ys;
    for (const Stroke& st : strokes) {
      for (std::size_t i = st.begin; i < st.end; ++i) {
        xs.push_back(s.samples[i].x);
        ys.push_back(s.samples[i].y);
      }
    }
    std::optional<double> hg, hx, hy;
    if (!xs.empty()) {
      hg = entropy_2d(xs, ys, cfg.entropy_bins);
      hx = entropy_1d(xs, cfg.entropy_bins);
      hy = entropy_1d(ys, cfg.entropy_bins);
    }
    emit_scalar(out, "entropy", "", surface, hg);
    emit_scalar(out, "entropy", "horizontal", surface, hx);
    emit_scalar(out, "entropy", "vertical", surface, hy);
  }
  return out;
}

std::vector<FeatureValue> extract_features(const Session& s, const FeatureConfig& cfg) {
  std::vector<FeatureValue> all;
  for (auto&& family : {temporal_features(s, cfg), kinematic_features(s, cfg),
                        dynamic_features(s, cfg), spatial_features(s, cfg),
                        other_features(s, cfg)}) {
    all.insert(all.end(), family.begin(), family.end());
  }

  const auto& catalog = feature_catalog();
  if (all.size() != catalog.size())
    throw std::logic_error("feature families out of sync with catalog");
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].name != catalog[i].name)
      throw std::logic_error("feature order out of sync with catalog at " + all[i].name);
  }
  return all;
}

namespace {

std::vector<CatalogEntry> build_catalog() {
  std::vector<CatalogEntry> cat;
  auto add = [&cat](const std::string& signal, const std::string& projection, Surface surface,
                    Aggregation agg, const std::string& unit, const std::string& desc,
                    bool nonstandard = false) {
    CatalogEntry e;
    e.name = feature_name(signal, projection, surface, agg);
    e.signal = signal;
    e.projection = projection;
    e.surface = surface;
    e.aggregation = agg;
    e.unit = unit;
    e.description = desc;
    e.nonstandard = nonstandard;
    cat.push_back(std::move(e));
  };
  auto add_vector = [&add](const std::string& signal, const std::string& projection,
                           Surface surface, const std::string& unit, const std::string& desc,
                           bool nonstandard = false) {
    for (Aggregation agg : kVectorAggs) add(signal, projection, surface, agg, unit, desc,
                                            nonstandard);
  };

  // temporal
  add("duration_writing", "", Surface::global_, Aggregation::none, "s",
      "total writing time: on-surface plus included in-air stroke time");
  add("duration_writing", "", Surface::on_surface, Aggregation::none, "s",
      "sum of on-surface stroke durations");
  add("duration_writing", "", Surface::in_air, Aggregation::none, "s",
      "sum of included in-air stroke durations");
  add("duration_ratio", "", Surface::global_, Aggregation::none, "",
      "on-surface duration / in-air duration");
  add_vector("stroke_duration", "", Surface::on_surface, "s",
             "per-stroke duration, on-surface");
  add_vector("stroke_duration", "", Surface::in_air, "s", "per-stroke duration, in-air");
  add("stroke_duration_ratio", "", Surface::global_, Aggregation::none, "",
      "median on-surface / median in-air stroke duration");

  // kinematic; slope aggregations regress the signed series on time
  for (Surface surface : {Surface::on_surface, Surface::in_air}) {
    add_vector("velocity", "", surface, "u/s", "per-sample speed");
    add_vector("velocity", "horizontal", surface, "u/s",
               "per-sample |vx| (signed for slope)");
    add_vector("velocity", "vertical", surface, "u/s", "per-sample |vy| (signed for slope)");
    add_vector("acceleration", "", surface, "u/s^2", "per-sample acceleration magnitude");
    add_vector("acceleration", "horizontal", surface, "u/s^2",
               "per-sample |ax| (signed for slope)");
    add_vector("acceleration", "vertical", surface, "u/s^2",
               "per-sample |ay| (signed for slope)");
    add_vector("angular_velocity", "", surface, "rad/s",
               "heading change rate; |omega| except the slope, which is signed");
  }

  // dynamic
  add_vector("pressure", "", Surface::on_surface, "u", "pen pressure over on-surface samples");
  add_vector("tilt", "", Surface::global_, "deg",
             "pen tilt (altitude angle) over all samples");
  add_vector("azimuth", "", Surface::global_, "deg",
             "pen azimuth, unwrapped around the circular mean; median in [0, 360)");

  // spatial; the in-air boxes are emitted but not part of the conventional set
  add_vector("stroke_width", "", Surface::on_surface, "u", "per-stroke bounding-box width");
  add_vector("stroke_height", "", Surface::on_surface, "u", "per-stroke bounding-box height");
  add_vector("stroke_width", "", Surface::in_air, "u", "per-stroke bounding-box width", true);
  add_vector("stroke_height", "", Surface::in_air, "u", "per-stroke bounding-box height", true);

  // other
  add("interruptions", "", Surface::global_, Aggregation::none, "",
      "pen elevations: on-surface to in-air transitions");
  add("interruptions_relative", "", Surface::global_, Aggregation::none, "1/s",
      "interruptions per second of writing");
  add("pen_stops", "", Surface::on_surface, Aggregation::none, "",
      "low-speed on-surface holds of at least 30 ms, below 10% of p95 speed");
  add_vector("pen_stop_duration", "", Surface::on_surface, "s", "per-stop duration");
  add("tempo", "", Surface::on_surface, Aggregation::none, "strokes/s",
      "on-surface stroke count / on-surface duration");
  add("tempo", "", Surface::in_air, Aggregation::none, "strokes/s",
      "in-air stroke count / in-air duration");
  for (Surface surface : {Surface::on_surface, Surface::in_air}) {
    add("entropy", "", surface, Aggregation::none, "bit",
        "position entropy, 32x32 joint histogram over the min-max range, log2");
    add("entropy", "horizontal", surface, Aggregation::none, "bit",
        "x-position entropy, 32 bins");
    add("entropy", "vertical", surface, Aggregation::none, "bit",
        "y-position entropy, 32 bins");
  }
  return cat;
}

}  // namespace

const std::vector<CatalogEntry>& feature_catalog() {
  static const std::vector<CatalogEntry> catalog = build_catalog();
  return catalog;
}

int FeatureMatrix::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<std::pair<std::size_t, double>> FeatureMatrix::column_present(std::size_t col) const {
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t r = 0; r < values.size(); ++r)
    if (!std::isnan(values[r][col])) out.emplace_back(r, values[r][col]);
  return out;
}

FeatureMatrix extract_all(const std::vector<Session>& sessions, const FeatureConfig& cfg) {
  FeatureMatrix m;
  for (const auto& e : feature_catalog()) m.columns.push_back(e.name);

  for (const Session& s : sessions) {
    const auto diags = validate(s);
    if (has_errors(diags)) {
      std::string msg = "session " + s.subject_id + " failed validation:";
      for (const auto& d : diags)
        if (d.severity == Severity::error)
          msg += std::string(" ") + to_string(d.code) + "@" + std::to_string(d.sample_index);
      throw std::runtime_error(msg);
    }

    const auto feats = extract_features(s, cfg);
    std::vector<double> row(m.columns.size(), FeatureMatrix::kMissing);
    for (std::size_t i = 0; i < feats.size(); ++i)
      if (feats[i].value) row[i] = *feats[i].value;
    m.values.push_back(std::move(row));

    RowMeta meta;
    meta.subject_id = s.subject_id;
    meta.sex = s.sex;
    meta.class_year = s.class_year;
    meta.diagnosis = s.diagnosis;
    meta.hpsqc = s.hpsqc;
    m.meta.push_back(std::move(meta));
  }
  return m;
}

}  // namespace pentrace
