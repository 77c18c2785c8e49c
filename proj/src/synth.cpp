#include "pentrace/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "pentrace/rng.hpp"

namespace pentrace {

namespace {

constexpr double kTickRate = 1000.0;
constexpr double kUnitsPerMm = 200.0;     // Wacom-like spatial resolution
constexpr double kBaseStrokeHeight = 1600; // units, ~8 mm
constexpr double kBaseStrokeDuration = 0.45;  // s
constexpr double kBaseGapDuration = 0.35;     // s
constexpr double kBaseOmega = 2.0 * M_PI * 2.0;  // rad/s, ~2 loops per second
constexpr double kBaseSpeed = kBaseStrokeHeight * kBaseOmega / 2.0;  // loop geometry
constexpr double kOmegaJitter = 0.55;            // relative, for the intact group
// larger letters are written only somewhat faster; the loop rate absorbs the
// rest of the size change (pen speed scales with height^kSpeedHeightCoupling)
constexpr double kSpeedHeightCoupling = 0.3;

struct SubjectDraw {
  double severity = 0.0;
  double m_interrupt = 1.0;
  double m_air = 1.0;
  double m_height = 1.0;
  double m_ang = 1.0;
};

int clamp_round(double v, int lo, int hi) {
  return std::clamp(static_cast<int>(std::lround(v)), lo, hi);
}

// one on-surface stroke appended to the session; loop-like trajectory driven
// by heading integration so the angular-velocity profile is controlled
void append_stroke(Session& session, Rng& rng, double& x, double& y, double baseline_y,
                   std::size_t& tick_index, const SubjectDraw& draw, double noise,
                   double dt) {
  // bigger letters sweep the same loop angle: the path grows with the height
  // while the pen speed grows only as height^coupling, so the stroke takes
  // height^(1-coupling) times longer
  const double duration = kBaseStrokeDuration *
                          std::pow(draw.m_height, 1.0 - kSpeedHeightCoupling) *
                          rng.lognormal(0.0, 0.15 * noise);
  const auto n = static_cast<std::size_t>(std::max(3L, std::lround(duration / dt)));

  const double direction = rng.uniform01() < 0.5 ? -1.0 : 1.0;
  const double jitter_amp = kOmegaJitter / draw.m_ang;
  const double jitter_freq = rng.uniform(1.5, 3.5);
  const double jitter_phase = rng.uniform(0.0, 2.0 * M_PI);

  const double height = kBaseStrokeHeight * draw.m_height * rng.lognormal(0.0, 0.12 * noise);
  const double speed0 = kBaseSpeed * std::pow(draw.m_height, kSpeedHeightCoupling) *
                        rng.lognormal(0.0, 0.08 * noise);
  const double omega0 = 2.0 * speed0 / height;  // loop diameter equals the height
  const double speed_freq = rng.uniform(0.8, 1.8);
  const double speed_phase = rng.uniform(0.0, 2.0 * M_PI);
  const double drift = speed0 * 0.22;  // baseline progression

  // occasional mid-stroke hesitation, both groups alike
  const bool hesitate = rng.uniform01() < 0.25;
  const double hesitate_at = rng.uniform(0.2, 0.8) * duration;

  const double pressure0 = rng.uniform(420.0, 620.0);
  const double pressure_phase = rng.uniform(0.0, 2.0 * M_PI);
  const double tilt0 = std::clamp(rng.normal(55.0, 8.0), 10.0, 80.0);
  const double azimuth0 = rng.normal(265.0, 18.0);

  double phi = rng.uniform(0.0, 2.0 * M_PI);
  // gentle pull back to the text baseline keeps strokes on one line
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double omega =
        direction * omega0 *
        (1.0 + jitter_amp * std::sin(2.0 * M_PI * jitter_freq * t + jitter_phase));
    double speed = speed0 * (1.0 + 0.25 * std::sin(2.0 * M_PI * speed_freq * t + speed_phase));
    if (hesitate) {
      const double u = (t - hesitate_at) / 0.03;
      speed *= 1.0 - 0.95 * std::exp(-u * u);
    }

    Sample s;
    s.pen_status = kPenOnSurface;
    s.t_ticks = static_cast<std::int64_t>(tick_index) * 5;
    s.t = static_cast<double>(s.t_ticks) / kTickRate;
    s.x = std::round(x);
    s.y = std::round(y);
    s.pressure = clamp_round(
        pressure0 * (1.0 + 0.2 * std::sin(2.0 * M_PI * 1.1 * t + pressure_phase)) +
            rng.normal(0.0, 12.0 * noise),
        1, 1023);
    s.tilt = clamp_round(tilt0 + rng.normal(0.0, 1.5 * noise), 0, 90);
    double az = azimuth0 + 8.0 * std::sin(2.0 * M_PI * 0.3 * t) + rng.normal(0.0, 2.0 * noise);
    az = std::fmod(std::fmod(std::round(az), 360.0) + 360.0, 360.0);
    s.azimuth = az;
    session.samples.push_back(s);
    ++tick_index;

    phi += omega * dt;
    x += (speed * std::cos(phi) + drift) * dt;
    y += speed * std::sin(phi) * dt - 0.8 * (y - baseline_y) * dt;
  }
}

// hover between two pen-down positions: smoothstep with a small arc
void append_air(Session& session, Rng& rng, double x_from, double y_from, double x_to,
                double y_to, double duration, std::size_t& tick_index, double noise,
                double dt, double tilt_base, double azimuth_base) {
  const auto n = static_cast<std::size_t>(std::max(2L, std::lround(duration / dt)));
  const double lift = rng.uniform(120.0, 360.0);  // apparent arc in y
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n);
    const double w = u * u * (3.0 - 2.0 * u);
    Sample s;
    s.pen_status = kPenInAir;
    s.t_ticks = static_cast<std::int64_t>(tick_index) * 5;
    s.t = static_cast<double>(s.t_ticks) / kTickRate;
    s.x = std::round(x_from + (x_to - x_from) * w + rng.normal(0.0, 2.0 * noise));
    s.y = std::round(y_from + (y_to - y_from) * w - lift * std::sin(M_PI * u) +
                     rng.normal(0.0, 2.0 * noise));
    s.pressure = 0.0;
    s.tilt = clamp_round(tilt_base + rng.normal(0.0, 2.0 * noise), 0, 90);
    double az = azimuth_base + rng.normal(0.0, 3.0 * noise);
    az = std::fmod(std::fmod(std::round(az), 360.0) + 360.0, 360.0);
    s.azimuth = az;
    session.samples.push_back(s);
    ++tick_index;
  }
}

}  // namespace

double implied_in_air_tempo_factor(const CohortSpec& spec) {
  return spec.interruption_rate_factor / spec.in_air_duration_factor;
}

std::map<std::string, double> expected_feature_ratios(const CohortSpec& spec) {
  // the in-air duration also carries the gap-count correction (n-1 gaps for n
  // strokes), evaluated at the group-mean stroke counts
  const double s = static_cast<double>(spec.strokes_per_session);
  const double gap_correction =
      (s * spec.interruption_rate_factor - 1.0) / ((s - 1.0) * spec.interruption_rate_factor);
  return {
      {"duration_writing:in_air:none", spec.in_air_duration_factor * gap_correction},
      {"interruptions:global:none", spec.interruption_rate_factor},
      {"stroke_height:on_surface:median", spec.stroke_height_factor},
      {"angular_velocity:on_surface:ncv", spec.angular_velocity_ncv_factor},
      {"tempo:in_air:none", implied_in_air_tempo_factor(spec)},
  };
}

std::vector<Session> generate_cohort(const CohortSpec& spec) {
  if (!spec.valid()) throw std::invalid_argument("invalid cohort spec");

  const int n_total = spec.n_intact + spec.n_dd;
  const double dt = 1.0 / spec.sampling_rate;
  std::vector<Session> cohort;
  cohort.reserve(static_cast<std::size_t>(n_total));

  for (int idx = 0; idx < n_total; ++idx) {
    Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(idx)));
    const bool dysgraphic = idx >= spec.n_intact;

    SubjectDraw draw;
    draw.severity = rng.normal(dysgraphic ? 1.0 : 0.0, 0.10 * spec.noise_scale);
    draw.m_interrupt = std::pow(spec.interruption_rate_factor, draw.severity);
    draw.m_air = std::pow(spec.in_air_duration_factor, draw.severity);
    draw.m_height = std::pow(spec.stroke_height_factor, draw.severity);
    draw.m_ang = std::pow(spec.angular_velocity_ncv_factor, draw.severity);

    Session session;
    session.sampling_rate = spec.sampling_rate;
    session.tick_rate = kTickRate;
    session.units_per_mm = kUnitsPerMm;
    char id[16];
    std::snprintf(id, sizeof(id), "S%04d", idx);
    session.subject_id = id;
    session.sex = rng.uniform01() < 0.5 ? Sex::girl : Sex::boy;
    session.class_year = rng.uniform01() < 0.5 ? 3 : 4;
    session.diagnosis = dysgraphic ? Diagnosis::dysgraphic : Diagnosis::intact;

    HpsqcScore score;
    score.legibility =
        clamp_round(2.0 + 7.0 * draw.severity + rng.normal(0.0, 1.2 * spec.noise_scale), 0, 12);
    score.performance_time =
        clamp_round(3.0 + 6.0 * draw.severity + rng.normal(0.0, 1.2 * spec.noise_scale), 0, 12);
    score.well_being =
        clamp_round(3.0 + 8.0 * draw.severity + rng.normal(0.0, 1.5 * spec.noise_scale), 0, 16);
    score.total = score.legibility + score.performance_time + score.well_being;
    session.hpsqc = score;

    const auto n_strokes = static_cast<int>(std::max(
        2L, std::lround(static_cast<double>(spec.strokes_per_session) * draw.m_interrupt *
                        rng.lognormal(0.0, 0.04 * spec.noise_scale))));
    // per-gap time scales with m_air / m_interrupt so the in-air total tracks
    // the duration factor while tempo follows count / duration
    const double gap_scale = draw.m_air / draw.m_interrupt;

    const double baseline_y = 20000.0;
    double x = 2000.0, y = baseline_y;
    std::size_t tick_index = 0;
    const double tilt_base = std::clamp(rng.normal(55.0, 6.0), 10.0, 80.0);
    const double azimuth_base = rng.normal(265.0, 15.0);

    if (rng.uniform01() < 0.7) {
      // leading hover before the first touch
      const double lead = rng.uniform(0.15, 0.4);
      append_air(session, rng, x - rng.uniform(200.0, 500.0), y - rng.uniform(100.0, 300.0), x,
                 y, lead, tick_index, spec.noise_scale, dt, tilt_base, azimuth_base);
    }

    for (int k = 0; k < n_strokes; ++k) {
      append_stroke(session, rng, x, y, baseline_y, tick_index, draw, spec.noise_scale, dt);
      const bool last = k + 1 == n_strokes;
      const double x_end = x, y_end = y;
      if (last) {
        // trailing hover after the final lift
        const double trail = rng.uniform(0.1, 0.3);
        append_air(session, rng, x_end, y_end, x_end + rng.uniform(100.0, 300.0),
                   y_end - rng.uniform(100.0, 300.0), trail, tick_index, spec.noise_scale, dt,
                   tilt_base, azimuth_base);
      } else {
        const double gap =
            kBaseGapDuration * gap_scale * rng.lognormal(0.0, 0.18 * spec.noise_scale);
        double x_next = x_end + rng.uniform(250.0, 550.0);
        double y_next = baseline_y + rng.normal(0.0, 120.0 * spec.noise_scale);
        append_air(session, rng, x_end, y_end, x_next, y_next, gap, tick_index,
                   spec.noise_scale, dt, tilt_base, azimuth_base);
        x = x_next;
        y = y_next;
      }
    }
    cohort.push_back(std::move(session));
  }
  return cohort;
}

}  // namespace pentrace
