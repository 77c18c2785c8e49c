#include "pentrace/signal.hpp"

namespace pentrace {

const char* to_string(Sex s) { return s == Sex::girl ? "girl" : "boy"; }

const char* to_string(Diagnosis d) { return d == Diagnosis::intact ? "intact" : "dysgraphic"; }

std::optional<Sex> sex_from_string(const std::string& s) {
  if (s == "girl") return Sex::girl;
  if (s == "boy") return Sex::boy;
  return std::nullopt;
}

std::optional<Diagnosis> diagnosis_from_string(const std::string& s) {
  if (s == "intact") return Diagnosis::intact;
  if (s == "dysgraphic") return Diagnosis::dysgraphic;
  return std::nullopt;
}

const char* to_string(Surface s) {
  switch (s) {
    case Surface::on_surface: return "on_surface";
    case Surface::in_air: return "in_air";
    default: return "global";
  }
}

const char* to_string(DiagnosticCode c) {
  switch (c) {
    case DiagnosticCode::non_monotone_time: return "NON_MONOTONE_TIME";
    case DiagnosticCode::bad_pen_status: return "BAD_PEN_STATUS";
    case DiagnosticCode::pressure_in_air: return "PRESSURE_IN_AIR";
    case DiagnosticCode::negative_pressure: return "NEGATIVE_PRESSURE";
    case DiagnosticCode::tilt_out_of_range: return "TILT_OUT_OF_RANGE";
    case DiagnosticCode::azimuth_out_of_range: return "AZIMUTH_OUT_OF_RANGE";
    case DiagnosticCode::no_on_surface_samples: return "NO_ON_SURFACE_SAMPLES";
    case DiagnosticCode::empty_session: return "EMPTY_SESSION";
  }
  return "UNKNOWN";
}

const char* to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

std::vector<Stroke> segment_strokes(const Session& session) {
  std::vector<Stroke> strokes;
  const auto& samples = session.samples;
  if (samples.empty()) return strokes;

  std::size_t begin = 0;
  for (std::size_t i = 1; i <= samples.size(); ++i) {
    if (i == samples.size() || samples[i].pen_status != samples[begin].pen_status) {
      Stroke s;
      s.surface = samples[begin].pen_status == kPenOnSurface ? Surface::on_surface
                                                             : Surface::in_air;
      s.begin = begin;
      s.end = i;
      s.index = strokes.size();
      strokes.push_back(s);
      begin = i;
    }
  }
  return strokes;
}

std::vector<Diagnostic> validate(const Session& session) {
  std::vector<Diagnostic> diags;
  const auto& samples = session.samples;

  if (samples.empty()) {
    diags.push_back({DiagnosticCode::empty_session, Severity::error, 0, "session has no samples"});
    return diags;
  }

  bool any_on_surface = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (i > 0 && !(s.t > samples[i - 1].t)) {
      diags.push_back({DiagnosticCode::non_monotone_time, Severity::error, i,
                       "timestamp not strictly increasing"});
    }
    if (s.pen_status != kPenInAir && s.pen_status != kPenOnSurface) {
      diags.push_back({DiagnosticCode::bad_pen_status, Severity::error, i,
                       "pen_status outside {0, 1}"});
      continue;
    }
    if (s.pen_status == kPenOnSurface) any_on_surface = true;
    if (s.pen_status == kPenInAir && s.pressure > 0.0) {
      diags.push_back({DiagnosticCode::pressure_in_air, Severity::error, i,
                       "nonzero pressure while in-air"});
    }
    if (s.pressure < 0.0) {
      diags.push_back({DiagnosticCode::negative_pressure, Severity::error, i,
                       "negative pressure"});
    }
    if (s.tilt < 0.0 || s.tilt > 90.0) {
      diags.push_back({DiagnosticCode::tilt_out_of_range, Severity::warning, i,
                       "tilt outside [0, 90] degrees"});
    }
    if (s.azimuth < 0.0 || s.azimuth >= 360.0) {
      diags.push_back({DiagnosticCode::azimuth_out_of_range, Severity::warning, i,
                       "azimuth outside [0, 360) degrees"});
    }
  }

  if (!any_on_surface) {
    diags.push_back({DiagnosticCode::no_on_surface_samples, Severity::error, 0,
                     "no on-surface samples; feature extraction needs at least one"});
  }
  return diags;
}

}  // namespace pentrace
