#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pentrace/signal.hpp"

namespace pentrace {

// Parametric cohort generator. Each subject carries a latent severity scalar
// (near 0 for intact, near 1 for the dysgraphic group); every effect factor
// is applied as factor^severity, so factors of 1.0 make the groups
// distributionally identical and the same latent drives both the diagnosis
// and the questionnaire scores.
struct CohortSpec {
  int n_intact = 60;
  int n_dd = 60;
  std::uint64_t seed = 0;

  double in_air_duration_factor = 1.6;      // total in-air time, group-level
  double interruption_rate_factor = 1.4;    // pen elevations per session
  double stroke_height_factor = 1.5;        // on-surface stroke height
  double angular_velocity_ncv_factor = 1.3; // median/IQR of |angular velocity|
  double in_air_tempo_factor = 0.7;         // direction metadata; see note below

  double noise_scale = 1.0;                 // within-group spread multiplier
  int strokes_per_session = 10;             // mean on-surface stroke count
  double sampling_rate = 200.0;

  bool valid() const {
    return n_intact >= 1 && n_dd >= 1 && in_air_duration_factor > 0 &&
           interruption_rate_factor > 0 && stroke_height_factor > 0 &&
           angular_velocity_ncv_factor > 0 && in_air_tempo_factor > 0 && noise_scale >= 0 &&
           strokes_per_session >= 1 && sampling_rate > 0;
  }
};

// In-air tempo is stroke count over in-air time, so its group ratio is pinned
// to interruption_rate_factor / in_air_duration_factor by arithmetic; the
// spec field sets the intended direction and is checked for sign agreement.
double implied_in_air_tempo_factor(const CohortSpec& spec);

// Expected DD/intact group ratios of the directly driven features, from the
// generator's own closed forms. Keys are canonical feature names.
std::map<std::string, double> expected_feature_ratios(const CohortSpec& spec);

// Deterministic: per-subject RNG streams are derived from (seed, index), so
// generation order never changes output. Sessions validate cleanly and carry
// diagnosis + HPSQ-C scores.
std::vector<Session> generate_cohort(const CohortSpec& spec);

}  // namespace pentrace
