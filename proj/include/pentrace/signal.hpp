#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pentrace {

inline constexpr int kPenInAir = 0;
inline constexpr int kPenOnSurface = 1;

// One tablet sample. Positions and pressure are raw device units; angles are
// degrees; t is seconds derived from the raw tick timestamp.
struct Sample {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;             // seconds
  int pen_status = kPenOnSurface;
  double pressure = 0.0;      // 0 whenever pen_status == 0
  double tilt = 0.0;          // [0, 90]
  double azimuth = 0.0;       // [0, 360)
  std::int64_t t_ticks = 0;   // raw timestamp as read, for lossless output
};

enum class Sex { girl, boy };
enum class Diagnosis { intact, dysgraphic };

const char* to_string(Sex s);
const char* to_string(Diagnosis d);
std::optional<Sex> sex_from_string(const std::string& s);
std::optional<Diagnosis> diagnosis_from_string(const std::string& s);

// Children's self-report questionnaire scores. total is the sum of the three
// sub-scores by construction.
struct HpsqcScore {
  int legibility = 0;        // [0, 12]
  int performance_time = 0;  // [0, 12]
  int well_being = 0;        // [0, 16]
  int total = 0;             // [0, 40], = sum of the above

  bool consistent() const {
    return total == legibility + performance_time + well_being && legibility >= 0 &&
           legibility <= 12 && performance_time >= 0 && performance_time <= 12 &&
           well_being >= 0 && well_being <= 16;
  }
};

// One recording plus demographics. Immutable after construction by convention;
// all operations on it are pure.
struct Session {
  std::vector<Sample> samples;
  double sampling_rate = 200.0;      // nominal Hz
  std::string subject_id;
  std::optional<Sex> sex;
  std::optional<int> class_year;     // {3, 4}
  std::optional<Diagnosis> diagnosis;
  std::optional<HpsqcScore> hpsqc;
  double tick_rate = 1000.0;         // raw timestamp ticks per second
  std::optional<double> units_per_mm;
};

enum class Surface { on_surface, in_air, global_ };

const char* to_string(Surface s);

// Maximal run of samples sharing one pen status. Holds [begin, end) indices
// into the owning session's sample vector.
struct Stroke {
  Surface surface = Surface::on_surface;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t index = 0;  // ordinal within the session

  std::size_t size() const { return end - begin; }
  std::span<const Sample> samples(const Session& s) const {
    return std::span<const Sample>(s.samples).subspan(begin, end - begin);
  }
};

enum class DiagnosticCode {
  non_monotone_time,
  bad_pen_status,
  pressure_in_air,
  negative_pressure,
  tilt_out_of_range,
  azimuth_out_of_range,
  no_on_surface_samples,
  empty_session,
};

enum class Severity { warning, error };

const char* to_string(DiagnosticCode c);
const char* to_string(Severity s);

struct Diagnostic {
  DiagnosticCode code;
  Severity severity;
  std::size_t sample_index = 0;  // first offending sample, when applicable
  std::string message;
};

// Splits the session into maximal constant-pen-status runs, in temporal
// order, covering every sample exactly once. Empty session -> empty list.
std::vector<Stroke> segment_strokes(const Session& session);

// Machine-readable invariant checks; never mutates the session.
std::vector<Diagnostic> validate(const Session& session);

inline bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags)
    if (d.severity == Severity::error) return true;
  return false;
}

}  // namespace pentrace
