#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pentrace/signal.hpp"

namespace pentrace {

enum class Aggregation { none, median, ncv, p95, slope };

const char* to_string(Aggregation a);

// Knobs for feature extraction. Defaults are the documented module defaults;
// they are embedded in every exported artifact.
struct FeatureConfig {
  bool include_boundary_air = false;  // leading/trailing in-air runs
  int entropy_bins = 32;
  double pen_stop_velocity_fraction = 0.10;  // of the session's on-surface p95 speed
  double pen_stop_min_duration = 0.030;      // seconds
  std::optional<double> units_per_mm;        // convert spatial units to mm when set
};

// One named scalar. Missing values (e.g. ncv of a constant vector) carry no
// value but keep their catalog slot.
struct FeatureValue {
  std::string name;
  std::optional<double> value;
  Surface surface = Surface::global_;
  Aggregation aggregation = Aggregation::none;
};

struct CatalogEntry {
  std::string name;
  std::string signal;
  std::string projection;  // "", "horizontal", "vertical"
  Surface surface = Surface::global_;
  Aggregation aggregation = Aggregation::none;
  std::string unit;
  std::string description;
  bool nonstandard = false;
};

// The canonical feature catalog; fixed order, stable names of the form
// <signal>[:<projection>]:<surface>:<aggregation>.
const std::vector<CatalogEntry>& feature_catalog();
std::string catalog_json();

std::vector<FeatureValue> temporal_features(const Session& s, const FeatureConfig& cfg = {});
std::vector<FeatureValue> kinematic_features(const Session& s, const FeatureConfig& cfg = {});
std::vector<FeatureValue> dynamic_features(const Session& s, const FeatureConfig& cfg = {});
std::vector<FeatureValue> spatial_features(const Session& s, const FeatureConfig& cfg = {});
std::vector<FeatureValue> other_features(const Session& s, const FeatureConfig& cfg = {});

// All families, in catalog order.
std::vector<FeatureValue> extract_features(const Session& s, const FeatureConfig& cfg = {});

struct RowMeta {
  std::string subject_id;
  std::optional<Sex> sex;
  std::optional<int> class_year;
  std::optional<Diagnosis> diagnosis;
  std::optional<HpsqcScore> hpsqc;
};

// Dense per-session feature table. Cells are doubles with NaN as the missing
// marker; is_missing() is the mask accessor. Row order follows input order,
// column order follows the catalog.
struct FeatureMatrix {
  std::vector<std::string> columns;
  std::vector<RowMeta> meta;
  std::vector<std::vector<double>> values;  // [row][col]

  static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

  std::size_t n_rows() const { return values.size(); }
  std::size_t n_cols() const { return columns.size(); }
  bool is_missing(std::size_t row, std::size_t col) const { return std::isnan(values[row][col]); }
  int column_index(const std::string& name) const;  // -1 when absent

  // Values of one column with their row indices, missing cells skipped.
  std::vector<std::pair<std::size_t, double>> column_present(std::size_t col) const;
};

// Validates every session first (error-severity diagnostics abort, naming the
// subject), then extracts all features. Deterministic: row order = input
// order, column order = catalog order.
FeatureMatrix extract_all(const std::vector<Session>& sessions, const FeatureConfig& cfg = {});

std::string matrix_to_csv(const FeatureMatrix& m);
FeatureMatrix matrix_from_csv(std::string_view csv);
std::string matrix_to_json(const FeatureMatrix& m);
FeatureMatrix matrix_from_json(std::string_view json_text);

}  // namespace pentrace
