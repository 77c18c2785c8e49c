#pragma once

#include <span>
#include <string>
#include <vector>

#include "pentrace/gbt.hpp"

namespace pentrace {

// Per-row attribution on the margin (pre-sigmoid) scale.
// base_value + sum(attributions) == predict_margin(row) (local accuracy).
struct ShapExplanation {
  std::vector<double> attributions;  // one per model feature
  double base_value = 0.0;           // expected margin output
  double model_output = 0.0;         // margin prediction for the row
};

// Path-dependent TreeSHAP: conditional expectations weighted by node cover,
// summed across trees.
ShapExplanation tree_shap(const GbtModel& model, std::span<const double> row);

// Cover-weighted expected margin of the ensemble (base_value of every
// explanation).
double expected_margin(const GbtModel& model);

struct FeatureImportance {
  std::string feature;
  double mean_abs_shap = 0.0;
  int direction = 0;  // sign of rank correlation between value and attribution
};

struct GlobalImportanceReport {
  std::vector<FeatureImportance> ranking;          // descending mean |SHAP|
  std::vector<std::vector<double>> attributions;   // [row][feature]
  std::vector<std::vector<double>> values;         // matching feature values
  double base_value = 0.0;
};

GlobalImportanceReport global_importance(const GbtModel& model, const FeatureMatrix& m);

// CSV of per-row attributions (row id x feature) for beeswarm-style plotting.
std::string shap_csv(const GlobalImportanceReport& r, const std::vector<std::string>& row_ids,
                     const std::vector<std::string>& feature_names);
// JSON top-k report.
std::string importance_json(const GlobalImportanceReport& r, std::size_t top_k);

}  // namespace pentrace
