#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pentrace/gbt.hpp"
#include "pentrace/metrics.hpp"

namespace pentrace {

// fold id per row, one vector per repeat.
struct FoldPlan {
  int k = 10;
  int repeats = 10;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> assignments;  // [repeat][row] -> fold in [0, k)
  std::vector<std::string> warnings;
};

// Stratified k-fold repeated `repeats` times. Strata with fewer than k
// members shrink k with a warning. Continuous targets are stratified by
// quartile bins before calling this.
FoldPlan stratified_repeated_kfold(std::span<const int> strata, int k, int repeats,
                                   std::uint64_t seed);

// Quartile bin ids (0..3) for continuous targets; ties collapse bins.
std::vector<int> quartile_bins(std::span<const double> target);

struct MetricSummary {
  double mean = 0.0;
  double std_dev = 0.0;
};

struct FoldMetrics {
  int repeat = 0;
  int fold = 0;
  ClassificationMetrics cls;
  RegressionMetrics reg;
};

struct EvalReport {
  Objective objective = Objective::logistic;
  // classification
  MetricSummary bacc, mcc, sen, spe;
  // regression
  MetricSummary mae, mse, rmse, eer;
  std::vector<FoldMetrics> folds;                 // per-fold detail, all repeats
  std::vector<std::vector<int>> fold_assignments; // reproducible given seed
  int k = 10;
  int repeats = 10;
  std::uint64_t seed = 0;
  double score_range = 1.0;                       // regression EER denominator
};

struct CvOptions {
  int k = 10;
  int repeats = 10;
  double score_range = 1.0;              // regression only
  bool confound_within_folds = false;    // re-fit confound regression per fold
  std::vector<int> confound_levels;      // used when the flag above is set
};

// Cross-validated evaluation of one configuration.
EvalReport cross_validate(const std::vector<std::vector<double>>& rows,
                          std::span<const double> target, const GbtConfig& config,
                          const std::vector<std::string>& feature_names, const CvOptions& opt,
                          std::uint64_t fold_seed);

struct SearchResult {
  GbtConfig best_config;
  EvalReport best_report;
  int best_iteration = -1;  // index within the sampled sequence
  int n_evaluated = 0;
  std::vector<std::string> diagnostics;  // skipped configs etc.
};

struct SearchOptions {
  int n_iter = 500;
  std::uint64_t seed = 0;
  int n_jobs = 1;
  CvOptions cv;
  GbtGrid grid;
  Objective objective = Objective::logistic;
  int n_rounds = 100;
  bool early_stopping = false;
};

// Randomized hyperparameter search: n_iter configs sampled uniformly (with
// replacement) from the grid, each scored by stratified repeated k-fold CV.
// Selection metric: MCC for classification, MAE for regression. Training
// failures skip the config with a diagnostic. Fully reproducible from seed,
// independent of n_jobs scheduling.
SearchResult random_search(const std::vector<std::vector<double>>& rows,
                           std::span<const double> target,
                           const std::vector<std::string>& feature_names,
                           const SearchOptions& opt);

GbtConfig sample_config(const GbtGrid& grid, Objective objective, int n_rounds,
                        std::uint64_t config_seed);

std::string eval_report_to_json(const EvalReport& r);
std::string eval_report_to_csv(const EvalReport& r);

}  // namespace pentrace
