#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pentrace/features.hpp"

namespace pentrace {

enum class Objective { logistic, squared_error };

const char* to_string(Objective o);

// Hyperparameters. The *_grid() accessors list the values the randomized
// search draws from; n_rounds and reg_lambda are fixed defaults outside the
// search space.
struct GbtConfig {
  double learning_rate = 0.3;
  double gamma = 0.0;
  int max_depth = 6;
  double subsample = 1.0;
  double colsample_bylevel = 1.0;
  double colsample_bytree = 1.0;
  double min_child_weight = 1.0;
  double scale_pos_weight = 1.0;
  int n_rounds = 100;
  double reg_lambda = 1.0;
  Objective objective = Objective::logistic;
  std::uint64_t seed = 0;
  bool early_stopping = false;      // 20% holdout, stop after 20 stale rounds
  int early_stopping_rounds = 20;
};

struct GbtGrid {
  std::vector<double> learning_rate{0.001, 0.01, 0.1, 0.2, 0.3};
  std::vector<double> gamma{0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.5};
  std::vector<int> max_depth{6, 8, 10, 12, 15};
  std::vector<double> subsample{0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> colsample_bylevel{0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> colsample_bytree{0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> min_child_weight{0.5, 1.0, 3.0, 5.0, 7.0, 10.0};
  std::vector<double> scale_pos_weight{1.0, 2.0, 3.0, 4.0};
};

// Binary regression-tree node. Leaves carry the learning-rate-scaled weight;
// internal nodes carry the split and the learned default direction for
// missing values. cover is the hessian sum of the training rows through the
// node (used by the SHAP conditional expectations).
struct TreeNode {
  int left = -1;    // -1 for leaves
  int right = -1;
  int feature = -1;
  double threshold = 0.0;       // x < threshold goes left
  bool default_left = true;     // routing for missing values
  double weight = 0.0;          // leaf value (already scaled)
  double cover = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root

  bool leaf(int i) const { return nodes[i].left < 0; }
  int depth() const;
  // Leaf index for a feature row (NaN = missing).
  int route(std::span<const double> row) const;
  double predict(std::span<const double> row) const { return nodes[route(row)].weight; }
};

struct GbtModel {
  std::vector<Tree> trees;
  double base_score = 0.0;
  GbtConfig config;
  std::vector<std::string> feature_names;
  int best_iteration = -1;  // set when early stopping trimmed the ensemble

  // Margin (pre-sigmoid) prediction.
  double predict_margin(std::span<const double> row) const;
  // Probability for logistic, margin for squared error.
  double predict(std::span<const double> row) const;
  // predict with name validation; throws on unknown feature names.
  double predict_named(const std::vector<std::pair<std::string, double>>& row) const;
};

// Newton boosting with exact greedy splits, sparsity-aware missing handling,
// and deterministic tie-breaking (lowest feature index, then lowest
// threshold, then missing-left). Throws on degenerate targets.
GbtModel train_gbt(const std::vector<std::vector<double>>& rows, std::span<const double> target,
                   const GbtConfig& config, const std::vector<std::string>& feature_names);

GbtModel train_gbt(const FeatureMatrix& m, std::span<const double> target,
                   const GbtConfig& config);

std::string model_to_json(const GbtModel& model);
GbtModel model_from_json(std::string_view json_text);

}  // namespace pentrace
