#include "pentrace/shap.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "pentrace/stats.hpp"

namespace pentrace {

namespace {

// decision-path bookkeeping for the polynomial-time SHAP recursion
struct PathElement {
  int feature_index = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(PathElement* path, unsigned depth, double zero_fraction, double one_fraction,
                 int feature_index) {
  path[depth].feature_index = feature_index;
  path[depth].zero_fraction = zero_fraction;
  path[depth].one_fraction = one_fraction;
  path[depth].pweight = depth == 0 ? 1.0 : 0.0;
  for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / (depth + 1.0);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / (depth + 1.0);
  }
}

void unwind_path(PathElement* path, unsigned depth, unsigned index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;

  for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one_portion * (depth + 1.0) / ((i + 1) * one_fraction);
      next_one_portion = tmp - path[i].pweight * zero_fraction * (depth - i) / (depth + 1.0);
    } else {
      path[i].pweight = path[i].pweight * (depth + 1.0) / (zero_fraction * (depth - i));
    }
  }
  for (unsigned i = index; i < depth; ++i) {
    path[i].feature_index = path[i + 1].feature_index;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_path_sum(const PathElement* path, unsigned depth, unsigned index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  double total = 0.0;
  for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = next_one_portion * (depth + 1.0) / ((i + 1) * one_fraction);
      total += tmp;
      next_one_portion = path[i].pweight - tmp * zero_fraction * (depth - i) / (depth + 1.0);
    } else if (zero_fraction != 0.0) {
      total += (path[i].pweight / zero_fraction) / ((depth - i) / (depth + 1.0));
    }
  }
  return total;
}

int hot_child(const TreeNode& n, double value) {
  if (std::isnan(value)) return n.default_left ? n.left : n.right;
  return value < n.threshold ? n.left : n.right;
}

void tree_shap_recurse(const Tree& tree, std::span<const double> row, double* phi,
                       int node_index, unsigned unique_depth, PathElement* parent_path,
                       double parent_zero_fraction, double parent_one_fraction,
                       int parent_feature_index) {
  const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_index)];

  PathElement* path = parent_path + unique_depth + 1;
  std::copy(parent_path, parent_path + unique_depth + 1, path);
  extend_path(path, unique_depth, parent_zero_fraction, parent_one_fraction,
              parent_feature_index);

  if (node.left < 0) {
    for (unsigned i = 1; i <= unique_depth; ++i) {
      const double w = unwound_path_sum(path, unique_depth, i);
      const PathElement& el = path[i];
      phi[el.feature_index] += w * (el.one_fraction - el.zero_fraction) * node.weight;
    }
    return;
  }

  const int hot = hot_child(node, row[static_cast<std::size_t>(node.feature)]);
  const int cold = hot == node.left ? node.right : node.left;
  const double w = node.cover;
  const double hot_zero_fraction = tree.nodes[static_cast<std::size_t>(hot)].cover / w;
  const double cold_zero_fraction = tree.nodes[static_cast<std::size_t>(cold)].cover / w;
  double incoming_zero_fraction = 1.0;
  double incoming_one_fraction = 1.0;

  // an earlier split on the same feature is undone and redone at this node
  unsigned path_index = 0;
  for (; path_index <= unique_depth; ++path_index)
    if (path[path_index].feature_index == node.feature) break;
  if (path_index != unique_depth + 1) {
    incoming_zero_fraction = path[path_index].zero_fraction;
    incoming_one_fraction = path[path_index].one_fraction;
    unwind_path(path, unique_depth, path_index);
    unique_depth -= 1;
  }

  tree_shap_recurse(tree, row, phi, hot, unique_depth + 1, path,
                    hot_zero_fraction * incoming_zero_fraction, incoming_one_fraction,
                    node.feature);
  tree_shap_recurse(tree, row, phi, cold, unique_depth + 1, path,
                    cold_zero_fraction * incoming_zero_fraction, 0.0, node.feature);
}

double tree_expected_value(const Tree& tree, int node_index) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(node_index)];
  if (n.left < 0) return n.weight;
  const double lw = tree.nodes[static_cast<std::size_t>(n.left)].cover;
  const double rw = tree.nodes[static_cast<std::size_t>(n.right)].cover;
  return (lw * tree_expected_value(tree, n.left) + rw * tree_expected_value(tree, n.right)) /
         (lw + rw);
}

std::size_t ensemble_limit(const GbtModel& model) {
  return model.best_iteration >= 0
             ? std::min(model.trees.size(), static_cast<std::size_t>(model.best_iteration) + 1)
             : model.trees.size();
}

}  // namespace

double expected_margin(const GbtModel& model) {
  double e = model.base_score;
  const std::size_t limit = ensemble_limit(model);
  for (std::size_t t = 0; t < limit; ++t)
    if (!model.trees[t].nodes.empty()) e += tree_expected_value(model.trees[t], 0);
  return e;
}

ShapExplanation tree_shap(const GbtModel& model, std::span<const double> row) {
  ShapExplanation ex;
  ex.attributions.assign(model.feature_names.size(), 0.0);
  ex.base_value = expected_margin(model);
  ex.model_output = model.predict_margin(row);

  const std::size_t limit = ensemble_limit(model);
  for (std::size_t t = 0; t < limit; ++t) {
    const Tree& tree = model.trees[t];
    if (tree.nodes.empty() || tree.nodes[0].left < 0) continue;  // leaf-only tree
    const int maxd = tree.depth() + 2;
    std::vector<PathElement> path(static_cast<std::size_t>(maxd * (maxd + 1)) / 2);
    tree_shap_recurse(tree, row, ex.attributions.data(), 0, 0, path.data(), 1.0, 1.0, -1);
  }
  return ex;
}

GlobalImportanceReport global_importance(const GbtModel& model, const FeatureMatrix& m) {
  GlobalImportanceReport report;
  const std::size_t n_features = model.feature_names.size();
  report.base_value = expected_margin(model);

  std::vector<double> mean_abs(n_features, 0.0);
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    const ShapExplanation ex = tree_shap(model, m.values[r]);
    for (std::size_t f = 0; f < n_features; ++f) mean_abs[f] += std::abs(ex.attributions[f]);
    report.attributions.push_back(ex.attributions);
    report.values.push_back(m.values[r]);
  }
  if (m.n_rows() > 0)
    for (auto& v : mean_abs) v /= static_cast<double>(m.n_rows());

  std::vector<std::size_t> order(n_features);
  for (std::size_t i = 0; i < n_features; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mean_abs[a] > mean_abs[b]; });

  for (std::size_t f : order) {
    FeatureImportance fi;
    fi.feature = model.feature_names[f];
    fi.mean_abs_shap = mean_abs[f];
    // direction: rank correlation between feature value and attribution
    std::vector<double> vals, attrs;
    for (std::size_t r = 0; r < report.values.size(); ++r) {
      if (std::isnan(report.values[r][f])) continue;
      vals.push_back(report.values[r][f]);
      attrs.push_back(report.attributions[r][f]);
    }
    if (vals.size() >= 3) {
      const StatResult sr = spearman(vals, attrs);
      if (!sr.missing) fi.direction = sr.direction;
    }
    report.ranking.push_back(std::move(fi));
  }
  return report;
}

std::string shap_csv(const GlobalImportanceReport& r, const std::vector<std::string>& row_ids,
                     const std::vector<std::string>& feature_names) {
  std::string out = "subject_id";
  for (const auto& f : feature_names) {
    out += ",";
    out += f;
  }
  out += '\n';
  for (std::size_t i = 0; i < r.attributions.size(); ++i) {
    out += i < row_ids.size() ? row_ids[i] : std::to_string(i);
    for (double a : r.attributions[i]) {
      out += ',';
      out += std::to_string(a);
    }
    out += '\n';
  }
  return out;
}

std::string importance_json(const GlobalImportanceReport& r, std::size_t top_k) {
  nlohmann::json j;
  j["base_value"] = r.base_value;
  j["scale"] = "margin";
  nlohmann::json top = nlohmann::json::array();
  for (std::size_t i = 0; i < std::min(top_k, r.ranking.size()); ++i) {
    top.push_back({{"feature", r.ranking[i].feature},
                   {"mean_abs_shap", r.ranking[i].mean_abs_shap},
                   {"direction", r.ranking[i].direction}});
  }
  j["top"] = std::move(top);
  return j.dump(2) + "\n";
}

}  // namespace pentrace
