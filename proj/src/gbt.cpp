#include "pentrace/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "pentrace/rng.hpp"

namespace pentrace {

const char* to_string(Objective o) {
  return o == Objective::logistic ? "logistic" : "squared_error";
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int maxd = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].left >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      maxd = std::max(maxd, d[i] + 1);
    }
  }
  return maxd;
}

int Tree::route(std::span<const double> row) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].left >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    const double v = row[static_cast<std::size_t>(n.feature)];
    if (std::isnan(v))
      i = n.default_left ? n.left : n.right;
    else
      i = v < n.threshold ? n.left : n.right;
  }
  return i;
}

double GbtModel::predict_margin(std::span<const double> row) const {
  double m = base_score;
  const std::size_t limit = best_iteration >= 0
                                ? std::min(trees.size(), static_cast<std::size_t>(best_iteration) + 1)
                                : trees.size();
  for (std::size_t i = 0; i < limit; ++i) m += trees[i].predict(row);
  return m;
}

double GbtModel::predict(std::span<const double> row) const {
  const double m = predict_margin(row);
  return config.objective == Objective::logistic ? 1.0 / (1.0 + std::exp(-m)) : m;
}

double GbtModel::predict_named(const std::vector<std::pair<std::string, double>>& row) const {
  std::vector<double> aligned(feature_names.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& [name, value] : row) {
    auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) throw std::invalid_argument("unknown feature name: " + name);
    aligned[static_cast<std::size_t>(it - feature_names.begin())] = value;
  }
  return predict(aligned);
}

namespace {

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
  double left_g = 0.0, left_h = 0.0;  // left child stats, missing included
};

struct BuildNode {
  double g = 0.0, h = 0.0;
  int depth = 0;
  int left = -1, right = -1;
  bool open = false;
  SplitChoice best;
};

double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
  const double gt = gl + gr, ht = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - gt * gt / (ht + lambda)) -
         gamma;
}

// without-replacement prefix of a Fisher-Yates shuffle
std::vector<int> sample_indices(int n, int count, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < count; ++i) {
    const int j = i + rng.below_int(n - i);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

int sample_count(double rate, std::size_t n) {
  return std::clamp(static_cast<int>(std::lround(rate * static_cast<double>(n))), 1,
                    static_cast<int>(n));
}

struct Columns {
  std::size_t n_rows = 0;
  std::vector<std::vector<double>> col;  // [feature][row]
  std::vector<std::vector<int>> sorted;  // present rows, ascending value
};

Columns make_columns(const std::vector<std::vector<double>>& rows, std::size_t n_features) {
  Columns c;
  c.n_rows = rows.size();
  c.col.assign(n_features, std::vector<double>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != n_features)
      throw std::invalid_argument("row width mismatch in training data");
    for (std::size_t f = 0; f < n_features; ++f) c.col[f][r] = rows[r][f];
  }
  c.sorted.resize(n_features);
  for (std::size_t f = 0; f < n_features; ++f) {
    auto& s = c.sorted[f];
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (!std::isnan(c.col[f][r])) s.push_back(static_cast<int>(r));
    std::stable_sort(s.begin(), s.end(),
                     [&](int a, int b) { return c.col[f][a] < c.col[f][b]; });
  }
  return c;
}

Tree build_tree(const Columns& cols, std::span<const double> grad, std::span<const double> hess,
                std::span<const int> row_set, const GbtConfig& cfg, Rng& rng) {
  const std::size_t n_features = cols.col.size();

  std::vector<int> tree_feats(n_features);
  std::iota(tree_feats.begin(), tree_feats.end(), 0);
  if (cfg.colsample_bytree < 1.0) {
    tree_feats = sample_indices(static_cast<int>(n_features),
                                sample_count(cfg.colsample_bytree, n_features), rng);
    std::sort(tree_feats.begin(), tree_feats.end());
  }

  std::vector<int> row_node(cols.n_rows, -1);
  std::vector<BuildNode> build(1);
  for (int r : row_set) {
    row_node[static_cast<std::size_t>(r)] = 0;
    build[0].g += grad[static_cast<std::size_t>(r)];
    build[0].h += hess[static_cast<std::size_t>(r)];
  }
  build[0].open = cfg.max_depth > 0;

  std::vector<int> level = {0};
  while (!level.empty() && build[static_cast<std::size_t>(level[0])].open) {
    std::vector<int> feats = tree_feats;
    if (cfg.colsample_bylevel < 1.0) {
      const auto picked = sample_indices(static_cast<int>(tree_feats.size()),
                                         sample_count(cfg.colsample_bylevel, tree_feats.size()),
                                         rng);
      feats.clear();
      for (int p : picked) feats.push_back(tree_feats[static_cast<std::size_t>(p)]);
      std::sort(feats.begin(), feats.end());
    }

    const std::size_t n_nodes = build.size();
    std::vector<double> present_g(n_nodes), present_h(n_nodes);
    std::vector<double> run_g(n_nodes), run_h(n_nodes);
    std::vector<double> prev_val(n_nodes);
    std::vector<int> seen(n_nodes);

    for (int f : feats) {
      const auto& order = cols.sorted[static_cast<std::size_t>(f)];
      const auto& vals = cols.col[static_cast<std::size_t>(f)];

      for (int ni : level) {
        const auto u = static_cast<std::size_t>(ni);
        present_g[u] = present_h[u] = run_g[u] = run_h[u] = 0.0;
        seen[u] = 0;
      }
      for (int r : order) {
        const int ni = row_node[static_cast<std::size_t>(r)];
        if (ni < 0 || !build[static_cast<std::size_t>(ni)].open) continue;
        present_g[static_cast<std::size_t>(ni)] += grad[static_cast<std::size_t>(r)];
        present_h[static_cast<std::size_t>(ni)] += hess[static_cast<std::size_t>(r)];
      }

      for (int r : order) {
        const int ni_s = row_node[static_cast<std::size_t>(r)];
        if (ni_s < 0) continue;
        const auto ni = static_cast<std::size_t>(ni_s);
        BuildNode& node = build[ni];
        if (!node.open) continue;
        const double v = vals[static_cast<std::size_t>(r)];
        if (seen[ni] > 0 && v > prev_val[ni]) {
          const double threshold = 0.5 * (prev_val[ni] + v);
          const double miss_g = node.g - present_g[ni];
          const double miss_h = node.h - present_h[ni];
          // evaluate missing-left first; strictly better gain wins, so ties
          // keep the lowest feature, lowest threshold, left default
          for (int dir = 0; dir < 2; ++dir) {
            const double gl = run_g[ni] + (dir == 0 ? miss_g : 0.0);
            const double hl = run_h[ni] + (dir == 0 ? miss_h : 0.0);
            const double gr = node.g - gl;
            const double hr = node.h - hl;
            if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) continue;
            const double gain = split_gain(gl, hl, gr, hr, cfg.reg_lambda, cfg.gamma);
            if (gain > node.best.gain) node.best = {gain, f, threshold, dir == 0, gl, hl};
          }
        }
        run_g[ni] += grad[static_cast<std::size_t>(r)];
        run_h[ni] += hess[static_cast<std::size_t>(r)];
        prev_val[ni] = v;
        seen[ni]++;
      }
    }

    std::vector<int> next_level;
    for (int ni : level) {
      BuildNode& node = build[static_cast<std::size_t>(ni)];
      node.open = false;
      if (node.best.feature < 0 || node.best.gain <= 0.0) continue;
      BuildNode left, right;
      left.g = node.best.left_g;
      left.h = node.best.left_h;
      right.g = node.g - left.g;
      right.h = node.h - left.h;
      left.depth = right.depth = node.depth + 1;
      left.open = right.open = node.depth + 1 < cfg.max_depth;
      const int li = static_cast<int>(build.size());
      build.push_back(left);
      build.push_back(right);
      // note: `node` reference may dangle after push_back; re-index
      BuildNode& parent = build[static_cast<std::size_t>(ni)];
      parent.left = li;
      parent.right = li + 1;
      next_level.push_back(li);
      next_level.push_back(li + 1);
    }
    if (next_level.empty()) break;

    for (std::size_t r = 0; r < cols.n_rows; ++r) {
      const int ni = row_node[r];
      if (ni < 0) continue;
      const BuildNode& node = build[static_cast<std::size_t>(ni)];
      if (node.left < 0) continue;
      const double v = cols.col[static_cast<std::size_t>(node.best.feature)][r];
      const bool go_left = std::isnan(v) ? node.best.default_left : v < node.best.threshold;
      row_node[r] = go_left ? node.left : node.right;
    }
    level = std::move(next_level);
    if (!level.empty() && !build[static_cast<std::size_t>(level[0])].open) break;
  }

  Tree tree;
  tree.nodes.resize(build.size());
  for (std::size_t i = 0; i < build.size(); ++i) {
    const BuildNode& b = build[i];
    TreeNode& n = tree.nodes[i];
    n.cover = b.h;
    if (b.left >= 0) {
      n.left = b.left;
      n.right = b.right;
      n.feature = b.best.feature;
      n.threshold = b.best.threshold;
      n.default_left = b.best.default_left;
    } else {
      n.weight = -cfg.learning_rate * b.g / (b.h + cfg.reg_lambda);
    }
  }
  return tree;
}

double sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

}  // namespace

GbtModel train_gbt(const std::vector<std::vector<double>>& rows, std::span<const double> target,
                   const GbtConfig& config, const std::vector<std::string>& feature_names) {
  const std::size_t n = rows.size();
  if (n < 2) throw std::invalid_argument("training needs at least two rows");
  if (target.size() != n) throw std::invalid_argument("target length mismatch");
  const std::size_t n_features = feature_names.size();

  GbtModel model;
  model.config = config;
  model.feature_names = feature_names;

  if (config.objective == Objective::logistic) {
    std::size_t pos = 0;
    for (double y : target) {
      if (y != 0.0 && y != 1.0)
        throw std::invalid_argument("logistic objective needs labels in {0, 1}");
      if (y == 1.0) ++pos;
    }
    if (pos == 0 || pos == n)
      throw std::invalid_argument("degenerate target: a single class");
    const double rate = static_cast<double>(pos) / static_cast<double>(n);
    model.base_score = std::log(rate / (1.0 - rate));
  } else {
    double m = 0.0;
    for (double y : target) m += y;
    m /= static_cast<double>(n);
    double var = 0.0;
    for (double y : target) var += (y - m) * (y - m);
    if (var == 0.0) throw std::invalid_argument("degenerate target: zero variance");
    model.base_score = m;
  }

  const Columns cols = make_columns(rows, n_features);

  // optional early-stopping holdout carved from the training rows
  std::vector<int> train_rows(static_cast<std::size_t>(n));
  std::iota(train_rows.begin(), train_rows.end(), 0);
  std::vector<int> valid_rows;
  if (config.early_stopping) {
    Rng es_rng(mix_seed(config.seed, 0x9d0f));
    auto shuffled = sample_indices(static_cast<int>(n), static_cast<int>(n), es_rng);
    const auto n_valid = static_cast<std::size_t>(
        std::max(1, static_cast<int>(std::lround(0.2 * static_cast<double>(n)))));
    valid_rows.assign(shuffled.begin(), shuffled.begin() + static_cast<long>(n_valid));
    train_rows.assign(shuffled.begin() + static_cast<long>(n_valid), shuffled.end());
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(valid_rows.begin(), valid_rows.end());
  }

  std::vector<double> margin(n, model.base_score);
  std::vector<double> grad(n), hess(n);

  double best_valid = std::numeric_limits<double>::infinity();
  int rounds_since_best = 0;

  for (int round = 0; round < config.n_rounds; ++round) {
    for (std::size_t r = 0; r < n; ++r) {
      if (config.objective == Objective::logistic) {
        const double p = sigmoid(margin[r]);
        const double w = target[r] == 1.0 ? config.scale_pos_weight : 1.0;
        grad[r] = (p - target[r]) * w;
        hess[r] = std::max(p * (1.0 - p), 1e-16) * w;
      } else {
        grad[r] = margin[r] - target[r];
        hess[r] = 1.0;
      }
    }

    Rng tree_rng(mix_seed(config.seed, static_cast<std::uint64_t>(round) + 1));
    std::vector<int> row_set = train_rows;
    if (config.subsample < 1.0) {
      const int want = sample_count(config.subsample, train_rows.size());
      auto picked = sample_indices(static_cast<int>(train_rows.size()), want, tree_rng);
      row_set.clear();
      for (int p : picked) row_set.push_back(train_rows[static_cast<std::size_t>(p)]);
      std::sort(row_set.begin(), row_set.end());
    }

    Tree tree = build_tree(cols, grad, hess, row_set, config, tree_rng);

    std::vector<double> row(n_features);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t f = 0; f < n_features; ++f) row[f] = cols.col[f][r];
      margin[r] += tree.predict(row);
    }
    model.trees.push_back(std::move(tree));

    if (config.early_stopping) {
      double score = 0.0;  // lower is better: logloss or squared error
      for (int r : valid_rows) {
        const auto u = static_cast<std::size_t>(r);
        if (config.objective == Objective::logistic) {
          const double p = std::clamp(sigmoid(margin[u]), 1e-12, 1.0 - 1e-12);
          score -= target[u] * std::log(p) + (1.0 - target[u]) * std::log(1.0 - p);
        } else {
          score += (margin[u] - target[u]) * (margin[u] - target[u]);
        }
      }
      if (score < best_valid - 1e-12) {
        best_valid = score;
        model.best_iteration = round;
        rounds_since_best = 0;
      } else if (++rounds_since_best >= config.early_stopping_rounds) {
        break;
      }
    }
  }
  return model;
}

GbtModel train_gbt(const FeatureMatrix& m, std::span<const double> target,
                   const GbtConfig& config) {
  return train_gbt(m.values, target, config, m.columns);
}

namespace {

using nlohmann::json;

json config_to_json(const GbtConfig& c) {
  json j;
  j["learning_rate"] = c.learning_rate;
  j["gamma"] = c.gamma;
  j["max_depth"] = c.max_depth;
  j["subsample"] = c.subsample;
  j["colsample_bylevel"] = c.colsample_bylevel;
  j["colsample_bytree"] = c.colsample_bytree;
  j["min_child_weight"] = c.min_child_weight;
  j["scale_pos_weight"] = c.scale_pos_weight;
  j["n_rounds"] = c.n_rounds;
  j["reg_lambda"] = c.reg_lambda;
  j["objective"] = to_string(c.objective);
  j["seed"] = c.seed;
  j["early_stopping"] = c.early_stopping;
  j["early_stopping_rounds"] = c.early_stopping_rounds;
  return j;
}

GbtConfig config_from_json(const json& j) {
  GbtConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.max_depth = j.at("max_depth").get<int>();
  c.subsample = j.at("subsample").get<double>();
  c.colsample_bylevel = j.at("colsample_bylevel").get<double>();
  c.colsample_bytree = j.at("colsample_bytree").get<double>();
  c.min_child_weight = j.at("min_child_weight").get<double>();
  c.scale_pos_weight = j.at("scale_pos_weight").get<double>();
  c.n_rounds = j.at("n_rounds").get<int>();
  c.reg_lambda = j.at("reg_lambda").get<double>();
  c.objective = j.at("objective").get<std::string>() == "logistic" ? Objective::logistic
                                                                   : Objective::squared_error;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.early_stopping = j.value("early_stopping", false);
  c.early_stopping_rounds = j.value("early_stopping_rounds", 20);
  return c;
}

}  // namespace

std::string model_to_json(const GbtModel& model) {
  json j;
  j["format"] = "pentrace.gbt";
  j["format_version"] = 1;
  j["base_score"] = model.base_score;
  j["config"] = config_to_json(model.config);
  j["feature_names"] = model.feature_names;
  j["best_iteration"] = model.best_iteration;
  json trees = json::array();
  for (const Tree& t : model.trees) {
    json nodes = json::array();
    for (const TreeNode& n : t.nodes) {
      json nj;
      nj["left"] = n.left;
      nj["right"] = n.right;
      nj["feature"] = n.feature;
      nj["threshold"] = n.threshold;
      nj["default_left"] = n.default_left;
      nj["weight"] = n.weight;
      nj["cover"] = n.cover;
      nodes.push_back(std::move(nj));
    }
    trees.push_back(json{{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  return j.dump(2) + "\n";
}

GbtModel model_from_json(std::string_view json_text) {
  const json j = json::parse(json_text);
  if (j.at("format").get<std::string>() != "pentrace.gbt")
    throw std::runtime_error("not a model file");
  GbtModel model;
  model.base_score = j.at("base_score").get<double>();
  model.config = config_from_json(j.at("config"));
  model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  model.best_iteration = j.at("best_iteration").get<int>();
  for (const auto& tj : j.at("trees")) {
    Tree t;
    for (const auto& nj : tj.at("nodes")) {
      TreeNode n;
      n.left = nj.at("left").get<int>();
      n.right = nj.at("right").get<int>();
      n.feature = nj.at("feature").get<int>();
      n.threshold = nj.at("threshold").get<double>();
      n.default_left = nj.at("default_left").get<bool>();
      n.weight = nj.at("weight").get<double>();
      n.cover = nj.at("cover").get<double>();
      t.nodes.push_back(n);
    }
    model.trees.push_back(std::move(t));
  }
  return model;
}

}  // namespace pentrace
