#include "pentrace/cv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "pentrace/descriptive.hpp"
#include "pentrace/rng.hpp"

namespace pentrace {

std::vector<int> quartile_bins(std::span<const double> target) {
  std::vector<double> sorted(target.begin(), target.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile_sorted(sorted, 0.25);
  const double q2 = quantile_sorted(sorted, 0.50);
  const double q3 = quantile_sorted(sorted, 0.75);
  std::vector<int> bins(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double v = target[i];
    bins[i] = v <= q1 ? 0 : (v <= q2 ? 1 : (v <= q3 ? 2 : 3));
  }
  return bins;
}

FoldPlan stratified_repeated_kfold(std::span<const int> strata, int k, int repeats,
                                   std::uint64_t seed) {
  const std::size_t n = strata.size();
  if (n < 2) throw std::invalid_argument("stratified k-fold needs at least two rows");
  if (k < 2) throw std::invalid_argument("k must be at least 2");
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");

  FoldPlan plan;
  plan.seed = seed;
  plan.repeats = repeats;

  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[strata[i]].push_back(static_cast<int>(i));

  std::size_t smallest = n;
  for (const auto& [s, rows] : groups) smallest = std::min(smallest, rows.size());
  int k_eff = std::min<std::size_t>(static_cast<std::size_t>(k), std::max<std::size_t>(smallest, 2));
  k_eff = std::min<std::size_t>(static_cast<std::size_t>(k_eff), n);
  if (k_eff != k)
    plan.warnings.push_back("k reduced from " + std::to_string(k) + " to " +
                            std::to_string(k_eff) + ": smallest stratum has " +
                            std::to_string(smallest) + " rows");
  plan.k = k_eff;

  for (int rep = 0; rep < repeats; ++rep) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(rep)));
    std::vector<int> assignment(n, -1);
    // a running fold counter across strata keeps remainders spread out
    int next_fold = 0;
    for (auto& [s, rows] : groups) {
      std::vector<int> shuffled = rows;
      rng.shuffle(shuffled);
      for (int row : shuffled) {
        assignment[static_cast<std::size_t>(row)] = next_fold;
        next_fold = (next_fold + 1) % k_eff;
      }
    }
    plan.assignments.push_back(std::move(assignment));
  }
  return plan;
}

namespace {

// train-fit per-level means subtracted from train and test cells alike
void residualize_within_fold(std::vector<std::vector<double>>& rows,
                             const std::vector<int>& levels,
                             const std::vector<std::size_t>& train_rows) {
  if (rows.empty()) return;
  const std::size_t n_cols = rows[0].size();
  for (std::size_t c = 0; c < n_cols; ++c) {
    std::map<int, std::pair<double, std::size_t>> acc;
    for (std::size_t r : train_rows) {
      const double v = rows[r][c];
      if (std::isnan(v)) continue;
      auto& a = acc[levels[r]];
      a.first += v;
      a.second += 1;
    }
    bool ok = acc.size() >= 2;
    for (const auto& [lv, a] : acc)
      if (a.second < 2) ok = false;
    if (!ok) continue;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double& v = rows[r][c];
      if (std::isnan(v)) continue;
      auto it = acc.find(levels[r]);
      if (it == acc.end()) continue;
      v -= it->second.first / static_cast<double>(it->second.second);
    }
  }
}

}  // namespace

EvalReport cross_validate(const std::vector<std::vector<double>>& rows,
                          std::span<const double> target, const GbtConfig& config,
                          const std::vector<std::string>& feature_names, const CvOptions& opt,
                          std::uint64_t fold_seed) {
  const std::size_t n = rows.size();
  if (target.size() != n) throw std::invalid_argument("target length mismatch");

  std::vector<int> strata;
  if (config.objective == Objective::logistic) {
    strata.resize(n);
    for (std::size_t i = 0; i < n; ++i) strata[i] = target[i] == 1.0 ? 1 : 0;
  } else {
    strata = quartile_bins(target);
  }
  const FoldPlan plan = stratified_repeated_kfold(strata, opt.k, opt.repeats, fold_seed);

  EvalReport report;
  report.objective = config.objective;
  report.k = plan.k;
  report.repeats = plan.repeats;
  report.seed = fold_seed;
  report.score_range = opt.score_range;
  report.fold_assignments = plan.assignments;

  std::vector<double> bacc, mcc, sen, spe, mae, mse, rmse, eer;

  for (int rep = 0; rep < plan.repeats; ++rep) {
    const auto& assignment = plan.assignments[static_cast<std::size_t>(rep)];
    for (int fold = 0; fold < plan.k; ++fold) {
      std::vector<std::size_t> train_idx, test_idx;
      for (std::size_t i = 0; i < n; ++i)
        (assignment[i] == fold ? test_idx : train_idx).push_back(i);
      if (train_idx.size() < 2 || test_idx.empty()) continue;

      std::vector<std::vector<double>> work_rows;
      const std::vector<std::vector<double>>* data = &rows;
      if (opt.confound_within_folds && !opt.confound_levels.empty()) {
        work_rows = rows;
        residualize_within_fold(work_rows, opt.confound_levels, train_idx);
        data = &work_rows;
      }

      std::vector<std::vector<double>> train_rows;
      std::vector<double> train_y;
      for (std::size_t i : train_idx) {
        train_rows.push_back((*data)[i]);
        train_y.push_back(target[i]);
      }

      GbtConfig fold_cfg = config;
      fold_cfg.seed = mix_seed(config.seed,
                               static_cast<std::uint64_t>(rep) * 1000 +
                                   static_cast<std::uint64_t>(fold) + 0xCF01);
      const GbtModel model = train_gbt(train_rows, train_y, fold_cfg, feature_names);

      FoldMetrics fm;
      fm.repeat = rep;
      fm.fold = fold;
      if (config.objective == Objective::logistic) {
        std::vector<int> y_true;
        std::vector<double> y_prob;
        for (std::size_t i : test_idx) {
          y_true.push_back(target[i] == 1.0 ? 1 : 0);
          y_prob.push_back(model.predict((*data)[i]));
        }
        fm.cls = classification_metrics_prob(y_true, y_prob);
        bacc.push_back(fm.cls.bacc);
        mcc.push_back(fm.cls.mcc);
        sen.push_back(fm.cls.sen);
        spe.push_back(fm.cls.spe);
      } else {
        std::vector<double> y_true, y_pred;
        for (std::size_t i : test_idx) {
          y_true.push_back(target[i]);
          y_pred.push_back(model.predict((*data)[i]));
        }
        fm.reg = regression_metrics(y_true, y_pred, opt.score_range);
        mae.push_back(fm.reg.mae);
        mse.push_back(fm.reg.mse);
        rmse.push_back(fm.reg.rmse);
        eer.push_back(fm.reg.eer);
      }
      report.folds.push_back(fm);
    }
  }

  auto summarize = [](const std::vector<double>& v) {
    return MetricSummary{mean(v), stddev(v)};
  };
  report.bacc = summarize(bacc);
  report.mcc = summarize(mcc);
  report.sen = summarize(sen);
  report.spe = summarize(spe);
  report.mae = summarize(mae);
  report.mse = summarize(mse);
  report.rmse = summarize(rmse);
  report.eer = summarize(eer);
  return report;
}

GbtConfig sample_config(const GbtGrid& grid, Objective objective, int n_rounds,
                        std::uint64_t config_seed) {
  Rng rng(config_seed);
  GbtConfig c;
  c.learning_rate = grid.learning_rate[rng.below(grid.learning_rate.size())];
  c.gamma = grid.gamma[rng.below(grid.gamma.size())];
  c.max_depth = grid.max_depth[rng.below(grid.max_depth.size())];
  c.subsample = grid.subsample[rng.below(grid.subsample.size())];
  c.colsample_bylevel = grid.colsample_bylevel[rng.below(grid.colsample_bylevel.size())];
  c.colsample_bytree = grid.colsample_bytree[rng.below(grid.colsample_bytree.size())];
  c.min_child_weight = grid.min_child_weight[rng.below(grid.min_child_weight.size())];
  c.scale_pos_weight = grid.scale_pos_weight[rng.below(grid.scale_pos_weight.size())];
  c.objective = objective;
  c.n_rounds = n_rounds;
  c.seed = config_seed;
  return c;
}

SearchResult random_search(const std::vector<std::vector<double>>& rows,
                           std::span<const double> target,
                           const std::vector<std::string>& feature_names,
                           const SearchOptions& opt) {
  SearchResult result;
  if (rows.size() < 20)
    result.diagnostics.push_back("fewer than 20 rows; folds may shrink");

  const std::uint64_t fold_seed = mix_seed(opt.seed, 0xF01D5EEDULL);
  const std::size_t n_iter = static_cast<std::size_t>(opt.n_iter);

  struct IterOutcome {
    bool ok = false;
    GbtConfig config;
    EvalReport report;
    std::string error;
  };
  std::vector<IterOutcome> outcomes(n_iter);

  auto evaluate = [&](std::size_t i) {
    IterOutcome& out = outcomes[i];
    GbtConfig cfg = sample_config(opt.grid, opt.objective, opt.n_rounds,
                                  mix_seed(opt.seed, i + 1));
    cfg.early_stopping = opt.early_stopping;
    out.config = cfg;
    try {
      out.report = cross_validate(rows, target, cfg, feature_names, opt.cv, fold_seed);
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  };

  const int jobs = std::max(1, opt.n_jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < n_iter; ++i) evaluate(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n_iter) return;
        evaluate(i);
      }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // reduce in iteration order so the winner is scheduling-independent
  bool have_best = false;
  double best_score = 0.0;
  for (std::size_t i = 0; i < n_iter; ++i) {
    const IterOutcome& out = outcomes[i];
    if (!out.ok) {
      result.diagnostics.push_back("iteration " + std::to_string(i) + " skipped: " + out.error);
      continue;
    }
    ++result.n_evaluated;
    const double score = opt.objective == Objective::logistic ? out.report.mcc.mean
                                                              : -out.report.mae.mean;
    if (!have_best || score > best_score) {
      have_best = true;
      best_score = score;
      result.best_config = out.config;
      result.best_report = out.report;
      result.best_iteration = static_cast<int>(i);
    }
  }
  if (!have_best) throw std::runtime_error("random_search: every configuration failed");
  return result;
}

namespace {

using nlohmann::json;

json summary_json(const MetricSummary& s) {
  return json{{"mean", s.mean}, {"std", s.std_dev}};
}

}  // namespace

std::string eval_report_to_json(const EvalReport& r) {
  json j;
  j["objective"] = to_string(r.objective);
  j["k"] = r.k;
  j["repeats"] = r.repeats;
  j["seed"] = r.seed;
  if (r.objective == Objective::logistic) {
    j["bacc"] = summary_json(r.bacc);
    j["mcc"] = summary_json(r.mcc);
    j["sen"] = summary_json(r.sen);
    j["spe"] = summary_json(r.spe);
  } else {
    j["mae"] = summary_json(r.mae);
    j["mse"] = summary_json(r.mse);
    j["rmse"] = summary_json(r.rmse);
    j["eer"] = summary_json(r.eer);
    j["score_range"] = r.score_range;
  }
  json folds = json::array();
  for (const auto& f : r.folds) {
    json fj;
    fj["repeat"] = f.repeat;
    fj["fold"] = f.fold;
    if (r.objective == Objective::logistic) {
      fj["bacc"] = f.cls.bacc;
      fj["mcc"] = f.cls.mcc;
      fj["sen"] = f.cls.sen;
      fj["spe"] = f.cls.spe;
    } else {
      fj["mae"] = f.reg.mae;
      fj["mse"] = f.reg.mse;
      fj["rmse"] = f.reg.rmse;
      fj["eer"] = f.reg.eer;
    }
    folds.push_back(std::move(fj));
  }
  j["folds"] = std::move(folds);
  j["fold_assignments"] = r.fold_assignments;
  return j.dump(2) + "\n";
}

std::string eval_report_to_csv(const EvalReport& r) {
  std::string out;
  if (r.objective == Objective::logistic) {
    out = "repeat,fold,bacc,mcc,sen,spe\n";
    for (const auto& f : r.folds) {
      out += std::to_string(f.repeat) + "," + std::to_string(f.fold) + "," +
             std::to_string(f.cls.bacc) + "," + std::to_string(f.cls.mcc) + "," +
             std::to_string(f.cls.sen) + "," + std::to_string(f.cls.spe) + "\n";
    }
  } else {
    out = "repeat,fold,mae,mse,rmse,eer\n";
    for (const auto& f : r.folds) {
      out += std::to_string(f.repeat) + "," + std::to_string(f.fold) + "," +
             std::to_string(f.reg.mae) + "," + std::to_string(f.reg.mse) + "," +
             std::to_string(f.reg.rmse) + "," + std::to_string(f.reg.eer) + "\n";
    }
  }
  return out;
}

}  // namespace pentrace
