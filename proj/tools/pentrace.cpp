// pentrace: online handwriting analysis toolkit.
// Subcommands cover the full pipeline: synth -> extract -> analyze ->
// train/evaluate/explain, plus report for a one-shot run.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pentrace/cv.hpp"
#include "pentrace/features.hpp"
#include "pentrace/gbt.hpp"
#include "pentrace/shap.hpp"
#include "pentrace/stats.hpp"
#include "pentrace/svc.hpp"
#include "pentrace/synth.hpp"
#include "pentrace/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pentrace;

namespace {

// exit codes: 0 ok, 1 usage, 2 parse failure, 3 validation failure,
// 4 modeling failure, 5 partial failure under --keep-going
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitModel = 4;
constexpr int kExitPartial = 5;

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_run_meta(const fs::path& out_dir, const std::string& command, const json& config) {
  json meta;
  meta["tool"] = "pentrace";
  meta["version"] = kVersion;
  meta["command"] = command;
  meta["config"] = config;
  write_text(out_dir / "run_meta.json", meta.dump(2) + "\n");
}

struct ExtractOptions {
  std::vector<std::string> inputs;
  std::string out_dir = "out";
  bool keep_going = false;
  bool include_boundary_air = false;
  int entropy_bins = 32;
  double pen_stop_fraction = 0.10;
  double pen_stop_min_ms = 30.0;
  double units_per_mm = 0.0;  // 0 = keep raw device units
  double tick_rate = 1000.0;

  FeatureConfig feature_config() const {
    FeatureConfig cfg;
    cfg.include_boundary_air = include_boundary_air;
    cfg.entropy_bins = entropy_bins;
    cfg.pen_stop_velocity_fraction = pen_stop_fraction;
    cfg.pen_stop_min_duration = pen_stop_min_ms / 1000.0;
    if (units_per_mm > 0) cfg.units_per_mm = units_per_mm;
    return cfg;
  }
  json to_json() const {
    return json{{"inputs", inputs},
                {"out_dir", out_dir},
                {"keep_going", keep_going},
                {"include_boundary_air", include_boundary_air},
                {"entropy_bins", entropy_bins},
                {"pen_stop_fraction", pen_stop_fraction},
                {"pen_stop_min_ms", pen_stop_min_ms},
                {"units_per_mm", units_per_mm},
                {"tick_rate", tick_rate}};
  }
};

std::vector<fs::path> collect_svc_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& input : inputs) {
    const fs::path p(input);
    if (fs::is_directory(p)) {
      for (const auto& entry : fs::directory_iterator(p))
        if (entry.path().extension() == ".svc") files.push_back(entry.path());
    } else {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

int run_extract(const ExtractOptions& opt) {
  const fs::path out_dir(opt.out_dir);
  const auto files = collect_svc_files(opt.inputs);
  if (files.empty()) {
    std::cerr << "extract: no .svc inputs found\n";
    return kExitUsage;
  }

  std::vector<Session> sessions;
  json report = json::array();
  bool any_skipped = false;
  for (const auto& file : files) {
    try {
      Session s = load_session(file);
      const auto diags = validate(s);
      json diag_list = json::array();
      for (const auto& d : diags)
        diag_list.push_back({{"code", to_string(d.code)},
                             {"severity", to_string(d.severity)},
                             {"sample_index", d.sample_index},
                             {"message", d.message}});
      report.push_back(
          {{"file", file.string()}, {"subject_id", s.subject_id}, {"diagnostics", diag_list}});
      if (has_errors(diags)) throw std::runtime_error("validation errors in " + file.string());
      sessions.push_back(std::move(s));
    } catch (const std::exception& e) {
      report.push_back({{"file", file.string()}, {"error", e.what()}});
      std::cerr << "extract: " << e.what() << "\n";
      if (!opt.keep_going) {
        write_text(out_dir / "validation_report.json", report.dump(2) + "\n");
        return dynamic_cast<const SvcError*>(&e) ? kExitParse : kExitValidation;
      }
      any_skipped = true;
    }
  }

  // deterministic row order by subject id
  std::sort(sessions.begin(), sessions.end(),
            [](const Session& a, const Session& b) { return a.subject_id < b.subject_id; });

  const FeatureMatrix matrix = extract_all(sessions, opt.feature_config());
  write_text(out_dir / "features.csv", matrix_to_csv(matrix));
  write_text(out_dir / "features.json", matrix_to_json(matrix));
  write_text(out_dir / "catalog.json", catalog_json());
  write_text(out_dir / "validation_report.json", report.dump(2) + "\n");
  write_run_meta(out_dir, "extract", opt.to_json());
  std::cout << "extract: " << matrix.n_rows() << " rows x " << matrix.n_cols()
            << " features -> " << (out_dir / "features.csv").string() << "\n";
  return any_skipped ? kExitPartial : kExitOk;
}

struct TargetSpec {
  std::string name;  // diagnosis | legibility | performance_time | well_being | total
  TargetKind kind = TargetKind::binary;
  double score_range = 1.0;
};

TargetSpec parse_target(const std::string& name) {
  if (name == "diagnosis") return {name, TargetKind::binary, 1.0};
  if (name == "legibility") return {name, TargetKind::continuous, 12.0};
  if (name == "performance_time") return {name, TargetKind::continuous, 12.0};
  if (name == "well_being") return {name, TargetKind::continuous, 16.0};
  if (name == "total") return {name, TargetKind::continuous, 40.0};
  throw std::runtime_error("unknown target '" + name +
                           "' (expected diagnosis, legibility, performance_time, well_being, "
                           "or total)");
}

// target vector aligned with matrix rows; NaN marks rows without the value
std::vector<double> target_vector(const FeatureMatrix& m, const TargetSpec& spec) {
  std::vector<double> t(m.n_rows(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    const RowMeta& meta = m.meta[r];
    if (spec.name == "diagnosis") {
      if (meta.diagnosis) t[r] = *meta.diagnosis == Diagnosis::dysgraphic ? 1.0 : 0.0;
    } else if (meta.hpsqc) {
      if (spec.name == "legibility")
        t[r] = meta.hpsqc->legibility;
      else if (spec.name == "performance_time")
        t[r] = meta.hpsqc->performance_time;
      else if (spec.name == "well_being")
        t[r] = meta.hpsqc->well_being;
      else
        t[r] = meta.hpsqc->total;
    }
  }
  return t;
}

std::vector<int> sex_levels(const FeatureMatrix& m, bool& complete) {
  std::vector<int> levels(m.n_rows(), -1);
  complete = true;
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    if (m.meta[r].sex)
      levels[r] = *m.meta[r].sex == Sex::girl ? 0 : 1;
    else
      complete = false;
  }
  return levels;
}

struct AnalyzeOptions {
  std::string features_path;
  std::string out_dir = "out";
  std::vector<std::string> targets = {"diagnosis", "legibility", "performance_time",
                                      "well_being", "total"};
  bool targets_explicit = false;  // absent targets are errors when set
  double alpha = 0.05;
  bool no_confound = false;
  bool fdr_joint = false;
  int top_k = 5;
};

json stat_to_json(const StatResult& r, double alpha) {
  json j;
  j["feature"] = r.feature;
  if (r.missing) {
    j["missing"] = true;
    return j;
  }
  j["statistic"] = r.statistic;
  if (r.rho) j["rho"] = *r.rho;
  j["p"] = r.p;
  j["p_fdr"] = r.p_fdr;
  j["n"] = r.n_effective;
  j["direction"] = r.direction;
  j["significant"] = r.p_fdr < alpha;
  return j;
}

int run_analyze(const AnalyzeOptions& opt) {
  FeatureMatrix matrix = matrix_from_csv(read_text(opt.features_path));
  const fs::path out_dir(opt.out_dir);

  std::vector<std::string> warnings;
  if (!opt.no_confound) {
    bool complete = false;
    const auto levels = sex_levels(matrix, complete);
    if (complete) {
      auto res = regress_out_confound(matrix, levels);
      matrix = std::move(res.matrix);
      warnings = std::move(res.warnings);
    } else {
      warnings.push_back("sex missing for some rows; confound regression skipped");
    }
  }

  json summary;
  summary["alpha"] = opt.alpha;
  summary["warnings"] = warnings;

  for (const auto& target_name : opt.targets) {
    const TargetSpec spec = parse_target(target_name);
    const auto target = target_vector(matrix, spec);
    std::size_t present = 0;
    for (double v : target)
      if (!std::isnan(v)) ++present;
    if (present < 3) {
      if (opt.targets_explicit)
        throw std::runtime_error("target '" + target_name + "' missing from the matrix");
      summary[target_name] = {{"skipped", "target absent"}};
      continue;
    }

    ExploratoryOptions eopt;
    eopt.alpha = opt.alpha;
    eopt.fdr_per_family = !opt.fdr_joint;
    const ExploratoryReport rep = exploratory_analysis(matrix, target, spec.kind, eopt);

    // table-shaped CSV: feature, p(MW), p_fdr(MW), rho, p(rho), p_fdr(rho)
    std::string csv = "feature,p_mw,p_mw_fdr,rho,p_rho,p_rho_fdr\n";
    for (std::size_t idx : rep.order) {
      const auto& sp = rep.spearman[idx];
      csv += sp.feature;
      if (!rep.mann_whitney.empty() && !rep.mann_whitney[idx].missing) {
        csv += "," + std::to_string(rep.mann_whitney[idx].p) + "," +
               std::to_string(rep.mann_whitney[idx].p_fdr);
      } else {
        csv += ",,";
      }
      if (!sp.missing) {
        csv += "," + std::to_string(*sp.rho) + "," + std::to_string(sp.p) + "," +
               std::to_string(sp.p_fdr);
      } else {
        csv += ",,,";
      }
      csv += "\n";
    }
    write_text(out_dir / ("stats_" + target_name + ".csv"), csv);

    json top = json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(static_cast<std::size_t>(opt.top_k),
                                                      rep.order.size());
         ++i) {
      const std::size_t idx = rep.order[i];
      json row;
      row["feature"] = rep.spearman[idx].feature;
      if (!rep.mann_whitney.empty())
        row["mann_whitney"] = stat_to_json(rep.mann_whitney[idx], opt.alpha);
      row["spearman"] = stat_to_json(rep.spearman[idx], opt.alpha);
      top.push_back(std::move(row));
    }
    summary[target_name] = {{"top", top}, {"n", present}};
  }

  json config;
  config["features"] = opt.features_path;
  config["alpha"] = opt.alpha;
  config["no_confound"] = opt.no_confound;
  config["fdr_joint"] = opt.fdr_joint;
  config["top_k"] = opt.top_k;
  summary["version"] = kVersion;
  summary["config"] = config;
  write_text(out_dir / "analysis.json", summary.dump(2) + "\n");
  write_run_meta(out_dir, "analyze", config);
  std::cout << "analyze: wrote " << (out_dir / "analysis.json").string() << "\n";
  return kExitOk;
}

struct TrainOptions {
  std::string features_path;
  std::string out_dir = "out";
  std::string target = "diagnosis";
  std::string objective = "auto";
  int n_iter = 500;
  std::uint64_t seed = 0;
  int folds = 10;
  int repeats = 10;
  int n_rounds = 100;
  int jobs = 1;
  bool early_stopping = false;
  bool no_confound = false;
  bool confound_within_folds = false;

  json to_json() const {
    return json{{"features", features_path},
                {"out_dir", out_dir},
                {"target", target},
                {"objective", objective},
                {"n_iter", n_iter},
                {"seed", seed},
                {"folds", folds},
                {"repeats", repeats},
                {"n_rounds", n_rounds},
                {"jobs", jobs},
                {"early_stopping", early_stopping},
                {"no_confound", no_confound},
                {"confound_within_folds", confound_within_folds}};
  }
};

struct PreparedData {
  std::vector<std::vector<double>> rows;
  std::vector<double> target;
  std::vector<std::string> feature_names;
  std::vector<std::string> subject_ids;
  std::vector<int> confound_levels;
  TargetSpec spec;
  Objective objective = Objective::logistic;
};

PreparedData prepare(const FeatureMatrix& input, const TrainOptions& opt) {
  PreparedData d;
  d.spec = parse_target(opt.target);
  d.objective = opt.objective == "auto"
                    ? (d.spec.kind == TargetKind::binary ? Objective::logistic
                                                         : Objective::squared_error)
                    : (opt.objective == "logistic" ? Objective::logistic
                                                   : Objective::squared_error);

  FeatureMatrix matrix = input;
  bool sex_complete = false;
  auto levels = sex_levels(matrix, sex_complete);
  if (!opt.no_confound && sex_complete && !opt.confound_within_folds) {
    auto res = regress_out_confound(matrix, levels);
    matrix = std::move(res.matrix);
  }

  const auto target = target_vector(matrix, d.spec);
  for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
    if (std::isnan(target[r])) continue;
    d.rows.push_back(matrix.values[r]);
    d.target.push_back(target[r]);
    d.subject_ids.push_back(matrix.meta[r].subject_id);
    if (sex_complete) d.confound_levels.push_back(levels[r]);
  }
  d.feature_names = matrix.columns;
  if (d.rows.size() < 4)
    throw std::runtime_error("target '" + opt.target + "' has too few rows");
  if (d.objective == Objective::logistic) {
    std::size_t pos = 0;
    for (double v : d.target)
      if (v == 1.0) ++pos;
    if (pos == 0 || pos == d.target.size())
      throw std::invalid_argument("degenerate target: one class only");
  }
  return d;
}

int run_train(const TrainOptions& opt) {
  const FeatureMatrix matrix = matrix_from_csv(read_text(opt.features_path));
  const PreparedData d = prepare(matrix, opt);
  const fs::path out_dir(opt.out_dir);

  SearchOptions sopt;
  sopt.n_iter = opt.n_iter;
  sopt.seed = opt.seed;
  sopt.n_jobs = opt.jobs;
  sopt.objective = d.objective;
  sopt.n_rounds = opt.n_rounds;
  sopt.early_stopping = opt.early_stopping;
  sopt.cv.k = opt.folds;
  sopt.cv.repeats = opt.repeats;
  sopt.cv.score_range = d.spec.score_range;
  sopt.cv.confound_within_folds = opt.confound_within_folds;
  if (opt.confound_within_folds) sopt.cv.confound_levels = d.confound_levels;

  const SearchResult result = random_search(d.rows, d.target, d.feature_names, sopt);

  // final model trained on the full matrix with the winning configuration
  const GbtModel model = train_gbt(d.rows, d.target, result.best_config, d.feature_names);
  write_text(out_dir / "model.json", model_to_json(model));
  write_text(out_dir / "eval.json", eval_report_to_json(result.best_report));
  write_text(out_dir / "eval.csv", eval_report_to_csv(result.best_report));

  json search;
  search["version"] = kVersion;
  search["n_iter"] = opt.n_iter;
  search["n_evaluated"] = result.n_evaluated;
  search["best_iteration"] = result.best_iteration;
  search["selection_metric"] = d.objective == Objective::logistic ? "mcc" : "mae";
  search["best_config"] = json::parse(model_to_json(model))["config"];
  search["diagnostics"] = result.diagnostics;
  if (d.objective == Objective::logistic) {
    search["cv"] = {{"bacc_mean", result.best_report.bacc.mean},
                    {"bacc_std", result.best_report.bacc.std_dev},
                    {"mcc_mean", result.best_report.mcc.mean},
                    {"mcc_std", result.best_report.mcc.std_dev},
                    {"sen_mean", result.best_report.sen.mean},
                    {"spe_mean", result.best_report.spe.mean}};
  } else {
    search["cv"] = {{"mae_mean", result.best_report.mae.mean},
                    {"mae_std", result.best_report.mae.std_dev},
                    {"rmse_mean", result.best_report.rmse.mean},
                    {"eer_mean", result.best_report.eer.mean},
                    {"eer_std", result.best_report.eer.std_dev}};
  }
  search["config"] = opt.to_json();
  write_text(out_dir / "search.json", search.dump(2) + "\n");
  write_run_meta(out_dir, "train", opt.to_json());

  if (d.objective == Objective::logistic)
    std::cout << "train: CV BACC " << result.best_report.bacc.mean * 100 << " +- "
              << result.best_report.bacc.std_dev * 100 << " %\n";
  else
    std::cout << "train: CV MAE " << result.best_report.mae.mean << ", EER "
              << result.best_report.eer.mean << " %\n";
  return kExitOk;
}

// same preprocessing the training path applies: residualize the sex confound
// on the full matrix unless disabled
FeatureMatrix maybe_residualize(FeatureMatrix matrix, bool no_confound) {
  if (no_confound) return matrix;
  bool complete = false;
  const auto levels = sex_levels(matrix, complete);
  if (!complete) return matrix;
  return regress_out_confound(matrix, levels).matrix;
}

int run_evaluate(const std::string& model_path, const std::string& features_path,
                 const std::string& target_name, bool no_confound,
                 const std::string& out_dir_s) {
  const GbtModel model = model_from_json(read_text(model_path));
  const FeatureMatrix matrix =
      maybe_residualize(matrix_from_csv(read_text(features_path)), no_confound);
  if (matrix.columns != model.feature_names)
    throw std::runtime_error("feature columns do not match the model");
  const TargetSpec spec = parse_target(target_name);
  const auto target = target_vector(matrix, spec);
  const fs::path out_dir(out_dir_s);

  json out;
  out["version"] = kVersion;
  out["model"] = model_path;
  out["target"] = target_name;
  if (model.config.objective == Objective::logistic) {
    std::vector<int> y_true;
    std::vector<double> y_prob;
    for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
      if (std::isnan(target[r])) continue;
      y_true.push_back(target[r] == 1.0 ? 1 : 0);
      y_prob.push_back(model.predict(matrix.values[r]));
    }
    if (y_true.empty()) throw std::runtime_error("no labelled rows to evaluate");
    const auto m = classification_metrics_prob(y_true, y_prob);
    out["metrics"] = {{"bacc", m.bacc}, {"mcc", m.mcc}, {"sen", m.sen}, {"spe", m.spe}};
  } else {
    std::vector<double> y_true, y_pred;
    for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
      if (std::isnan(target[r])) continue;
      y_true.push_back(target[r]);
      y_pred.push_back(model.predict(matrix.values[r]));
    }
    if (y_true.empty()) throw std::runtime_error("no labelled rows to evaluate");
    const auto m = regression_metrics(y_true, y_pred, spec.score_range);
    out["metrics"] = {{"mae", m.mae}, {"mse", m.mse}, {"rmse", m.rmse}, {"eer", m.eer}};
  }
  write_text(out_dir / "evaluation.json", out.dump(2) + "\n");
  write_run_meta(
      out_dir, "evaluate",
      json{{"model", model_path}, {"features", features_path}, {"target", target_name}});
  std::cout << "evaluate: wrote " << (out_dir / "evaluation.json").string() << "\n";
  return kExitOk;
}

int run_explain(const std::string& model_path, const std::string& features_path, int top_k,
                bool no_confound, const std::string& out_dir_s) {
  const GbtModel model = model_from_json(read_text(model_path));
  const FeatureMatrix matrix =
      maybe_residualize(matrix_from_csv(read_text(features_path)), no_confound);
  if (matrix.columns != model.feature_names)
    throw std::runtime_error("feature columns do not match the model");
  const fs::path out_dir(out_dir_s);

  const GlobalImportanceReport rep = global_importance(model, matrix);
  std::vector<std::string> ids;
  for (const auto& meta : matrix.meta) ids.push_back(meta.subject_id);
  write_text(out_dir / "shap.csv", shap_csv(rep, ids, model.feature_names));
  write_text(out_dir / "importance.json",
             importance_json(rep, static_cast<std::size_t>(top_k)));
  write_run_meta(out_dir, "explain",
                 json{{"model", model_path}, {"features", features_path}, {"top_k", top_k}});
  std::cout << "explain: wrote " << (out_dir / "importance.json").string() << "\n";
  return kExitOk;
}

struct SynthOptions {
  std::string out_dir = "cohort";
  CohortSpec spec;
};

int run_synth(const SynthOptions& opt) {
  const auto cohort = generate_cohort(opt.spec);
  const fs::path out_dir(opt.out_dir);
  fs::create_directories(out_dir);
  for (const Session& s : cohort) save_session(s, out_dir / (s.subject_id + ".svc"));

  json config;
  config["n_intact"] = opt.spec.n_intact;
  config["n_dd"] = opt.spec.n_dd;
  config["seed"] = opt.spec.seed;
  config["in_air_duration_factor"] = opt.spec.in_air_duration_factor;
  config["interruption_rate_factor"] = opt.spec.interruption_rate_factor;
  config["stroke_height_factor"] = opt.spec.stroke_height_factor;
  config["angular_velocity_ncv_factor"] = opt.spec.angular_velocity_ncv_factor;
  config["in_air_tempo_factor"] = opt.spec.in_air_tempo_factor;
  config["noise_scale"] = opt.spec.noise_scale;
  config["strokes_per_session"] = opt.spec.strokes_per_session;
  config["sampling_rate"] = opt.spec.sampling_rate;
  write_run_meta(out_dir, "synth", config);
  std::cout << "synth: wrote " << cohort.size() << " sessions to " << out_dir.string() << "\n";
  return kExitOk;
}

int run_report(const std::string& input_dir, const std::string& out_dir_s, int n_iter,
               std::uint64_t seed, int folds, int repeats, int jobs) {
  const fs::path out_dir(out_dir_s);

  ExtractOptions ex;
  ex.inputs = {input_dir};
  ex.out_dir = (out_dir / "features").string();
  int rc = run_extract(ex);
  if (rc != kExitOk) return rc;

  AnalyzeOptions an;
  an.features_path = (out_dir / "features" / "features.csv").string();
  an.out_dir = (out_dir / "analysis").string();
  rc = run_analyze(an);
  if (rc != kExitOk) return rc;

  TrainOptions tr;
  tr.features_path = an.features_path;
  tr.out_dir = (out_dir / "model_diagnosis").string();
  tr.target = "diagnosis";
  tr.n_iter = n_iter;
  tr.seed = seed;
  tr.folds = folds;
  tr.repeats = repeats;
  tr.jobs = jobs;
  rc = run_train(tr);
  if (rc != kExitOk) return rc;

  rc = run_explain((out_dir / "model_diagnosis" / "model.json").string(), an.features_path, 10,
                   false, (out_dir / "explain_diagnosis").string());
  if (rc != kExitOk) return rc;

  TrainOptions tr_total = tr;
  tr_total.target = "total";
  tr_total.out_dir = (out_dir / "model_total").string();
  rc = run_train(tr_total);
  if (rc != kExitOk) return rc;

  json summary;
  summary["version"] = kVersion;
  summary["layout"] = {{"features", "features/"},
                       {"analysis", "analysis/"},
                       {"diagnosis_model", "model_diagnosis/"},
                       {"diagnosis_shap", "explain_diagnosis/"},
                       {"total_model", "model_total/"}};
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  std::cout << "report: pipeline artifacts under " << out_dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pentrace: online handwriting assessment toolkit"};
  app.set_config("--config", "", "declarative config file (INI/TOML); flags override");
  app.require_subcommand(1);

  // synth
  SynthOptions synth_opt;
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort (SVC + sidecars)");
  synth->add_option("--out", synth_opt.out_dir, "output directory")->capture_default_str();
  synth->add_option("--n-intact", synth_opt.spec.n_intact)->capture_default_str();
  synth->add_option("--n-dd", synth_opt.spec.n_dd)->capture_default_str();
  synth->add_option("--seed", synth_opt.spec.seed)->capture_default_str();
  synth->add_option("--in-air-duration-factor", synth_opt.spec.in_air_duration_factor)
      ->capture_default_str();
  synth->add_option("--interruption-rate-factor", synth_opt.spec.interruption_rate_factor)
      ->capture_default_str();
  synth->add_option("--stroke-height-factor", synth_opt.spec.stroke_height_factor)
      ->capture_default_str();
  synth->add_option("--angular-velocity-ncv-factor", synth_opt.spec.angular_velocity_ncv_factor)
      ->capture_default_str();
  synth->add_option("--in-air-tempo-factor", synth_opt.spec.in_air_tempo_factor)
      ->capture_default_str();
  synth->add_option("--noise-scale", synth_opt.spec.noise_scale)->capture_default_str();
  synth->add_option("--strokes", synth_opt.spec.strokes_per_session)->capture_default_str();
  synth->add_option("--sampling-rate", synth_opt.spec.sampling_rate)->capture_default_str();

  // extract
  ExtractOptions ex_opt;
  auto* extract = app.add_subcommand("extract", "parse sessions and extract the feature matrix");
  extract->add_option("--input", ex_opt.inputs, "SVC files or directories")->required();
  extract->add_option("--out", ex_opt.out_dir)->capture_default_str();
  extract->add_flag("--keep-going", ex_opt.keep_going, "skip unreadable files, exit 5");
  extract->add_flag("--include-boundary-air", ex_opt.include_boundary_air,
                    "count leading/trailing in-air runs as in-air movement");
  extract->add_option("--entropy-bins", ex_opt.entropy_bins)->capture_default_str();
  extract->add_option("--pen-stop-fraction", ex_opt.pen_stop_fraction)->capture_default_str();
  extract->add_option("--pen-stop-min-ms", ex_opt.pen_stop_min_ms)->capture_default_str();
  extract->add_option("--units-per-mm", ex_opt.units_per_mm,
                      "convert spatial features to mm (0 keeps device units)")
      ->capture_default_str();
  extract->add_option("--tick-rate", ex_opt.tick_rate,
                      "timestamp ticks per second for files without a sidecar")
      ->capture_default_str();

  // analyze
  AnalyzeOptions an_opt;
  auto* analyze = app.add_subcommand("analyze", "exploratory statistics against the targets");
  analyze->add_option("--features", an_opt.features_path, "features.csv from extract")
      ->required();
  analyze->add_option("--out", an_opt.out_dir)->capture_default_str();
  auto* analyze_targets =
      analyze->add_option("--target", an_opt.targets, "targets to analyze")
          ->capture_default_str();
  analyze->add_option("--alpha", an_opt.alpha)->capture_default_str();
  analyze->add_flag("--no-confound", an_opt.no_confound, "skip sex confound regression");
  analyze->add_flag("--fdr-joint", an_opt.fdr_joint,
                    "one FDR family across both tests instead of per-family");
  analyze->add_option("--top-k", an_opt.top_k)->capture_default_str();

  // train
  TrainOptions tr_opt;
  auto* train = app.add_subcommand("train", "randomized hyperparameter search + final model");
  train->add_option("--features", tr_opt.features_path)->required();
  train->add_option("--out", tr_opt.out_dir)->capture_default_str();
  train->add_option("--target", tr_opt.target)->capture_default_str();
  train->add_option("--objective", tr_opt.objective)
      ->check(CLI::IsMember({"auto", "logistic", "squared_error"}))
      ->capture_default_str();
  train->add_option("--n-iter", tr_opt.n_iter)->capture_default_str();
  train->add_option("--seed", tr_opt.seed)->capture_default_str();
  train->add_option("--folds", tr_opt.folds)->capture_default_str();
  train->add_option("--repeats", tr_opt.repeats)->capture_default_str();
  train->add_option("--n-rounds", tr_opt.n_rounds)->capture_default_str();
  train->add_option("--jobs", tr_opt.jobs)->capture_default_str();
  train->add_flag("--early-stopping", tr_opt.early_stopping);
  train->add_flag("--no-confound", tr_opt.no_confound);
  train->add_flag("--confound-within-folds", tr_opt.confound_within_folds,
                  "re-fit the confound regression inside each training fold");

  // evaluate
  std::string eval_model, eval_features, eval_target = "diagnosis", eval_out = "out";
  bool eval_no_confound = false;
  auto* evaluate = app.add_subcommand("evaluate", "apply a model to a feature matrix");
  evaluate->add_option("--model", eval_model)->required();
  evaluate->add_option("--features", eval_features)->required();
  evaluate->add_option("--target", eval_target)->capture_default_str();
  evaluate->add_flag("--no-confound", eval_no_confound);
  evaluate->add_option("--out", eval_out)->capture_default_str();

  // explain
  std::string exp_model, exp_features, exp_out = "out";
  int exp_topk = 10;
  bool exp_no_confound = false;
  auto* explain = app.add_subcommand("explain", "SHAP attributions and global importance");
  explain->add_option("--model", exp_model)->required();
  explain->add_option("--features", exp_features)->required();
  explain->add_option("--top-k", exp_topk)->capture_default_str();
  explain->add_flag("--no-confound", exp_no_confound);
  explain->add_option("--out", exp_out)->capture_default_str();

  // report
  std::string rep_input, rep_out = "report";
  int rep_iter = 25, rep_folds = 10, rep_repeats = 10, rep_jobs = 1;
  std::uint64_t rep_seed = 0;
  auto* report = app.add_subcommand("report", "full pipeline on a directory of sessions");
  report->add_option("--input", rep_input, "directory of .svc files")->required();
  report->add_option("--out", rep_out)->capture_default_str();
  report->add_option("--n-iter", rep_iter)->capture_default_str();
  report->add_option("--seed", rep_seed)->capture_default_str();
  report->add_option("--folds", rep_folds)->capture_default_str();
  report->add_option("--repeats", rep_repeats)->capture_default_str();
  report->add_option("--jobs", rep_jobs)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return run_synth(synth_opt);
    if (extract->parsed()) return run_extract(ex_opt);
    if (analyze->parsed()) {
      an_opt.targets_explicit = analyze_targets->count() > 0;
      return run_analyze(an_opt);
    }
    if (train->parsed()) return run_train(tr_opt);
    if (evaluate->parsed())
      return run_evaluate(eval_model, eval_features, eval_target, eval_no_confound, eval_out);
    if (explain->parsed())
      return run_explain(exp_model, exp_features, exp_topk, exp_no_confound, exp_out);
    if (report->parsed())
      return run_report(rep_input, rep_out, rep_iter, rep_seed, rep_folds, rep_repeats,
                        rep_jobs);
  } catch (const SvcError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModel;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    const std::string what = e.what();
    if (what.find("validation") != std::string::npos) return kExitValidation;
    return kExitModel;
  }
  return kExitUsage;
}
