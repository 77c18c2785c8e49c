#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pentrace/features.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string bin() {
  const char* env = std::getenv("PENTRACE_BIN");
  REQUIRE(env != nullptr);
  return env;
}

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("pentrace_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("cli pipeline: synth, extract, analyze, train, evaluate, explain") {
  TempDir tmp;
  const std::string cohort = (tmp.path / "cohort").string();
  const std::string feats = (tmp.path / "feats").string();

  REQUIRE(run("synth --out " + cohort + " --n-intact 25 --n-dd 25 --seed 11 --strokes 7") == 0);
  std::size_t svc_count = 0;
  for (const auto& e : fs::directory_iterator(cohort))
    if (e.path().extension() == ".svc") ++svc_count;
  CHECK(svc_count == 50);
  CHECK(fs::exists(fs::path(cohort) / "run_meta.json"));

  SUBCASE("extract a single file") {
    const std::string one = (tmp.path / "one").string();
    REQUIRE(run("extract --input " + cohort + "/S0000.svc --out " + one) == 0);
    const std::string csv = slurp(fs::path(one) / "features.csv");
    CHECK(count_lines(csv) == 2);  // header + 1 row
    CHECK(fs::exists(fs::path(one) / "catalog.json"));
    const json catalog = json::parse(slurp(fs::path(one) / "catalog.json"));
    CHECK(catalog.size() == pentrace::feature_catalog().size());
  }

  REQUIRE(run("extract --input " + cohort + " --out " + feats) == 0);
  const std::string features_csv = (fs::path(feats) / "features.csv").string();
  const std::string csv = slurp(features_csv);
  CHECK(count_lines(csv) == 51);  // header + 50 rows

  // deterministic row order by subject id
  {
    const auto m = pentrace::matrix_from_csv(csv);
    for (std::size_t r = 1; r < m.n_rows(); ++r)
      CHECK(m.meta[r - 1].subject_id < m.meta[r].subject_id);
  }

  SUBCASE("corrupt file fails fast, or is skipped under --keep-going") {
    const fs::path bad_dir = tmp.path / "bad";
    fs::create_directories(bad_dir);
    fs::copy(fs::path(cohort) / "S0000.svc", bad_dir / "S0000.svc");
    fs::copy(fs::path(cohort) / "S0000.json", bad_dir / "S0000.json");
    std::ofstream(bad_dir / "broken.svc") << "2\n1 2 3 1 0 0\n";  // short row

    const std::string out1 = (tmp.path / "bad_out1").string();
    CHECK(run("extract --input " + bad_dir.string() + " --out " + out1) == 2);

    const std::string out2 = (tmp.path / "bad_out2").string();
    CHECK(run("extract --input " + bad_dir.string() + " --keep-going --out " + out2) == 5);
    CHECK(count_lines(slurp(fs::path(out2) / "features.csv")) == 2);  // survivor only
  }

  SUBCASE("analyze finds the injected in-air effect and is byte-stable") {
    const std::string a1 = (tmp.path / "a1").string();
    const std::string a2 = (tmp.path / "a2").string();
    REQUIRE(run("analyze --features " + features_csv + " --out " + a1) == 0);
    REQUIRE(run("analyze --features " + features_csv + " --out " + a2) == 0);
    CHECK(slurp(fs::path(a1) / "analysis.json") == slurp(fs::path(a2) / "analysis.json"));
    CHECK(slurp(fs::path(a1) / "stats_diagnosis.csv") ==
          slurp(fs::path(a2) / "stats_diagnosis.csv"));

    const json analysis = json::parse(slurp(fs::path(a1) / "analysis.json"));
    bool in_air_in_top = false;
    for (const auto& row : analysis["diagnosis"]["top"]) {
      const std::string f = row["feature"].get<std::string>();
      if (f == "duration_writing:in_air:none") {
        in_air_in_top = true;
        CHECK(row["spearman"]["rho"].get<double>() > 0.0);
        CHECK(row["mann_whitney"]["p_fdr"].get<double>() < 0.05);
      }
    }
    CHECK(in_air_in_top);
    CHECK(analysis["alpha"].get<double>() == 0.05);

    const std::string a3 = (tmp.path / "a3").string();
    REQUIRE(run("analyze --features " + features_csv + " --alpha 0.01 --out " + a3) == 0);
    const json strict = json::parse(slurp(fs::path(a3) / "analysis.json"));
    CHECK(strict["alpha"].get<double>() == 0.01);
  }

  SUBCASE("train, evaluate, explain") {
    const std::string t1 = (tmp.path / "t1").string();
    const std::string t2 = (tmp.path / "t2").string();
    const std::string train_flags = " --target diagnosis --n-iter 4 --folds 5 --repeats 2 "
                                    "--seed 7 --n-rounds 60 --out ";
    REQUIRE(run("train --features " + features_csv + train_flags + t1) == 0);
    REQUIRE(run("train --features " + features_csv + train_flags + t2) == 0);
    CHECK(slurp(fs::path(t1) / "eval.json") == slurp(fs::path(t2) / "eval.json"));

    const json search = json::parse(slurp(fs::path(t1) / "search.json"));
    CHECK(search["cv"]["bacc_mean"].get<double>() >= 0.85);
    CHECK(search["n_evaluated"].get<int>() == 4);

    const std::string model = (fs::path(t1) / "model.json").string();
    const std::string ev = (tmp.path / "ev").string();
    REQUIRE(run("evaluate --model " + model + " --features " + features_csv +
                " --target diagnosis --out " + ev) == 0);
    const json evaluation = json::parse(slurp(fs::path(ev) / "evaluation.json"));
    CHECK(evaluation["metrics"]["bacc"].get<double>() >= 0.9);  // training-set fit

    const std::string ex = (tmp.path / "ex").string();
    REQUIRE(run("explain --model " + model + " --features " + features_csv + " --top-k 10 "
                "--out " + ex) == 0);
    const json importance = json::parse(slurp(fs::path(ex) / "importance.json"));
    CHECK(importance["top"].size() == 10);
    CHECK(importance["scale"] == "margin");
    const std::string shap_csv_text = slurp(fs::path(ex) / "shap.csv");
    CHECK(count_lines(shap_csv_text) == 51);

    // local accuracy is preserved through serialization: spot-check one row
    // via the library against the CLI artifacts
    const auto m = pentrace::matrix_from_csv(csv);
    CHECK(m.n_rows() == 50);
  }

  SUBCASE("regression target") {
    const std::string t = (tmp.path / "treg").string();
    REQUIRE(run("train --features " + features_csv +
                " --target total --n-iter 3 --folds 5 --repeats 2 --seed 3 --n-rounds 60 "
                "--out " + t) == 0);
    const json search = json::parse(slurp(fs::path(t) / "search.json"));
    CHECK(search["selection_metric"] == "mae");
    CHECK(search["cv"]["eer_mean"].get<double>() < 25.0);
  }
}

TEST_CASE("cli rejects unknown targets and missing files with distinct codes") {
  TempDir tmp;
  // missing file -> modeling/IO failure class
  CHECK(run("analyze --features " + (tmp.path / "nope.csv").string()) != 0);
  // usage error
  CHECK(run("definitely-not-a-subcommand") == 1);
  CHECK(run("train") == 1);  // missing required --features
}

TEST_CASE("cli report runs the whole pipeline on a directory") {
  TempDir tmp;
  const std::string cohort = (tmp.path / "cohort").string();
  REQUIRE(run("synth --out " + cohort + " --n-intact 12 --n-dd 12 --seed 5 --strokes 6") == 0);
  const std::string out = (tmp.path / "rep").string();
  REQUIRE(run("report --input " + cohort + " --out " + out +
              " --n-iter 2 --folds 4 --repeats 1 --seed 2") == 0);
  for (const char* artifact :
       {"features/features.csv", "features/catalog.json", "analysis/analysis.json",
        "model_diagnosis/model.json", "model_diagnosis/eval.json",
        "explain_diagnosis/importance.json", "explain_diagnosis/shap.csv",
        "model_total/eval.json", "summary.json"}) {
    CHECK(fs::exists(fs::path(out) / artifact));
  }
}

TEST_CASE("cli honors a declarative config file with flag overrides") {
  TempDir tmp;
  const std::string cohort = (tmp.path / "cohort").string();
  std::ofstream cfg(tmp.path / "run.ini");
  cfg << "[synth]\nn-intact=3\nn-dd=4\nseed=9\nstrokes=5\n";
  cfg.close();
  REQUIRE(run("--config " + (tmp.path / "run.ini").string() + " synth --out " + cohort) == 0);
  std::size_t svc_count = 0;
  for (const auto& e : fs::directory_iterator(cohort))
    if (e.path().extension() == ".svc") ++svc_count;
  CHECK(svc_count == 7);

  // a flag on the command line wins over the file value
  const std::string cohort2 = (tmp.path / "cohort2").string();
  REQUIRE(run("--config " + (tmp.path / "run.ini").string() + " synth --out " + cohort2 +
              " --n-dd 1") == 0);
  svc_count = 0;
  for (const auto& e : fs::directory_iterator(cohort2))
    if (e.path().extension() == ".svc") ++svc_count;
  CHECK(svc_count == 4);
}

TEST_CASE("cli analyze errors on an explicitly requested absent target") {
  TempDir tmp;
  const std::string cohort = (tmp.path / "c").string();
  REQUIRE(run("synth --out " + cohort + " --n-intact 4 --n-dd 4 --seed 2 --strokes 5") == 0);
  const std::string feats = (tmp.path / "f").string();
  REQUIRE(run("extract --input " + cohort + " --out " + feats) == 0);

  // strip the questionnaire columns so the total target is absent
  const fs::path csv = fs::path(feats) / "features.csv";
  auto m = pentrace::matrix_from_csv(slurp(csv));
  for (auto& meta : m.meta) meta.hpsqc.reset();
  std::ofstream(csv, std::ios::binary) << pentrace::matrix_to_csv(m);

  CHECK(run("analyze --features " + csv.string() + " --target total --out " +
            (tmp.path / "a").string()) == 4);
  // the default sweep just skips what is not there
  CHECK(run("analyze --features " + csv.string() + " --out " +
            (tmp.path / "b").string()) == 0);
}
