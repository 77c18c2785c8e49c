#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "helpers.hpp"
#include "pentrace/stats.hpp"

using namespace pentrace;

namespace {

// brute-force Mann-Whitney oracle: enumerate every way to pick which na of
// the pooled values form group A, tally the exact two-sided tail
double mw_brute_force_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  const double u_obs = mann_whitney_u_statistic(a, b);

  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(na), true);
  std::sort(pick.begin(), pick.end());
  std::vector<double> ga, gb;
  double total = 0, cdf = 0, sf = 0;
  do {
    ga.clear();
    gb.clear();
    for (std::size_t i = 0; i < n; ++i) (pick[i] ? ga : gb).push_back(pooled[i]);
    const double u = mann_whitney_u_statistic(ga, gb);
    total += 1;
    if (u <= u_obs + 1e-9) cdf += 1;
    if (u >= u_obs - 1e-9) sf += 1;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return std::min(1.0, 2.0 * std::min(cdf, sf) / total);
}

// rank-then-Pearson oracle for Spearman
double spearman_brute_force(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  double mx = 0, my = 0;
  for (double v : rx) mx += v;
  for (double v : ry) my += v;
  mx /= static_cast<double>(rx.size());
  my /= static_cast<double>(ry.size());
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
    sxy += (rx[i] - mx) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("mann-whitney: fully separated small groups") {
  const std::vector<double> a = {1, 2, 3}, b = {4, 5, 6};
  const StatResult r = mann_whitney_u(a, b);
  CHECK(r.statistic == doctest::Approx(0.0));
  CHECK(r.p == doctest::Approx(0.1).epsilon(1e-12));  // 2/20 rank assignments
  CHECK(r.direction == -1);
}

TEST_CASE("mann-whitney: identical multisets give p = 1 and U = n^2/2") {
  const std::vector<double> a = {1, 2, 3}, b = {1, 2, 3};
  const StatResult r = mann_whitney_u(a, b);
  CHECK(r.statistic == doctest::Approx(4.5));  // 3*3/2
  CHECK(r.p == doctest::Approx(1.0));
  CHECK(r.direction == 0);
}

TEST_CASE("mann-whitney: large shifted normals are overwhelmingly significant") {
  Rng rng(2024);
  std::vector<double> a, b;
  for (int i = 0; i < 50; ++i) {
    a.push_back(rng.normal(0.0, 1.0));
    b.push_back(rng.normal(2.0, 1.0));
  }
  const StatResult r = mann_whitney_u(a, b);
  CHECK(r.p < 0.001);
  CHECK(r.direction == -1);
}

TEST_CASE("mann-whitney: empty group is an error") {
  const std::vector<double> a = {1.0}, empty;
  CHECK_THROWS_AS(mann_whitney_u(a, empty), std::invalid_argument);
  CHECK_THROWS_AS(mann_whitney_u(empty, a), std::invalid_argument);
}

TEST_CASE("mann-whitney: exact p matches brute-force enumeration on small groups") {
  Rng rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t na = 1 + rng.below(5), nb = 1 + rng.below(5);
    std::vector<double> pool(32);
    std::iota(pool.begin(), pool.end(), 0.0);
    rng.shuffle(pool);
    std::vector<double> a(pool.begin(), pool.begin() + static_cast<long>(na));
    std::vector<double> b(pool.begin() + static_cast<long>(na),
                          pool.begin() + static_cast<long>(na + nb));
    CHECK(mann_whitney_exact_p(a, b) == doctest::Approx(mw_brute_force_p(a, b)).epsilon(1e-10));
  }
}

TEST_CASE("mann-whitney: invariant under strictly monotone transforms") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a, b;
    for (int i = 0; i < 8; ++i) a.push_back(rng.uniform(-5, 5));
    for (int i = 0; i < 11; ++i) b.push_back(rng.uniform(-5, 5));
    const StatResult base = mann_whitney_u(a, b);
    auto mono = [](double v) { return std::exp(0.3 * v) + v * 0.01; };
    for (auto& v : a) v = mono(v);
    for (auto& v : b) v = mono(v);
    const StatResult t = mann_whitney_u(a, b);
    CHECK(t.statistic == doctest::Approx(base.statistic));
    CHECK(t.p == doctest::Approx(base.p).epsilon(1e-12));
  }
}

TEST_CASE("spearman: hand cases") {
  SUBCASE("monotone sequences") {
    const std::vector<double> x = {1, 2, 3, 4, 5};
    const std::vector<double> up = {10, 20, 30, 40, 50};
    CHECK(*spearman(x, up).rho == doctest::Approx(1.0));
    const std::vector<double> down = {9, 6, 5, 2, -3};
    CHECK(*spearman(x, down).rho == doctest::Approx(-1.0));
  }
  SUBCASE("classic 0.8 example") {
    const std::vector<double> x = {1, 2, 3, 4, 5};
    const std::vector<double> y = {1, 3, 2, 5, 4};
    const StatResult r = spearman(x, y);
    CHECK(*r.rho == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(*r.rho == doctest::Approx(1.0 - 6.0 * 4.0 / (5.0 * 24.0)));
    CHECK(r.direction == 1);
    CHECK(r.p > 0);
    CHECK(r.p <= 1);
  }
  SUBCASE("degenerate variance") {
    const std::vector<double> x = {1, 2, 3, 4};
    const std::vector<double> y = {7, 7, 7, 7};
    CHECK(spearman(x, y).missing);
  }
}

TEST_CASE("spearman: matches rank-then-Pearson brute force with ties") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + rng.below(18);
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = std::round(rng.uniform(0.0, 8.0));  // many ties
    for (auto& v : y) v = std::round(rng.uniform(0.0, 8.0));
    const StatResult r = spearman(x, y);
    if (r.missing) continue;
    CHECK(*r.rho == doctest::Approx(spearman_brute_force(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("spearman: symmetry, monotone invariance, sign flip") {
  Rng rng(18);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng.below(20);
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = rng.uniform(-10, 10);
    for (auto& v : y) v = rng.uniform(-10, 10);
    const StatResult base = spearman(x, y);
    if (base.missing) continue;

    CHECK(*spearman(y, x).rho == doctest::Approx(*base.rho).epsilon(1e-12));

    std::vector<double> xt(n);
    for (std::size_t i = 0; i < n; ++i) xt[i] = std::exp(x[i] * 0.2);
    CHECK(*spearman(xt, y).rho == doctest::Approx(*base.rho).epsilon(1e-12));

    std::vector<double> yn(n);
    for (std::size_t i = 0; i < n; ++i) yn[i] = -y[i];
    CHECK(*spearman(x, yn).rho == doctest::Approx(-*base.rho).epsilon(1e-12));
  }
}

TEST_CASE("fdr: worked example and edge cases") {
  const std::vector<double> p = {0.01, 0.02, 0.04};
  const auto adj = fdr_bh(p);
  CHECK(adj[0] == doctest::Approx(0.03));
  CHECK(adj[1] == doctest::Approx(0.03));
  CHECK(adj[2] == doctest::Approx(0.04));

  CHECK(fdr_bh(std::vector<double>{0.03})[0] == doctest::Approx(0.03));
  CHECK(fdr_bh(std::vector<double>{}).empty());

  const std::vector<double> equal = {0.2, 0.2, 0.2, 0.2};
  for (double v : fdr_bh(equal)) CHECK(v == doctest::Approx(0.2));
}

TEST_CASE("fdr: monotone, dominating, permutation-consistent") {
  Rng rng(900);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 1 + rng.below(40);
    std::vector<double> p(m);
    for (auto& v : p) v = std::min(1.0, rng.uniform01() + 1e-12);
    const auto adj = fdr_bh(p);

    for (std::size_t i = 0; i < m; ++i) {
      CHECK(adj[i] >= p[i] - 1e-15);
      CHECK(adj[i] <= 1.0);
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return p[x] < p[y]; });
    for (std::size_t i = 1; i < m; ++i)
      CHECK(adj[order[i]] >= adj[order[i - 1]] - 1e-15);

    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<double> pp(m);
    for (std::size_t i = 0; i < m; ++i) pp[i] = p[perm[i]];
    const auto adj_p = fdr_bh(pp);
    for (std::size_t i = 0; i < m; ++i)
      CHECK(adj_p[i] == doctest::Approx(adj[perm[i]]).epsilon(1e-12));
  }
}

namespace {

FeatureMatrix matrix_from_columns(const std::vector<std::string>& names,
                                  const std::vector<std::vector<double>>& cols) {
  FeatureMatrix m;
  m.columns = names;
  const std::size_t n = cols[0].size();
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> row;
    for (const auto& c : cols) row.push_back(c[r]);
    m.values.push_back(row);
    RowMeta meta;
    meta.subject_id = "S" + std::to_string(r);
    m.meta.push_back(meta);
  }
  return m;
}

}  // namespace

TEST_CASE("confound regression: closed-form cases") {
  const std::vector<int> levels = {0, 0, 0, 0, 1, 1, 1, 1};

  SUBCASE("feature equal to the indicator becomes zero") {
    const auto m = matrix_from_columns({"f"}, {{0, 0, 0, 0, 1, 1, 1, 1}});
    const auto res = regress_out_confound(m, levels);
    for (std::size_t r = 0; r < 8; ++r) CHECK(std::abs(res.matrix.values[r][0]) < 1e-10);
  }
  SUBCASE("feature independent of the confound keeps grand-mean residuals") {
    const auto m = matrix_from_columns({"f"}, {{1, 2, 3, 4, 1, 2, 3, 4}});
    const auto res = regress_out_confound(m, levels);
    for (std::size_t r = 0; r < 8; ++r)
      CHECK(res.matrix.values[r][0] == doctest::Approx(m.values[r][0] - 2.5));
  }
  SUBCASE("group means are removed exactly") {
    Rng rng(3);
    std::vector<double> col;
    for (int i = 0; i < 4; ++i) col.push_back(10.0 + rng.normal(0, 1));
    for (int i = 0; i < 4; ++i) col.push_back(20.0 + rng.normal(0, 1));
    const auto m = matrix_from_columns({"f"}, {col});
    const auto res = regress_out_confound(m, levels);
    double mean_a = 0, mean_b = 0;
    for (int r = 0; r < 4; ++r) mean_a += res.matrix.values[static_cast<std::size_t>(r)][0];
    for (int r = 4; r < 8; ++r) mean_b += res.matrix.values[static_cast<std::size_t>(r)][0];
    CHECK(std::abs(mean_a / 4) < 1e-10);
    CHECK(std::abs(mean_b / 4) < 1e-10);
  }
}

TEST_CASE("confound regression: residuals are orthogonal to the indicator") {
  Rng rng(44);
  const std::size_t n = 30;
  std::vector<int> levels(n);
  std::vector<double> col(n);
  for (std::size_t i = 0; i < n; ++i) {
    levels[i] = rng.uniform01() < 0.4 ? 0 : 1;
    col[i] = rng.normal(levels[i] * 3.0, 1.0);
    if (rng.uniform01() < 0.15) col[i] = FeatureMatrix::kMissing;
  }
  const auto m = matrix_from_columns({"f"}, {col});
  const auto res = regress_out_confound(m, levels);
  double sxy = 0, sxx = 0, syy = 0, sx = 0, sy = 0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (res.matrix.is_missing(i, 0)) {
      CHECK(m.is_missing(i, 0));
      continue;
    }
    sx += levels[i];
    sy += res.matrix.values[i][0];
    ++k;
  }
  const double mx = sx / static_cast<double>(k), my = sy / static_cast<double>(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (res.matrix.is_missing(i, 0)) continue;
    sxy += (levels[i] - mx) * (res.matrix.values[i][0] - my);
    sxx += (levels[i] - mx) * (levels[i] - mx);
    syy += (res.matrix.values[i][0] - my) * (res.matrix.values[i][0] - my);
  }
  CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 1e-10);
}

TEST_CASE("confound regression: sparse level passes a column through with a warning") {
  const std::vector<int> levels = {0, 0, 0, 1, 1, 1};
  std::vector<double> col = {1, 2, 3, 4, 5, FeatureMatrix::kMissing};
  std::vector<double> sparse = {1, 2, 3, 4, FeatureMatrix::kMissing, FeatureMatrix::kMissing};
  const auto m = matrix_from_columns({"ok", "sparse"}, {col, sparse});
  const auto res = regress_out_confound(m, levels);
  REQUIRE(res.warnings.size() == 1);
  CHECK(res.warnings[0].find("sparse") != std::string::npos);
  for (std::size_t r = 0; r < 4; ++r)
    CHECK(res.matrix.values[r][1] == m.values[r][1]);
}

TEST_CASE("exploratory analysis: constant target leaves Spearman missing") {
  Rng rng(71);
  std::vector<std::vector<double>> cols(3, std::vector<double>(12));
  for (auto& c : cols)
    for (auto& v : c) v = rng.normal(0, 1);
  const auto m = matrix_from_columns({"a", "b", "c"}, cols);
  std::vector<double> target(12, 1.0);
  const auto rep = exploratory_analysis(m, target, TargetKind::continuous);
  for (const auto& r : rep.spearman) CHECK(r.missing);
}

TEST_CASE("exploratory analysis: permuted labels give a calibrated null") {
  Rng rng(123);
  const std::size_t n = 60, d = 200;
  std::vector<std::vector<double>> cols(d, std::vector<double>(n));
  for (auto& c : cols)
    for (auto& v : c) v = rng.normal(0, 1);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < d; ++i) names.push_back("f" + std::to_string(i));
  const auto m = matrix_from_columns(names, cols);

  std::vector<double> target(n, 0.0);
  for (std::size_t i = 0; i < n / 2; ++i) target[i] = 1.0;
  Rng perm_rng(9);
  perm_rng.shuffle(target);

  const auto rep = exploratory_analysis(m, target, TargetKind::binary);
  std::size_t below = 0;
  for (const auto& r : rep.mann_whitney) {
    CHECK(!r.missing);
    CHECK(r.p_fdr >= r.p - 1e-15);
    if (r.p < 0.05) ++below;
  }
  const double frac = static_cast<double>(below) / static_cast<double>(d);
  CHECK(frac <= 0.05 + 2.58 * std::sqrt(0.05 * 0.95 / static_cast<double>(d)));

  for (std::size_t i = 1; i < rep.order.size(); ++i)
    CHECK(rep.mann_whitney[rep.order[i - 1]].p <= rep.mann_whitney[rep.order[i]].p + 1e-15);
}
