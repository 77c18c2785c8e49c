#include "pentrace/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "pentrace/descriptive.hpp"

namespace pentrace {

namespace {

constexpr double kMinP = 1e-300;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / M_SQRT2); }

bool has_ties(std::vector<double> pooled) {
  std::sort(pooled.begin(), pooled.end());
  return std::adjacent_find(pooled.begin(), pooled.end()) != pooled.end();
}

// counts[k][s]: number of k-subsets of ranks {1..n} with rank sum s.
std::vector<std::vector<double>> rank_sum_counts(std::size_t n, std::size_t k) {
  const std::size_t smax = k * (2 * n - k + 1) / 2;
  std::vector<std::vector<double>> ways(k + 1, std::vector<double>(smax + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t rank = 1; rank <= n; ++rank) {
    for (std::size_t kk = std::min(rank, k); kk >= 1; --kk) {
      for (std::size_t s = smax; s >= rank; --s) {
        if (ways[kk - 1][s - rank] > 0) ways[kk][s] += ways[kk - 1][s - rank];
      }
    }
  }
  return ways;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double mann_whitney_u_statistic(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = average_ranks(pooled);
  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) rank_sum_a += ranks[i];
  return rank_sum_a - static_cast<double>(a.size()) * (static_cast<double>(a.size()) + 1) / 2.0;
}

double mann_whitney_exact_p(std::span<const double> a, std::span<const double> b) {
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  const double u = mann_whitney_u_statistic(a, b);
  const auto ways = rank_sum_counts(n, na);
  const double offset = static_cast<double>(na) * (static_cast<double>(na) + 1) / 2.0;
  double total = 0.0, cdf = 0.0, sf = 0.0;
  for (std::size_t s = 0; s < ways[na].size(); ++s) {
    const double w = ways[na][s];
    if (w == 0.0) continue;
    total += w;
    const double us = static_cast<double>(s) - offset;
    if (us <= u + 1e-9) cdf += w;
    if (us >= u - 1e-9) sf += w;
  }
  return std::min(1.0, 2.0 * std::min(cdf, sf) / total);
}

double mann_whitney_approx_p(std::span<const double> a, std::span<const double> b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  const double u = mann_whitney_u_statistic(a, b);
  const double mu = na * nb / 2.0;

  // tie correction over pooled value multiplicities
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j + 1 < pooled.size() && pooled[j + 1] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) return 1.0;

  double num = u - mu;
  if (num > 0.5)
    num -= 0.5;  // continuity correction toward the mean
  else if (num < -0.5)
    num += 0.5;
  else
    num = 0.0;
  const double z = num / std::sqrt(var);
  return std::max(kMinP, std::min(1.0, 2.0 * normal_cdf(-std::abs(z))));
}

StatResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("mann_whitney_u: both groups need at least one value");
  StatResult r;
  r.test = StatTest::mann_whitney;
  r.n_effective = a.size() + b.size();
  r.statistic = mann_whitney_u_statistic(a, b);
  const double mu = static_cast<double>(a.size()) * static_cast<double>(b.size()) / 2.0;
  r.direction = r.statistic > mu ? 1 : (r.statistic < mu ? -1 : 0);

  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  if (a.size() <= 9 && b.size() <= 9 && !has_ties(pooled))
    r.p = mann_whitney_exact_p(a, b);
  else
    r.p = mann_whitney_approx_p(a, b);
  r.p_fdr = r.p;
  return r;
}

namespace {

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

double spearman_t_p(double rho, std::size_t n) {
  if (std::abs(rho) >= 1.0) return kMinP;
  const double df = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  boost::math::students_t_distribution<double> dist(df);
  return std::max(kMinP, std::min(1.0, 2.0 * boost::math::cdf(dist, -std::abs(t))));
}

double spearman_permutation_p(std::span<const double> xr, std::vector<double> yr,
                              double rho_obs) {
  std::sort(yr.begin(), yr.end());
  std::size_t hits = 0, total = 0;
  do {
    ++total;
    const double rho = pearson(xr, yr);
    if (std::abs(rho) >= std::abs(rho_obs) - 1e-12) ++hits;
  } while (std::next_permutation(yr.begin(), yr.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

StatResult spearman(std::span<const double> x, std::span<const double> y) {
  StatResult r;
  r.test = StatTest::spearman;
  const std::size_t n = std::min(x.size(), y.size());
  r.n_effective = n;
  if (n < 3) {
    r.missing = true;
    return r;
  }
  const auto xr = average_ranks(x.first(n));
  const auto yr = average_ranks(y.first(n));
  const double rho = pearson(xr, yr);
  if (std::isnan(rho)) {
    r.missing = true;
    return r;
  }
  r.rho = rho;
  r.direction = rho > 0 ? 1 : (rho < 0 ? -1 : 0);
  const double df = static_cast<double>(n - 2);
  r.statistic = std::abs(rho) >= 1.0 ? std::numeric_limits<double>::infinity()
                                     : rho * std::sqrt(df / (1.0 - rho * rho));
  r.p = n <= 10 ? spearman_permutation_p(xr, yr, rho) : spearman_t_p(rho, n);
  r.p_fdr = r.p;
  return r;
}

std::vector<double> fdr_bh(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  std::vector<double> adjusted(m, 0.0);
  if (m == 0) return adjusted;

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

  double running_min = 1.0;
  for (std::size_t i = m; i-- > 0;) {
    const double stepped =
        p_values[order[i]] * static_cast<double>(m) / static_cast<double>(i + 1);
    running_min = std::min(running_min, std::min(1.0, stepped));
    adjusted[order[i]] = running_min;
  }
  return adjusted;
}

ConfoundResult regress_out_confound(const FeatureMatrix& m,
                                    const std::vector<int>& confound_levels) {
  if (confound_levels.size() != m.n_rows())
    throw std::invalid_argument("confound vector length must match the row count");
  std::map<int, std::size_t> level_rows;
  for (int lv : confound_levels) level_rows[lv]++;
  if (level_rows.size() < 2)
    throw std::invalid_argument("confound needs at least two levels");
  for (const auto& [lv, cnt] : level_rows) {
    if (cnt < 2)
      throw std::invalid_argument("confound level " + std::to_string(lv) +
                                  " has fewer than two rows");
  }

  ConfoundResult result;
  result.matrix = m;
  for (std::size_t c = 0; c < m.n_cols(); ++c) {
    std::map<int, std::pair<double, std::size_t>> acc;  // level -> (sum, count)
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
      if (m.is_missing(r, c)) continue;
      auto& a = acc[confound_levels[r]];
      a.first += m.values[r][c];
      a.second += 1;
    }
    bool degenerate = false;
    for (const auto& [lv, cnt] : level_rows) {
      auto it = acc.find(lv);
      if (it == acc.end() || it->second.second < 2) degenerate = true;
    }
    if (degenerate) {
      result.warnings.push_back("column " + m.columns[c] +
                                " passed through: a confound level has fewer than two values");
      continue;
    }
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
      if (m.is_missing(r, c)) continue;
      const auto& a = acc[confound_levels[r]];
      result.matrix.values[r][c] = m.values[r][c] - a.first / static_cast<double>(a.second);
    }
  }
  return result;
}

const char* to_string(StatTest t) {
  return t == StatTest::mann_whitney ? "mann_whitney" : "spearman";
}

ExploratoryReport exploratory_analysis(const FeatureMatrix& m, std::span<const double> target,
                                       TargetKind kind, const ExploratoryOptions& opt) {
  if (target.size() != m.n_rows())
    throw std::invalid_argument("target length must match the row count");
  ExploratoryReport report;

  for (std::size_t c = 0; c < m.n_cols(); ++c) {
    std::vector<double> xs, ys;  // feature, target over complete pairs
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
      if (m.is_missing(r, c) || std::isnan(target[r])) continue;
      xs.push_back(m.values[r][c]);
      ys.push_back(target[r]);
    }

    if (kind == TargetKind::binary) {
      StatResult mw;
      mw.feature = m.columns[c];
      mw.test = StatTest::mann_whitney;
      std::vector<double> pos, neg;
      for (std::size_t i = 0; i < xs.size(); ++i) (ys[i] > 0.5 ? pos : neg).push_back(xs[i]);
      if (pos.empty() || neg.empty()) {
        mw.missing = true;
      } else {
        mw = mann_whitney_u(pos, neg);
        mw.feature = m.columns[c];
      }
      report.mann_whitney.push_back(std::move(mw));
    }

    StatResult sp = spearman(xs, ys);
    sp.feature = m.columns[c];
    report.spearman.push_back(std::move(sp));
  }

  // FDR per test family across all non-degenerate features
  auto apply_fdr = [](std::vector<StatResult>& family) {
    std::vector<double> ps;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < family.size(); ++i) {
      if (!family[i].missing) {
        ps.push_back(family[i].p);
        idx.push_back(i);
      }
    }
    const auto adj = fdr_bh(ps);
    for (std::size_t i = 0; i < idx.size(); ++i) family[idx[i]].p_fdr = adj[i];
  };
  apply_fdr(report.spearman);
  if (!report.mann_whitney.empty()) {
    if (opt.fdr_per_family) {
      apply_fdr(report.mann_whitney);
    } else {
      // joint family across both tests
      std::vector<double> ps;
      for (const auto& r : report.mann_whitney)
        if (!r.missing) ps.push_back(r.p);
      for (const auto& r : report.spearman)
        if (!r.missing) ps.push_back(r.p);
      const auto adj = fdr_bh(ps);
      std::size_t k = 0;
      for (auto& r : report.mann_whitney)
        if (!r.missing) r.p_fdr = adj[k++];
      for (auto& r : report.spearman)
        if (!r.missing) r.p_fdr = adj[k++];
    }
  }

  // ranking by ascending raw p of the family matching the target kind
  const auto& primary =
      kind == TargetKind::binary ? report.mann_whitney : report.spearman;
  report.order.resize(primary.size());
  std::iota(report.order.begin(), report.order.end(), 0);
  std::stable_sort(report.order.begin(), report.order.end(), [&](std::size_t a, std::size_t b) {
    const double pa = primary[a].missing ? 2.0 : primary[a].p;
    const double pb = primary[b].missing ? 2.0 : primary[b].p;
    return pa < pb;
  });
  return report;
}

}  // namespace pentrace
