#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pentrace/features.hpp"

namespace pentrace {

enum class StatTest { mann_whitney, spearman };

const char* to_string(StatTest t);

struct StatResult {
  std::string feature;
  StatTest test = StatTest::mann_whitney;
  double statistic = 0.0;               // U for Mann-Whitney, t for Spearman
  std::optional<double> rho;            // Spearman only
  double p = 1.0;
  double p_fdr = 1.0;
  std::size_t n_effective = 0;
  int direction = 0;                    // sign of the association
  bool missing = false;                 // result undefined (degenerate input)
};

// Two-sided Mann-Whitney U. Exact enumeration when both groups have <= 9
// values and the pooled sample is tie-free; otherwise normal approximation
// with tie and continuity corrections. U is reported for group A.
StatResult mann_whitney_u(std::span<const double> group_a, std::span<const double> group_b);

// Both paths exposed for oracle comparisons.
double mann_whitney_exact_p(std::span<const double> group_a, std::span<const double> group_b);
double mann_whitney_approx_p(std::span<const double> group_a, std::span<const double> group_b);
double mann_whitney_u_statistic(std::span<const double> group_a, std::span<const double> group_b);

// Spearman rank correlation with average ranks for ties. p is exact by
// permutation for n <= 10, otherwise the t approximation with n-2 df.
StatResult spearman(std::span<const double> x, std::span<const double> y);

// Average (fractional) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> values);

// Benjamini-Hochberg step-up adjustment; input order preserved, clipped to 1.
std::vector<double> fdr_bh(std::span<const double> p_values);

struct ConfoundResult {
  FeatureMatrix matrix;
  std::vector<std::string> warnings;  // columns passed through unchanged
};

// Replaces each feature column by residuals from an OLS fit on the confound
// level indicators (equivalently, subtracts the per-level mean). Missing
// cells stay missing and are excluded from the fit. A column whose confound
// level has fewer than two present values passes through with a warning.
ConfoundResult regress_out_confound(const FeatureMatrix& m,
                                    const std::vector<int>& confound_levels);

enum class TargetKind { binary, continuous };

struct ExploratoryOptions {
  double alpha = 0.05;
  bool fdr_per_family = true;  // separate BH families per test
};

struct ExploratoryReport {
  std::vector<StatResult> mann_whitney;  // empty for continuous targets
  std::vector<StatResult> spearman;
  std::vector<std::size_t> order;        // column indices sorted by ascending raw p
};

// Per-feature Mann-Whitney (binary targets) plus Spearman against the target,
// FDR-adjusted per test family, sorted ascending by raw p. target uses NaN
// for rows without a target value.
ExploratoryReport exploratory_analysis(const FeatureMatrix& m, std::span<const double> target,
                                       TargetKind kind, const ExploratoryOptions& opt = {});

}  // namespace pentrace
