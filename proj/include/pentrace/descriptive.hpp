#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace pentrace {

// Quantile with linear interpolation between closest ranks, h = (n-1)p.
// Quartiles of {1,2,3,4,5} are 2 and 4 under this convention.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = static_cast<double>(n - 1) * p;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline std::optional<double> quantile(std::span<const double> values, double p) {
  if (values.empty()) return std::nullopt;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, p);
}

inline std::optional<double> median(std::span<const double> values) {
  return quantile(values, 0.5);
}

inline std::optional<double> iqr(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
}

// An IQR below rounding noise counts as zero: values that are constant up to
// floating-point error (e.g. derivatives of a 3-sample stroke, which lie on
// one parabola exactly) must not produce noise-amplified ratios. Derivative
// chains leave up to ~1e-11 relative noise, so anything under 1e-9 of the
// value scale is treated as a constant vector.
inline bool iqr_is_degenerate(double q1, double q3) {
  return q3 - q1 <= 1e-9 * std::max(std::abs(q1), std::abs(q3));
}

// non-parametric coefficient of variation: median / IQR. Degenerate when
// IQR == 0 (constant-ish vector), reported as missing.
inline std::optional<double> ncv(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile_sorted(sorted, 0.25);
  const double q3 = quantile_sorted(sorted, 0.75);
  if (iqr_is_degenerate(q1, q3)) return std::nullopt;
  return quantile_sorted(sorted, 0.5) / (q3 - q1);
}

// Ordinary least-squares slope of y against x. Missing when fewer than two
// points or x has zero variance.
inline std::optional<double> ols_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

// Slope of y against its own 0-based index.
inline std::optional<double> ols_slope_indexed(std::span<const double> y) {
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) x[i] = static_cast<double>(i);
  return ols_slope(x, y);
}

inline double mean(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
inline double stddev(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(n - 1));
}

}  // namespace pentrace
