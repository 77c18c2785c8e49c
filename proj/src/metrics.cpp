#include "pentrace/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pentrace {

ClassificationMetrics classification_metrics(std::span<const int> y_true,
                                             std::span<const int> y_pred) {
  if (y_true.empty() || y_true.size() != y_pred.size())
    throw std::invalid_argument("classification_metrics: empty or mismatched inputs");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1)
      (y_pred[i] == 1 ? tp : fn) += 1;
    else
      (y_pred[i] == 1 ? fp : tn) += 1;
  }
  ClassificationMetrics m;
  m.sen = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.spe = tn + fp > 0 ? tn / (tn + fp) : 0.0;
  m.bacc = (m.sen + m.spe) / 2.0;
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  m.mcc = denom > 0 ? (tp * tn - fp * fn) / std::sqrt(denom) : 0.0;
  return m;
}

ClassificationMetrics classification_metrics_prob(std::span<const int> y_true,
                                                  std::span<const double> y_prob,
                                                  double threshold) {
  std::vector<int> pred(y_prob.size());
  for (std::size_t i = 0; i < y_prob.size(); ++i) pred[i] = y_prob[i] >= threshold ? 1 : 0;
  return classification_metrics(y_true, pred);
}

RegressionMetrics regression_metrics(std::span<const double> y_true,
                                     std::span<const double> y_pred, double score_range) {
  if (y_true.empty() || y_true.size() != y_pred.size())
    throw std::invalid_argument("regression_metrics: empty or mismatched inputs");
  if (score_range <= 0) throw std::invalid_argument("score_range must be positive");
  RegressionMetrics m;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double e = y_pred[i] - y_true[i];
    m.mae += std::abs(e);
    m.mse += e * e;
  }
  const double n = static_cast<double>(y_true.size());
  m.mae /= n;
  m.mse /= n;
  m.rmse = std::sqrt(m.mse);
  m.eer = 100.0 * m.mae / score_range;
  return m;
}

}  // namespace pentrace
