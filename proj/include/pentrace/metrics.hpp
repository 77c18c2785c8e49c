#pragma once

#include <span>

namespace pentrace {

struct ClassificationMetrics {
  double bacc = 0.0;
  double mcc = 0.0;
  double sen = 0.0;
  double spe = 0.0;
};

// Binary labels in {0, 1}; predictions thresholded at 0.5 when given as
// probabilities. BACC = (SEN + SPE) / 2; MCC is 0 when a marginal is empty.
ClassificationMetrics classification_metrics(std::span<const int> y_true,
                                             std::span<const int> y_pred);
ClassificationMetrics classification_metrics_prob(std::span<const int> y_true,
                                                  std::span<const double> y_prob,
                                                  double threshold = 0.5);

struct RegressionMetrics {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double eer = 0.0;  // percent: 100 * MAE / score_range
};

RegressionMetrics regression_metrics(std::span<const double> y_true,
                                     std::span<const double> y_pred, double score_range);

}  // namespace pentrace
