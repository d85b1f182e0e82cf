#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace epf {

/// Root mean squared error.
double rmse(std::span<const double> actual, std::span<const double> predicted);
/// Mean absolute error.
double mae(std::span<const double> actual, std::span<const double> predicted);

/// Price-spike rule that turns forecasts into binary labels: a value is a
/// spike iff it is strictly above the nearest-rank `quantile` of the
/// training-partition actuals.
struct SpikeRule {
  double quantile = 0.90;
  std::optional<double> threshold;
};

/// Order statistic at 1-based rank ceil(quantile * n).
double resolve_spike_threshold(std::span<const double> train_actuals, double quantile);
SpikeRule resolve_spike_threshold(std::span<const double> train_actuals, SpikeRule rule);

std::vector<bool> spike_labels(std::span<const double> values, double threshold);

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion_from_labels(const std::vector<bool>& actual,
                                      const std::vector<bool>& predicted);

/// Accuracy, precision, recall and F-score. A ratio with a zero denominator
/// is reported as 0.0 and flagged.
struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f_score_undefined = false;
};

/// Harmonic mean 2pr/(p+r), 0 when p + r == 0.
double f_score(double precision, double recall);
ClassificationMetrics classification_metrics(const ConfusionCounts& counts);

struct MetricsReport {
  std::size_t n = 0;
  double rmse = 0.0;  // $/MWh
  double mae = 0.0;   // $/MWh
  ClassificationMetrics classification;
  ConfusionCounts confusion;
  double spike_threshold = 0.0;

  std::string to_json() const;
};

/// Error metrics plus spike classification of both vectors against `threshold`.
MetricsReport full_report(std::span<const double> actual, std::span<const double> predicted,
                          double threshold);

/// One row per model: Algorithm, Accuracy (%), Precision, Recall, F-Score,
/// followed by RMSE and MAE.
std::string comparison_csv(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace epf
