#include "epf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "epf/error.hpp"

namespace epf {

namespace {

void check_pair(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(actual.size()) + " actual vs " +
                                               std::to_string(predicted.size()) + " predicted");
  }
  if (actual.empty()) throw Error(ErrorCode::EmptyInput, "no values to score");
}

double ratio(std::size_t num, std::size_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double rmse(std::span<const double> actual, std::span<const double> predicted) {
  check_pair(actual, predicted);
  double ss = 0.0;
  for (std::size_t j = 0; j < actual.size(); ++j) {
    const double e = actual[j] - predicted[j];
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(actual.size()));
}

double mae(std::span<const double> actual, std::span<const double> predicted) {
  check_pair(actual, predicted);
  double s = 0.0;
  for (std::size_t j = 0; j < actual.size(); ++j) s += std::abs(actual[j] - predicted[j]);
  return s / static_cast<double>(actual.size());
}

double resolve_spike_threshold(std::span<const double> train_actuals, double quantile) {
  if (train_actuals.empty()) throw Error(ErrorCode::EmptyInput, "no training actuals for the spike threshold");
  if (!(quantile > 0.0 && quantile < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "spike quantile must be in (0, 1)");
  }
  std::vector<double> sorted(train_actuals.begin(), train_actuals.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // The small offset keeps q*n that is integral in exact arithmetic from
  // rounding up a whole rank (0.9 * 10 must give rank 9).
  auto rank = static_cast<std::size_t>(std::ceil(quantile * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

SpikeRule resolve_spike_threshold(std::span<const double> train_actuals, SpikeRule rule) {
  rule.threshold = resolve_spike_threshold(train_actuals, rule.quantile);
  return rule;
}

std::vector<bool> spike_labels(std::span<const double> values, double threshold) {
  std::vector<bool> labels(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) labels[i] = values[i] > threshold;
  return labels;
}

ConfusionCounts confusion_from_labels(const std::vector<bool>& actual,
                                      const std::vector<bool>& predicted) {
  if (actual.size() != predicted.size()) {
    throw Error(ErrorCode::LengthMismatch, "label vectors differ in length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i]) {
      predicted[i] ? ++c.tp : ++c.fn;
    } else {
      predicted[i] ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double f_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

ClassificationMetrics classification_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error(ErrorCode::EmptyCounts, "no samples in confusion counts");
  ClassificationMetrics m;
  bool unused = false;
  m.accuracy = ratio(c.tp + c.tn, c.total(), unused);
  m.precision = ratio(c.tp, c.tp + c.fp, m.precision_undefined);
  m.recall = ratio(c.tp, c.tp + c.fn, m.recall_undefined);
  m.f_score_undefined = m.precision + m.recall == 0.0;
  m.f_score = f_score(m.precision, m.recall);
  return m;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["n"] = n;
  j["rmse"] = rmse;
  j["mae"] = mae;
  j["accuracy"] = classification.accuracy;
  j["precision"] = classification.precision;
  j["recall"] = classification.recall;
  j["f_score"] = classification.f_score;
  j["tp"] = confusion.tp;
  j["fp"] = confusion.fp;
  j["tn"] = confusion.tn;
  j["fn"] = confusion.fn;
  j["spike_threshold"] = spike_threshold;
  j["precision_undefined"] = classification.precision_undefined;
  j["recall_undefined"] = classification.recall_undefined;
  j["f_score_undefined"] = classification.f_score_undefined;
  return j.dump(2);
}

MetricsReport full_report(std::span<const double> actual, std::span<const double> predicted,
                          double threshold) {
  MetricsReport r;
  r.n = actual.size();
  r.rmse = rmse(actual, predicted);
  r.mae = mae(actual, predicted);
  r.spike_threshold = threshold;
  r.confusion = confusion_from_labels(spike_labels(actual, threshold), spike_labels(predicted, threshold));
  r.classification = classification_metrics(r.confusion);
  return r;
}

std::string comparison_csv(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::ostringstream os;
  os << "Algorithm,Accuracy (%),Precision,Recall,F-Score,RMSE,MAE\n";
  char buf[256];
  for (const auto& [name, r] : rows) {
    const auto& m = r.classification;
    std::snprintf(buf, sizeof buf, "%s,%.2f,%.4f,%.4f,%.4f,%.6f,%.6f\n", name.c_str(),
                  100.0 * m.accuracy, m.precision, m.recall, m.f_score, r.rmse, r.mae);
    os << buf;
  }
  return os.str();
}

}  // namespace epf
