#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "epf/frame.hpp"
#include "epf/tensor.hpp"

namespace epf {

/// Per-feature extrema of the rows the scaler was fitted on.
struct ScalerParams {
  std::vector<std::string> feature_names;
  std::vector<double> min;
  std::vector<double> max;

  /// Throws UnknownFeature.
  std::size_t index_of(std::string_view feature) const;
  double scale(std::size_t feature, double x) const;
  double unscale(std::size_t feature, double x) const;

  std::string to_json() const;
  static ScalerParams from_json(std::string_view text);

  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

/// Half-open row range [begin, end).
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

ScalerParams fit_minmax(const TimeSeriesFrame& frame, RowRange rows);
/// Fits on every row. Callers pass the training partition only.
ScalerParams fit_minmax(const TimeSeriesFrame& frame);

/// x' = (x - min) / (max - min); constant features map to 0. Out-of-range
/// values are not clamped.
TimeSeriesFrame apply_minmax(const TimeSeriesFrame& frame, const ScalerParams& params);
std::vector<double> invert_minmax(std::span<const double> values, const ScalerParams& params,
                                  std::string_view feature);

struct SplitSpec {
  double train_fraction = 0.7;

  std::size_t train_end_index(std::size_t n_rows) const;
};

/// Chronological split: train = rows [0, floor(N * fraction)), test = the rest.
std::pair<TimeSeriesFrame, TimeSeriesFrame> chrono_split(const TimeSeriesFrame& frame,
                                                         const SplitSpec& spec = {});

struct WindowedDataset {
  Tensor inputs;   // samples x window x features
  Tensor targets;  // samples x horizon
  std::size_t window = 0;
  std::size_t horizon = 0;
  std::string target_feature;
  std::vector<std::string> feature_names;
  /// Date of the first target row of each sample.
  std::vector<Date> target_dates;
  /// Date of the first input row of each sample.
  std::vector<Date> input_start_dates;

  std::size_t size() const { return inputs.empty() ? 0 : inputs.dim(0); }
  /// Copy of the samples with the given indices, in order.
  WindowedDataset subset(std::span<const std::size_t> indices) const;
  /// Samples [begin, end).
  WindowedDataset slice(std::size_t begin, std::size_t end) const;
};

inline constexpr std::size_t kDefaultWindow = 30;
inline constexpr std::size_t kDefaultHorizon = 1;

WindowedDataset make_windows(const TimeSeriesFrame& frame, std::size_t window,
                             std::size_t horizon = kDefaultHorizon,
                             std::string_view target_feature = "rrp");

}  // namespace epf
