#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epf/date.hpp"
#include "epf/frame.hpp"
#include "epf/graph.hpp"
#include "epf/preprocess.hpp"

namespace epf {

enum class Resolution { Daily, Monthly };

std::string_view to_string(Resolution r) noexcept;

struct ForecastResult {
  std::vector<Date> dates;  // first day of the month at monthly resolution
  std::vector<double> rrp_forecast;  // $/MWh
  Resolution resolution = Resolution::Daily;
  /// Monthly rows whose month is not fully covered by daily forecasts.
  std::vector<bool> partial_month;

  std::size_t horizon_steps() const noexcept { return rrp_forecast.size(); }
  /// Columns: date, rrp_forecast, resolution, partial_month.
  std::string to_csv() const;
  std::string to_json() const;
};

/// The `count` calendar days following `last`.
std::vector<Date> following_days(Date last, std::size_t count);

/// Seasonal-naive projection of every non-calendar feature: a future date
/// takes the value observed on the same calendar date one year earlier,
/// stepping back further while that date is still in the future (Feb 29
/// falls back to Feb 28). Calendar features are computed from the date and,
/// when `scaler` is given, scaled with it. Requires >= 366 days of history.
TimeSeriesFrame project_exogenous(const TimeSeriesFrame& history, std::span<const Date> future_dates,
                                  const ScalerParams* scaler = nullptr);

/// Iterated one-step forecast over daily steps following the last observed
/// date. `scaled_history` must carry the model's input features in training
/// order, already min-max scaled with `scaler`. Only the first output of a
/// multi-step model is used per step.
ForecastResult recursive_forecast(const ModelGraph& model, const TimeSeriesFrame& scaled_history,
                                  const ScalerParams& scaler, std::size_t window,
                                  std::size_t horizon_steps, std::string_view target = "rrp");

/// Mean of the daily forecasts in each calendar month.
ForecastResult aggregate_monthly(const ForecastResult& daily);

}  // namespace epf
