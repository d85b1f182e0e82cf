#include "epf/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "epf/error.hpp"
#include "epf/ingest.hpp"

namespace epf {

std::string_view to_string(Resolution r) noexcept {
  return r == Resolution::Daily ? "daily" : "monthly";
}

std::string ForecastResult::to_csv() const {
  std::ostringstream os;
  os << "date,rrp_forecast,resolution,partial_month\n";
  char buf[64];
  for (std::size_t i = 0; i < dates.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", rrp_forecast[i]);
    const bool partial = i < partial_month.size() && partial_month[i];
    os << dates[i].iso() << ',' << buf << ',' << to_string(resolution) << ',' << (partial ? 1 : 0)
       << '\n';
  }
  return os.str();
}

std::string ForecastResult::to_json() const {
  nlohmann::ordered_json doc;
  doc["resolution"] = to_string(resolution);
  doc["horizon_steps"] = horizon_steps();
  auto points = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < dates.size(); ++i) {
    points.push_back({{"date", dates[i].iso()},
                      {"rrp_forecast", rrp_forecast[i]},
                      {"partial_month", i < partial_month.size() && partial_month[i]}});
  }
  doc["points"] = std::move(points);
  return doc.dump(1);
}

std::vector<Date> following_days(Date last, std::size_t count) {
  std::vector<Date> out;
  out.reserve(count);
  for (std::size_t i = 1; i <= count; ++i) out.push_back(last.plus_days(static_cast<long>(i)));
  return out;
}

TimeSeriesFrame project_exogenous(const TimeSeriesFrame& history, std::span<const Date> future_dates,
                                  const ScalerParams* scaler) {
  const auto& dates = history.dates();
  const Date first = dates.front();
  const Date last = dates.back();
  if (last.days_since(first) + 1 < 366) {
    throw Error(ErrorCode::HistoryTooShort, "seasonal projection needs at least 366 days of history");
  }
  if (future_dates.empty()) throw Error(ErrorCode::EmptyRange, "no future dates");

  const std::size_t f = history.n_features();
  std::vector<std::vector<double>> cols(f, std::vector<double>(future_dates.size()));
  for (std::size_t i = 0; i < future_dates.size(); ++i) {
    const Date d = future_dates[i];
    if (d <= last) {
      throw Error(ErrorCode::InvalidRecord, "future date " + d.iso() + " is not after " + last.iso());
    }
    Date source = d;
    while (source > last) source = source.one_year_earlier();
    // Latest observation on or before the source date.
    auto it = std::upper_bound(dates.begin(), dates.end(), source);
    if (it == dates.begin()) {
      throw Error(ErrorCode::HistoryTooShort, "no observation on or before " + source.iso());
    }
    const std::size_t row = static_cast<std::size_t>(std::distance(dates.begin(), it) - 1);
    for (std::size_t c = 0; c < f; ++c) cols[c][i] = history.at(row, c);

    const auto cal = calendar_features(d);
    for (std::size_t k = 0; k < feature::kCalendar.size(); ++k) {
      if (auto c = history.index_of(feature::kCalendar[k])) {
        double v = cal[k];
        if (scaler) v = scaler->scale(scaler->index_of(feature::kCalendar[k]), v);
        cols[*c][i] = v;
      }
    }
  }
  return TimeSeriesFrame(std::vector<Date>(future_dates.begin(), future_dates.end()),
                         history.feature_names(), std::move(cols));
}

ForecastResult recursive_forecast(const ModelGraph& model, const TimeSeriesFrame& scaled_history,
                                  const ScalerParams& scaler, std::size_t window,
                                  std::size_t horizon_steps, std::string_view target) {
  const std::size_t f = scaled_history.n_features();
  if (model.input_shape() != Shape{window, f}) {
    throw Error(ErrorCode::ShapeMismatch, "model input " + shape_str(model.input_shape()) +
                                              " does not match window " + std::to_string(window) +
                                              " x " + std::to_string(f) + " features");
  }
  if (scaled_history.rows() < window) {
    throw Error(ErrorCode::HistoryTooShort, std::to_string(scaled_history.rows()) +
                                                " rows < window " + std::to_string(window));
  }
  if (horizon_steps == 0) throw Error(ErrorCode::EmptyRange, "horizon_steps must be >= 1");
  const std::size_t target_col = scaled_history.require_index(target);
  const std::size_t target_scaler = scaler.index_of(target);

  const auto future = following_days(scaled_history.dates().back(), horizon_steps);
  const TimeSeriesFrame exogenous = project_exogenous(scaled_history, future, &scaler);

  ModelGraph inference = model;
  inference.set_mode(Mode::Inference);

  // Rolling window, row-major window x f.
  std::vector<double> buffer(window * f);
  const std::size_t offset = scaled_history.rows() - window;
  for (std::size_t t = 0; t < window; ++t) {
    for (std::size_t c = 0; c < f; ++c) buffer[t * f + c] = scaled_history.at(offset + t, c);
  }

  ForecastResult result;
  result.resolution = Resolution::Daily;
  result.dates = future;
  result.rrp_forecast.reserve(horizon_steps);
  result.partial_month.assign(horizon_steps, false);
  for (std::size_t step = 0; step < horizon_steps; ++step) {
    const Tensor y = model_predict(inference, Tensor({1, window, f}, buffer));
    const double next = y[0];
    if (!std::isfinite(next)) {
      throw Error(ErrorCode::NonFinitePrediction, "step " + std::to_string(step));
    }
    result.rrp_forecast.push_back(scaler.unscale(target_scaler, next));

    std::move(buffer.begin() + static_cast<std::ptrdiff_t>(f), buffer.end(), buffer.begin());
    double* row = buffer.data() + (window - 1) * f;
    for (std::size_t c = 0; c < f; ++c) row[c] = exogenous.at(step, c);
    row[target_col] = next;
  }
  return result;
}

ForecastResult aggregate_monthly(const ForecastResult& daily) {
  if (daily.dates.empty()) throw Error(ErrorCode::EmptyResult, "nothing to aggregate");
  if (daily.resolution != Resolution::Daily) {
    throw Error(ErrorCode::InvalidConfig, "aggregate_monthly expects a daily forecast");
  }
  ForecastResult out;
  out.resolution = Resolution::Monthly;
  std::size_t i = 0;
  while (i < daily.dates.size()) {
    const int year = daily.dates[i].year();
    const unsigned month = daily.dates[i].month();
    double sum = 0.0;
    std::size_t count = 0;
    for (; i < daily.dates.size() && daily.dates[i].year() == year && daily.dates[i].month() == month; ++i) {
      sum += daily.rrp_forecast[i];
      ++count;
    }
    out.dates.emplace_back(year, month, 1u);
    out.rrp_forecast.push_back(sum / static_cast<double>(count));
    out.partial_month.push_back(count < days_in_month(year, month));
  }
  return out;
}

}  // namespace epf
