#include <doctest.h>

#include <cmath>
#include <random>

#include "epf/error.hpp"
#include "epf/forecast.hpp"
#include "epf/ingest.hpp"
#include "epf/models.hpp"

using namespace epf;

namespace {

// Three years of daily history ending 2020-12-31 with a leap day in 2020.
TimeSeriesFrame history(std::size_t days = 1096) {
  const Date last(2020, 12, 31);
  std::vector<Date> dates;
  std::vector<double> demand, rrp;
  for (std::size_t i = 0; i < days; ++i) {
    const Date d = last.plus_days(-static_cast<long>(days - 1 - i));
    dates.push_back(d);
    demand.push_back(d.year() * 10000.0 + d.month() * 100.0 + d.day());  // encodes the date
    rrp.push_back(40.0 + 10.0 * std::sin(static_cast<double>(i) / 9.0));
  }
  return add_seasonal_features(TimeSeriesFrame(dates, {"demand", "rrp"}, {demand, rrp}));
}

// Returns the rrp value of the window's last row: an exact persistence model.
ModelGraph persistence_stub(std::size_t window, std::size_t n_features, std::size_t rrp_col) {
  LayerParams dense = dense_layer(window * n_features, 1);
  dense.weights[(window - 1) * n_features + rrp_col] = 1.0;
  return ModelGraph({window, n_features}, {flatten_layer(), std::move(dense)}, 0);
}

ForecastResult daily(std::vector<double> values, Date first) {
  ForecastResult r;
  for (std::size_t i = 0; i < values.size(); ++i) r.dates.push_back(first.plus_days(static_cast<long>(i)));
  r.rrp_forecast = std::move(values);
  r.partial_month.assign(r.dates.size(), false);
  return r;
}

}  // namespace

TEST_CASE("exogenous projection looks back one year") {
  const auto h = history();
  const std::vector<Date> future = {Date(2021, 3, 5)};
  const auto p = project_exogenous(h, future);
  CHECK(p.column("demand")[0] == 20200305.0);

  const std::vector<Date> leap = {Date(2024, 2, 29)};
  CHECK(project_exogenous(h, leap).column("demand")[0] == 20200228.0);

  // Three years out lands on the same calendar date in the last observed year.
  const std::vector<Date> far = {Date(2023, 7, 14)};
  Date d = far[0];
  while (d > h.dates().back()) d = Date(d.year() - 1, d.month(), d.day());
  CHECK(project_exogenous(h, far).column("demand")[0] == d.year() * 10000.0 + d.month() * 100.0 + d.day());

  const auto cal = calendar_features(Date(2023, 7, 14));
  CHECK(project_exogenous(h, far).column("month_cos")[0] == cal[1]);
  CHECK(project_exogenous(h, far).column("weekend")[0] == cal[2]);
}

TEST_CASE("exogenous projection preconditions") {
  const std::vector<Date> future = {Date(2021, 1, 1)};
  try {
    project_exogenous(history(365), future);
    FAIL("expected HistoryTooShort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HistoryTooShort);
  }
  const std::vector<Date> past = {Date(2020, 6, 1)};
  CHECK_THROWS_AS(project_exogenous(history(), past), Error);
}

TEST_CASE("recursive forecast with a persistence stub is exactly constant") {
  const auto h = history();
  const auto scaler = fit_minmax(h);
  const auto scaled = apply_minmax(h, scaler);
  const std::size_t window = 14;
  const auto model = persistence_stub(window, h.n_features(), h.require_index("rrp"));

  const auto r = recursive_forecast(model, scaled, scaler, window, 5);
  CHECK(r.horizon_steps() == 5);
  CHECK(r.dates == following_days(Date(2020, 12, 31), 5));

  const double last_scaled = scaled.column("rrp")[h.rows() - 1];
  const double expected = scaler.unscale(scaler.index_of("rrp"), last_scaled);
  for (double v : r.rrp_forecast) CHECK(v == expected);
  CHECK(std::abs(expected - h.column("rrp")[h.rows() - 1]) < 1e-9);
}

TEST_CASE("recursive forecast matches an independent rolling loop") {
  const auto h = history();
  const auto scaler = fit_minmax(h);
  const auto scaled = apply_minmax(h, scaler);
  const std::size_t window = 6, f = h.n_features(), steps = 40;
  ModelGraph model = build_rnn(window, f, 4, 1, 3);

  const auto future = following_days(h.dates().back(), steps);
  const auto exo = project_exogenous(scaled, future, &scaler);
  const std::size_t rrp = h.require_index("rrp");
  std::vector<std::vector<double>> rows;
  for (std::size_t t = h.rows() - window; t < h.rows(); ++t) {
    std::vector<double> row(f);
    for (std::size_t c = 0; c < f; ++c) row[c] = scaled.at(t, c);
    rows.push_back(row);
  }
  std::vector<double> expected;
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<double> flat;
    for (std::size_t t = rows.size() - window; t < rows.size(); ++t) flat.insert(flat.end(), rows[t].begin(), rows[t].end());
    const double y = model_predict(model, Tensor({1, window, f}, flat))[0];
    expected.push_back(scaler.unscale(rrp, y));
    std::vector<double> next(f);
    for (std::size_t c = 0; c < f; ++c) next[c] = exo.at(s, c);
    next[rrp] = y;
    rows.push_back(next);
  }
  const auto r = recursive_forecast(model, scaled, scaler, window, steps);
  CHECK(r.rrp_forecast == expected);
}

TEST_CASE("forecast prefix property") {
  const auto h = history();
  const auto scaler = fit_minmax(h);
  const auto scaled = apply_minmax(h, scaler);
  const ModelGraph model = build_ann(10, h.n_features(), {6}, 1, 5);
  const auto full = recursive_forecast(model, scaled, scaler, 10, 150);
  for (std::size_t k : {1u, 10u, 100u}) {
    const auto part = recursive_forecast(model, scaled, scaler, 10, k);
    CHECK(std::equal(part.rrp_forecast.begin(), part.rrp_forecast.end(), full.rrp_forecast.begin()));
  }
}

TEST_CASE("forecast dates never overlap observed dates") {
  std::mt19937_64 rng(8);
  const auto h = history();
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t cut = 400 + rng() % 600;
    const auto part = h.slice_rows(0, cut);
    const auto scaler = fit_minmax(part);
    const auto scaled = apply_minmax(part, scaler);
    const auto model = persistence_stub(7, part.n_features(), part.require_index("rrp"));
    const auto r = recursive_forecast(model, scaled, scaler, 7, 20);
    CHECK(r.dates.front() > part.dates().back());
    for (std::size_t i = 1; i < r.dates.size(); ++i) CHECK(r.dates[i].days_since(r.dates[i - 1]) == 1);
  }
}

TEST_CASE("recursive forecast rejects bad inputs") {
  const auto h = history();
  const auto scaler = fit_minmax(h);
  const auto scaled = apply_minmax(h, scaler);
  const auto model = persistence_stub(7, h.n_features(), h.require_index("rrp"));
  CHECK_THROWS_AS(recursive_forecast(model, scaled, scaler, 8, 3), Error);
  CHECK_THROWS_AS(recursive_forecast(model, scaled.slice_rows(0, 5), scaler, 7, 3), Error);

  LayerParams dense = dense_layer(7 * h.n_features(), 1);
  dense.biases[0] = 1e308;
  dense.weights.fill(1e308);
  const ModelGraph blowup({7, h.n_features()}, {flatten_layer(), dense}, 0);
  try {
    recursive_forecast(blowup, scaled, scaler, 7, 3);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::NonFinitePrediction || e.code() == ErrorCode::NonFiniteActivation));
  }
}

TEST_CASE("monthly aggregation") {
  const auto flat = aggregate_monthly(daily(std::vector<double>(90, 2.0), Date(2021, 1, 1)));
  REQUIRE(flat.horizon_steps() == 3);
  for (double v : flat.rrp_forecast) CHECK(v == 2.0);
  CHECK(flat.dates == std::vector<Date>{Date(2021, 1, 1), Date(2021, 2, 1), Date(2021, 3, 1)});
  CHECK(flat.resolution == Resolution::Monthly);
  for (bool p : flat.partial_month) CHECK_FALSE(p);

  std::vector<double> jan;
  for (int i = 1; i <= 31; ++i) jan.push_back(i);
  CHECK(aggregate_monthly(daily(jan, Date(2021, 1, 1))).rrp_forecast[0] == 16.0);

  const auto tail = aggregate_monthly(daily(std::vector<double>(40, 1.0), Date(2021, 1, 1)));
  REQUIRE(tail.horizon_steps() == 2);
  CHECK(tail.partial_month[1]);

  CHECK_THROWS_AS(aggregate_monthly(ForecastResult{}), Error);
}

TEST_CASE("six calendar years of days aggregate to 72 months") {
  const Date first(2021, 1, 1);
  const std::size_t days = static_cast<std::size_t>(Date(2027, 1, 1).days_since(first));
  CHECK(days == 2191);
  std::mt19937_64 rng(1);
  std::vector<double> values(days);
  for (auto& v : values) v = static_cast<double>(rng() % 1000) / 7.0;
  const auto m = aggregate_monthly(daily(values, first));
  CHECK(m.horizon_steps() == 72);

  // Day-weighted monthly means recover the global mean.
  double global = 0.0;
  for (double v : values) global += v;
  global /= static_cast<double>(days);
  double weighted = 0.0;
  for (std::size_t i = 0; i < m.dates.size(); ++i) {
    weighted += m.rrp_forecast[i] * days_in_month(m.dates[i].year(), m.dates[i].month());
  }
  CHECK(std::abs(weighted / static_cast<double>(days) - global) < 1e-9);
}

TEST_CASE("forecast csv layout") {
  auto r = daily({1.5, 2.25}, Date(2021, 1, 30));
  const std::string csv = r.to_csv();
  CHECK(csv == "date,rrp_forecast,resolution,partial_month\n2021-01-30,1.500000,daily,0\n2021-01-31,2.250000,daily,0\n");
  CHECK(aggregate_monthly(r).to_csv().find("2021-01-01,1.875000,monthly,1") != std::string::npos);
}
