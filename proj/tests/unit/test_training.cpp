#include <doctest.h>

#include <cmath>
#include <random>

#include "epf/error.hpp"
#include "epf/ingest.hpp"
#include "epf/models.hpp"
#include "epf/training.hpp"

using namespace epf;

namespace {

// y = 0.5 a - 0.25 b + 0.1 over a window of one row.
WindowedDataset linear_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  WindowedDataset d;
  d.window = 1;
  d.horizon = 1;
  d.target_feature = "rrp";
  d.feature_names = {"a", "rrp"};
  d.inputs = Tensor({n, 1, 2});
  d.targets = Tensor({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    const double a = u(rng), b = u(rng);
    d.inputs[2 * i] = a;
    d.inputs[2 * i + 1] = b;
    d.targets[i] = 0.5 * a - 0.25 * b + 0.1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    d.target_dates.push_back(Date(2020, 1, 1).plus_days(static_cast<long>(i)));
    d.input_start_dates.push_back(d.target_dates.back());
  }
  return d;
}

ModelGraph linear_model(std::uint64_t seed) {
  ModelGraph g({1, 2}, {flatten_layer(), dense_layer(2, 1)}, seed);
  g.initialize(seed);
  return g;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.validation_fraction = 0.6;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("adam single step") {
  const std::vector<Tensor> p = {Tensor({1}, 0.0)};
  const std::vector<Tensor> g = {Tensor({1}, 1.0)};
  const auto r = adam_update(p, g, {}, AdamConfig{});
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  CHECK(-r.params[0][0] == doctest::Approx(1e-3 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(r.state.step == 1);

  const auto again = adam_update(p, g, {}, AdamConfig{});
  CHECK(again.params[0] == r.params[0]);
  CHECK(again.state.m[0] == r.state.m[0]);

  const auto still = adam_update(p, std::vector<Tensor>{Tensor({1}, 0.0)}, {}, AdamConfig{});
  CHECK(still.params[0] == p[0]);
  CHECK_THROWS_AS(adam_update(p, std::vector<Tensor>{Tensor({2}, 0.0)}, {}, AdamConfig{}), Error);
}

TEST_CASE("adam matches a scalar reference over several steps") {
  const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  double x = 1.5, m = 0.0, v = 0.0;
  std::vector<Tensor> p = {Tensor({1}, x)};
  AdamState state;
  for (int t = 1; t <= 20; ++t) {
    const double grad = 2.0 * x - 1.0;
    m = 0.9 * m + 0.1 * grad;
    v = 0.999 * v + 0.001 * grad * grad;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    x -= 0.01 * mh / (std::sqrt(vh) + 1e-8);

    auto r = adam_update(p, std::vector<Tensor>{Tensor({1}, 2.0 * p[0][0] - 1.0)}, state, cfg);
    p = r.params;
    state = r.state;
    CHECK(p[0][0] == doctest::Approx(x).epsilon(1e-14));
  }
}

TEST_CASE("early stopping on a constructed loss sequence") {
  EarlyStopping es(5);
  const std::vector<double> losses = {1.0, 0.8, 0.6, 0.5, 0.55, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1};
  std::size_t stopped_at = losses.size();
  for (std::size_t e = 0; e < losses.size(); ++e) {
    es.update(e, losses[e]);
    if (es.should_stop()) {
      stopped_at = e;
      break;
    }
  }
  CHECK(stopped_at <= 8);
  CHECK(es.best_epoch() <= 3);
  CHECK(es.best_loss() == 0.5);

  EarlyStopping never(0);
  for (std::size_t e = 0; e < 50; ++e) never.update(e, static_cast<double>(e));
  CHECK_FALSE(never.should_stop());
}

TEST_CASE("a single dense model learns a linear target") {
  const auto data = linear_dataset(256, 3);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 0.01;
  cfg.early_stop_patience = 0;
  cfg.validation_fraction = 0.0;
  const double initial = dataset_loss(linear_model(5), data);
  const auto result = train_model(linear_model(5), data, cfg);
  CHECK(result.history.epochs_run() == 200);
  CHECK(result.history.train_loss.back() < 0.01 * initial);

  // Closed form is w = (0.5, -0.25), b = 0.1.
  const auto params = result.model.parameter_values();
  CHECK(params[0][0] == doctest::Approx(0.5).epsilon(1e-2));
  CHECK(params[0][1] == doctest::Approx(-0.25).epsilon(1e-2));
  CHECK(params[1][0] == doctest::Approx(0.1).epsilon(1e-2));
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto data = linear_dataset(100, 8);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 16;
  ModelGraph g = build_rnn(1, 2, 3, 1, 4);
  const auto a = train_model(g, data, cfg);
  const auto b = train_model(g, data, cfg);
  CHECK(a.history.train_loss == b.history.train_loss);
  CHECK(a.history.validation_loss == b.history.validation_loss);
  CHECK(a.history.best_epoch == b.history.best_epoch);
  CHECK(a.model.parameter_values()[0] == b.model.parameter_values()[0]);

  cfg.seed = 99;
  const auto c = train_model(g, data, cfg);
  CHECK_FALSE(a.history.train_loss == c.history.train_loss);
}

TEST_CASE("history and best epoch bookkeeping") {
  const auto data = linear_dataset(120, 2);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.early_stop_patience = 3;
  cfg.learning_rate = 0.05;
  const auto r = train_model(linear_model(1), data, cfg);
  CHECK(r.history.epochs_run() <= cfg.epochs);
  const auto& v = r.history.validation_loss;
  CHECK(v[r.history.best_epoch] == *std::min_element(v.begin(), v.end()));
  // The returned model carries the best epoch's parameters.
  const auto val = data.slice(data.size() - 12, data.size());
  CHECK(dataset_loss(r.model, val) == doctest::Approx(v[r.history.best_epoch]).epsilon(1e-12));
}

TEST_CASE("divergence aborts training") {
  const auto data = linear_dataset(64, 1);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.optimizer = OptimizerKind::Sgd;
  cfg.learning_rate = 1e6;
  cfg.early_stop_patience = 0;
  try {
    train_model(linear_model(1), data, cfg);
    FAIL("expected DivergedLoss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DivergedLoss);
  }
}

TEST_CASE("evaluation on inverse-scaled values") {
  const auto frame = synth_series(400, 3).select(std::vector<std::string>{"demand", "rrp"});
  const auto scaler = fit_minmax(frame);
  const auto windows = make_windows(apply_minmax(frame, scaler), 5);
  const std::vector<double> train_rrp(frame.column("rrp").begin(), frame.column("rrp").end());
  const SpikeRule rule = resolve_spike_threshold(train_rrp, SpikeRule{});

  SUBCASE("perfect predictions") {
    const auto report = evaluate_predictions(windows.targets, windows, scaler, rule);
    CHECK(report.rmse == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(report.mae == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(report.classification.accuracy == 1.0);
    CHECK(report.confusion.total() == windows.size());
  }
  SUBCASE("constant mean predictor has RMSE equal to the target std") {
    const auto actual = invert_minmax(windows.targets.data(), scaler, "rrp");
    double mean = 0.0;
    for (double a : actual) mean += a;
    mean /= static_cast<double>(actual.size());
    double var = 0.0;
    for (double a : actual) var += (a - mean) * (a - mean);
    const double sigma = std::sqrt(var / static_cast<double>(actual.size()));

    Tensor pred(windows.targets.shape(), scaler.scale(scaler.index_of("rrp"), mean));
    const auto report = evaluate_predictions(pred, windows, scaler, rule);
    CHECK(std::abs(report.rmse - sigma) / sigma < 0.02);
    CHECK(std::isfinite(report.mae));
    CHECK(report.confusion.total() == windows.size());
  }
  SUBCASE("persistence predictions repeat the previous target") {
    const Tensor p = persistence_predictions(windows);
    for (std::size_t s = 1; s < windows.size(); ++s) CHECK(p[s] == windows.targets[s - 1]);
  }
  SUBCASE("unresolved threshold is rejected") {
    CHECK_THROWS_AS(evaluate_predictions(windows.targets, windows, scaler, SpikeRule{}), Error);
  }
}
