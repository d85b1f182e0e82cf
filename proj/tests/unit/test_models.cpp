#include <doctest.h>

#include <random>

#include "epf/error.hpp"
#include "epf/models.hpp"

using namespace epf;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

std::size_t lstm_params(std::size_t in, std::size_t h) { return 4 * h * (in + h) + 4 * h; }
std::size_t dense_params(std::size_t in, std::size_t out) { return in * out + out; }

}  // namespace

TEST_CASE("hybrid temporal lengths") {
  HybridConfig cfg;
  cfg.window = 30;
  cfg.n_features = 12;
  CHECK(hybrid_temporal_lengths(cfg) == std::vector<std::size_t>{28, 14, 12, 6});

  const ModelGraph g = build_hybrid(cfg, 1);
  // conv, relu, pool, conv, relu, pool, lstm ...
  const auto& lstm = g.layers().at(6);
  REQUIRE(lstm.kind == LayerKind::Lstm);
  CHECK(lstm.hyper.in == 32);
  CHECK(model_predict(g, random_tensor({8, 30, 12}, 1)).shape() == Shape{8, 1});

  HybridConfig small;
  small.window = 8;
  small.n_features = 3;
  small.conv_blocks = {{4, 3, 2}, {4, 3, 2}, {4, 3, 2}};
  try {
    hybrid_temporal_lengths(small);
    FAIL("expected ShapeUnderflow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeUnderflow);
  }
  CHECK_THROWS_AS(build_hybrid(small), Error);
}

TEST_CASE("parameter counts match closed forms") {
  HybridConfig cfg;
  cfg.window = 30;
  cfg.n_features = 11;
  std::size_t expected = (16 * 11 * 3 + 16) + (32 * 16 * 3 + 32) + lstm_params(32, 64) + dense_params(64, 32) +
                         dense_params(32, 1);
  CHECK(build_hybrid(cfg).parameter_count() == expected);

  CHECK(build_rnn(30, 11, 64, 1).parameter_count() == (64 * (11 + 64) + 64) + dense_params(64, 1));
  CHECK(build_ann(30, 11, {64, 16}, 2).parameter_count() ==
        dense_params(330, 64) + dense_params(64, 16) + dense_params(16, 2));
}

TEST_CASE("ann first dense layer is hidden x (window * features)") {
  const ModelGraph g = build_ann(30, 12, {64});
  const auto& first = g.layers().at(1);
  REQUIRE(first.kind == LayerKind::Dense);
  CHECK(first.weights.shape() == Shape{64, 360});
  CHECK(model_predict(g, random_tensor({5, 30, 12}, 2)).shape() == Shape{5, 1});
}

TEST_CASE("zero weights collapse each architecture to its final bias") {
  auto zero_out = [](ModelGraph g) {
    auto params = g.parameter_values();
    for (auto& p : params) p.fill(0.0);
    params.back().fill(0.75);
    g.set_parameters(params);
    return g;
  };
  const Tensor x = random_tensor({3, 8, 3}, 4);
  for (const ModelGraph& g : {zero_out(build_rnn(8, 3, 4, 1)), zero_out(build_ann(8, 3, {5}, 1))}) {
    const Tensor y = model_predict(g, x);
    for (double v : y.values()) CHECK(v == 0.75);
  }
}

TEST_CASE("output is batch x horizon") {
  const Tensor x = random_tensor({4, 10, 3}, 6);
  HybridConfig cfg;
  cfg.window = 10;
  cfg.n_features = 3;
  cfg.conv_blocks = {{4, 3, 2}};
  cfg.dense_head = {6, 3};
  CHECK(model_predict(build_hybrid(cfg), x).shape() == Shape{4, 3});
  CHECK(model_predict(build_rnn(10, 3, 4, 3), x).shape() == Shape{4, 3});
  CHECK(model_predict(build_ann(10, 3, {4}, 3), x).shape() == Shape{4, 3});
}

TEST_CASE("full architectures pass the gradient check at tiny dims") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    HybridConfig cfg;
    cfg.window = 8;
    cfg.n_features = 3;
    cfg.conv_blocks = {{4, 3, 2}};
    cfg.lstm_hidden = 4;
    cfg.dense_head = {4, 1};
    cfg.dropout_rate = 0.2;
    const Tensor x = random_tensor({2, 8, 3}, seed + 100);
    const Tensor y = random_tensor({2, 1}, seed + 200);

    ModelGraph hybrid = build_hybrid(cfg, seed);
    hybrid.set_mode(Mode::Training);
    CHECK(gradient_check(hybrid, x, y, 1e-5, seed) < 1e-4);
    CHECK(gradient_check(build_rnn(8, 3, 4, 1, seed), x, y) < 1e-4);
    CHECK(gradient_check(build_ann(8, 3, {4}, 1, seed), x, y) < 1e-4);
  }
}

TEST_CASE("hybrid without conv blocks is a plain LSTM model") {
  HybridConfig cfg;
  cfg.window = 8;
  cfg.n_features = 3;
  cfg.conv_blocks = {};
  cfg.lstm_hidden = 4;
  cfg.dense_head = {1};
  const ModelGraph g = build_hybrid(cfg, 2);
  CHECK(g.layers().front().kind == LayerKind::Lstm);
  CHECK(gradient_check(g, random_tensor({2, 8, 3}, 1), random_tensor({2, 1}, 2)) < 1e-4);
}

TEST_CASE("build_model dispatches on kind") {
  ModelSpec spec;
  spec.kind = ModelKind::Ann;
  spec.ann_hidden = {7};
  const ModelGraph g = build_model(spec, 6, 2, 1, 3);
  CHECK(g.parameter_count() == dense_params(12, 7) + dense_params(7, 1));
  CHECK(model_kind_from_string("rnn") == ModelKind::Rnn);
  CHECK_FALSE(model_kind_from_string("gru").has_value());
}

TEST_CASE("same seed gives identical initial parameters") {
  const auto a = build_rnn(8, 3, 4, 1, 11).parameter_values();
  const auto b = build_rnn(8, 3, 4, 1, 11).parameter_values();
  const auto c = build_rnn(8, 3, 4, 1, 12).parameter_values();
  CHECK(a[0] == b[0]);
  CHECK_FALSE(a[0] == c[0]);
}
