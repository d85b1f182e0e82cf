#include <doctest.h>

#include <cmath>
#include <random>

#include "epf/error.hpp"
#include "epf/graph.hpp"
#include "epf/layers.hpp"
#include "epf/loss.hpp"
#include "epf/serialize.hpp"

using namespace epf;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

Shape batched(std::size_t b, const Shape& s) {
  Shape out{b};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace

TEST_CASE("tensor basics") {
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), Error);
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.reshaped({3, 2}).dim(0) == 3);
  CHECK_THROWS_AS(t.reshaped({4}), Error);
  t[1] = NAN;
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("conv1d forward") {
  LayerParams conv = conv1d_layer(1, 1, 3);
  conv.weights = Tensor({1, 1, 3}, std::vector<double>{1, 0, -1});
  const Tensor x({1, 4, 1}, std::vector<double>{1, 2, 3, 4});
  const Tensor y = conv1d_forward(x, conv);
  CHECK(y.shape() == Shape{1, 2, 1});
  CHECK(y[0] == -2.0);
  CHECK(y[1] == -2.0);

  LayerParams id = conv1d_layer(1, 1, 1);
  id.weights = Tensor({1, 1, 1}, 1.0);
  CHECK(conv1d_forward(x, id).values() == x.values());

  LayerParams zero = conv1d_layer(1, 1, 3);
  const Tensor z = conv1d_forward(x, zero);
  for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("conv1d output length formula over a grid") {
  for (std::size_t len = 1; len <= 12; ++len) {
    for (std::size_t k = 1; k <= len; ++k) {
      for (std::size_t stride = 1; stride <= 3; ++stride) {
        const auto layer = conv1d_layer(2, 3, k, stride);
        const Shape out = layer_output_shape(layer, {len, 2});
        CHECK(out == Shape{(len - k) / stride + 1, 3});
        CHECK(conv1d_forward(Tensor({1, len, 2}, 1.0), layer).dim(1) == out[0]);
      }
    }
  }
  CHECK_THROWS_AS(layer_output_shape(conv1d_layer(1, 1, 5), {4, 1}), Error);
}

TEST_CASE("maxpool1d") {
  auto [y, idx] = maxpool1d_forward(Tensor({1, 4, 1}, std::vector<double>{1, 3, 2, 5}), 2, 2);
  CHECK(y.values() == std::vector<double>{3, 5});
  auto [one, one_idx] = maxpool1d_forward(Tensor({1, 1, 1}, 7.0), 1, 1);
  CHECK(one[0] == 7.0);
  auto [tie, tie_idx] = maxpool1d_forward(Tensor({1, 2, 1}, 2.0), 2, 2);
  CHECK(tie[0] == 2.0);
  CHECK(tie_idx[0] == 0);
}

TEST_CASE("dense forward") {
  LayerParams d = dense_layer(2, 2);
  d.weights = Tensor({2, 2}, std::vector<double>{1, 2, 3, 4});
  const Tensor x({1, 2}, 1.0);
  CHECK(dense_forward(x, d).values() == std::vector<double>{3, 7});

  d.weights = Tensor({2, 2}, std::vector<double>{1, 0, 0, 1});
  const Tensor z({1, 2}, std::vector<double>{-3.5, 9});
  CHECK(dense_forward(z, d).values() == z.values());

  d.weights = Tensor({2, 2});
  d.biases = Tensor({2}, std::vector<double>{1, 2});
  CHECK(dense_forward(z, d).values() == std::vector<double>{1, 2});
}

TEST_CASE("relu") {
  CHECK(relu(Tensor({3}, std::vector<double>{-1, 0, 2})).values() == std::vector<double>{0, 0, 2});
  const Tensor pos({3}, std::vector<double>{0.5, 0, 4});
  CHECK(relu(pos) == pos);
  const Tensor neg = relu(Tensor({4}, -1.0));
  for (double v : neg.values()) CHECK(v == 0.0);
}

TEST_CASE("dropout") {
  const Tensor x({1, 2}, std::vector<double>{2, 4});
  CHECK(dropout(x, 0.0, Mode::Training, 9) == x);
  CHECK(dropout(x, 0.7, Mode::Inference, 9) == x);
  const std::vector<unsigned char> mask = {1, 0};
  CHECK(apply_dropout_mask(x, mask, 0.5).values() == std::vector<double>{4, 0});
  CHECK(dropout(x, 0.5, Mode::Training, 42) == dropout(x, 0.5, Mode::Training, 42));
  CHECK_THROWS_AS(dropout_layer(1.0).validate(), Error);
  CHECK_THROWS_AS(dropout_layer(-0.1).validate(), Error);
}

TEST_CASE("dropout preserves expectation") {
  const double rate = 0.3;
  const double input = 2.0;
  const std::size_t n = 10000;
  double sum = 0.0, sq = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double v = dropout(Tensor({1, 1}, input), rate, Mode::Training, 1000 + s)[0];
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  const double stderr_ = std::sqrt(var / n);
  CHECK(std::abs(mean - input) < 3.0 * stderr_);
}

TEST_CASE("lstm_step hand values") {
  LayerParams cell = lstm_layer(2, 1);
  const Tensor x({1, 2}, std::vector<double>{0.3, -1.2});
  auto s = lstm_step(x, Tensor({1, 1}), Tensor({1, 1}), cell);
  CHECK(s.h[0] == 0.0);
  CHECK(s.c[0] == 0.0);

  s = lstm_step(x, Tensor({1, 1}), Tensor({1, 1}, 1.0), cell);
  CHECK(s.c[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.h[0] == doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-15));
  CHECK(s.h[0] == doctest::Approx(0.231058).epsilon(1e-6));

  LayerParams wide = lstm_layer(3, 5);
  const auto b = lstm_step(Tensor({4, 3}, 0.1), Tensor({4, 5}), Tensor({4, 5}), wide);
  CHECK(b.h.shape() == Shape{4, 5});
  CHECK(b.c.shape() == Shape{4, 5});
}

TEST_CASE("activations stay finite on large finite inputs") {
  ModelGraph g({6, 2}, {lstm_layer(2, 3)}, 4);
  g.initialize(4);
  const Tensor x = random_tensor({2, 6, 2}, 8, 1e6);
  CHECK(model_predict(g, x).all_finite());
  CHECK(relu(x).all_finite());
  CHECK(maxpool1d_forward(x, 2, 2).first.all_finite());
}

TEST_CASE("model_forward contract") {
  ModelGraph empty({3, 2}, {}, 1);
  const Tensor x = random_tensor({4, 3, 2}, 1);
  CHECK(model_predict(empty, x) == x);

  ModelGraph g({5, 2}, {conv1d_layer(2, 3, 2), relu_layer(), dropout_layer(0.5), flatten_layer(), dense_layer(12, 1)}, 3);
  g.initialize(3);
  g.set_mode(Mode::Training);
  const Tensor b = random_tensor({3, 5, 2}, 2);
  CHECK(model_predict(g, b, 17) == model_predict(g, b, 17));
  CHECK_FALSE(model_predict(g, b, 17) == model_predict(g, b, 18));

  CHECK_THROWS_AS(model_predict(g, random_tensor({3, 4, 2}, 2)), Error);
  CHECK_THROWS_AS(ModelGraph({5, 2}, {dense_layer(3, 1)}, 1), Error);
}

TEST_CASE("non-finite activations are a hard error") {
  ModelGraph g({2}, {dense_layer(2, 1)}, 1);
  g.initialize(1);
  Tensor x({1, 2}, 1.0);
  x[0] = INFINITY;
  try {
    model_predict(g, x);
    FAIL("expected NonFiniteActivation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteActivation);
  }
}

TEST_CASE("model_backward") {
  ModelGraph g({4, 3}, {flatten_layer(), dense_layer(12, 5), relu_layer(), dense_layer(5, 2)}, 7);
  g.initialize(7);
  const Tensor x = random_tensor({3, 4, 3}, 3);
  auto [y, cache] = model_forward(g, x);

  const Gradients zero = model_backward(g, cache, Tensor(y.shape()));
  for (const auto& p : zero.params) {
    for (double v : p.values()) CHECK(v == 0.0);
  }

  const Gradients a = model_backward(g, cache, Tensor(y.shape(), 1.0));
  const Gradients b = model_backward(g, cache, Tensor(y.shape(), 1.0));
  for (std::size_t i = 0; i < a.params.size(); ++i) CHECK(a.params[i] == b.params[i]);

  SUBCASE("stale cache after a parameter update") {
    g.set_parameters(g.parameter_values());
    CHECK_THROWS_AS(model_backward(g, cache, Tensor(y.shape(), 1.0)), Error);
  }
  SUBCASE("cache from another instance") {
    ModelGraph other = g;
    CHECK_THROWS_AS(model_backward(other, cache, Tensor(y.shape(), 1.0)), Error);
  }
}

TEST_CASE("single dense layer gradient equals the closed form 2(yhat - y) x^T / n") {
  ModelGraph g({3}, {dense_layer(3, 1)}, 2);
  g.initialize(2);
  const Tensor x = random_tensor({5, 3}, 9);
  const Tensor t = random_tensor({5, 1}, 10);
  auto [y, cache] = model_forward(g, x);
  const auto loss = mse_loss(y, t);
  const Gradients grads = model_backward(g, cache, loss.gradient);

  for (std::size_t j = 0; j < 3; ++j) {
    double expected = 0.0;
    for (std::size_t s = 0; s < 5; ++s) expected += 2.0 * (y[s] - t[s]) * x[s * 3 + j] / 5.0;
    CHECK(grads.params[0][j] == doctest::Approx(expected).epsilon(1e-12));
  }
  double bias = 0.0;
  for (std::size_t s = 0; s < 5; ++s) bias += 2.0 * (y[s] - t[s]) / 5.0;
  CHECK(grads.params[1][0] == doctest::Approx(bias).epsilon(1e-12));

  CHECK(gradient_check(g, x, t, 1e-5) < 1e-8);
}

TEST_CASE("every layer kind passes the gradient check") {
  struct Case {
    const char* name;
    Shape in;
    std::vector<LayerParams> layers;
  };
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const std::vector<Case> cases = {
        {"conv1d", {8, 3}, {conv1d_layer(3, 4, 3), flatten_layer()}},
        {"conv1d stride 2", {9, 2}, {conv1d_layer(2, 3, 3, 2), flatten_layer()}},
        {"maxpool1d", {8, 3}, {maxpool1d_layer(2), flatten_layer()}},
        {"dense", {5}, {dense_layer(5, 4)}},
        {"relu", {6}, {relu_layer()}},
        {"dropout", {6}, {dropout_layer(0.4)}},
        {"lstm", {8, 3}, {lstm_layer(3, 4)}},
        {"rnn", {8, 3}, {rnn_layer(3, 4)}},
        {"flatten", {4, 3}, {flatten_layer()}},
    };
    for (const auto& c : cases) {
      CAPTURE(c.name);
      CAPTURE(seed);
      ModelGraph g(c.in, c.layers, seed);
      g.initialize(seed);
      g.set_mode(Mode::Training);
      const Tensor x = random_tensor(batched(2, c.in), seed * 31);
      const Tensor y = random_tensor(batched(2, g.output_shape()), seed * 37);
      CHECK(gradient_check(g, x, y, 1e-5, seed) < 1e-4);
    }
  }
}

TEST_CASE("gradient_check validates epsilon") {
  ModelGraph g({2}, {dense_layer(2, 1)}, 1);
  g.initialize(1);
  const Tensor x({1, 2}, 1.0);
  const Tensor t({1, 1}, 0.0);
  CHECK_THROWS_AS(gradient_check(g, x, t, 1e-2), Error);
}

TEST_CASE("mse loss") {
  const auto r = mse_loss(Tensor({3}, 2.0), Tensor({3}, std::vector<double>{1, 2, 3}));
  CHECK(r.loss == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.gradient[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.gradient[1] == 0.0);
  CHECK(r.gradient[2] == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));

  const Tensor same({2}, std::vector<double>{4, -1});
  const auto z = mse_loss(same, same);
  CHECK(z.loss == 0.0);
  for (double v : z.gradient.values()) CHECK(v == 0.0);

  const auto one = mse_loss(Tensor({1}, 3.0), Tensor({1}, 0.0));
  CHECK(one.loss == 9.0);
  CHECK(one.gradient[0] == 6.0);
  CHECK_THROWS_AS(mse_loss(Tensor({2}), Tensor({3})), Error);
}

TEST_CASE("base64 and model serialization roundtrip") {
  const std::vector<std::uint8_t> bytes = {0, 1, 2, 250, 251, 255, 10};
  for (std::size_t n = 0; n <= bytes.size(); ++n) {
    const std::vector<std::uint8_t> prefix(bytes.begin(), bytes.begin() + static_cast<long>(n));
    CHECK(base64_decode(base64_encode(prefix)) == prefix);
  }
  CHECK(base64_encode(std::vector<std::uint8_t>{'M', 'a', 'n'}) == "TWFu");

  ModelGraph g({8, 3}, {conv1d_layer(3, 4, 3), relu_layer(), maxpool1d_layer(2), lstm_layer(4, 5),
                        dropout_layer(0.2), dense_layer(5, 1)},
               99);
  g.initialize(99);
  const ModelGraph back = model_from_json(model_to_json(g));
  CHECK(back.input_shape() == g.input_shape());
  CHECK(back.rng_seed() == g.rng_seed());
  const auto pa = g.parameter_values();
  const auto pb = back.parameter_values();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
  const Tensor x = random_tensor({2, 8, 3}, 5);
  CHECK(model_predict(g, x) == model_predict(back, x));

  CHECK_THROWS_AS(model_from_json("{}"), Error);
  CHECK_THROWS_AS(model_from_json(R"({"format":"something-else/9"})"), Error);
}
