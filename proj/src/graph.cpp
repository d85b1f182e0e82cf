#include "epf/graph.hpp"

#include <atomic>
#include <cmath>
#include <random>

#include "epf/error.hpp"
#include "epf/loss.hpp"

namespace epf {

namespace {

std::uint64_t next_instance_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_batch(const ModelGraph& model, const Tensor& batch) {
  const auto& in = model.input_shape();
  bool ok = batch.rank() == in.size() + 1;
  for (std::size_t i = 0; ok && i < in.size(); ++i) ok = batch.dim(i + 1) == in[i];
  if (!ok) {
    throw Error(ErrorCode::ShapeMismatch, "batch " + shape_str(batch.shape()) +
                                              " does not match model input " + shape_str(in));
  }
}

void check_finite(const Tensor& t, std::size_t layer_index, const LayerParams& layer) {
  if (!t.all_finite()) {
    throw Error(ErrorCode::NonFiniteActivation, "layer " + std::to_string(layer_index) + " (" +
                                                    std::string(to_string(layer.kind)) + ")");
  }
}

}  // namespace

ModelGraph::ModelGraph(Shape input_shape, std::vector<LayerParams> layers, std::uint64_t rng_seed)
    : input_shape_(std::move(input_shape)),
      layers_(std::move(layers)),
      rng_seed_(rng_seed),
      instance_id_(next_instance_id()) {
  Shape shape = input_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].validate();
    try {
      shape = layer_output_shape(layers_[i], shape);
    } catch (const Error& e) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(i) + ": " + e.what());
    }
  }
}

ModelGraph::ModelGraph(const ModelGraph& other)
    : input_shape_(other.input_shape_),
      layers_(other.layers_),
      rng_seed_(other.rng_seed_),
      mode_(other.mode_),
      instance_id_(next_instance_id()),
      version_(0) {}

ModelGraph& ModelGraph::operator=(const ModelGraph& other) {
  if (this != &other) {
    input_shape_ = other.input_shape_;
    layers_ = other.layers_;
    rng_seed_ = other.rng_seed_;
    mode_ = other.mode_;
    instance_id_ = next_instance_id();
    version_ = 0;
  }
  return *this;
}

Shape ModelGraph::output_shape() const {
  Shape shape = input_shape_;
  for (const auto& l : layers_) shape = layer_output_shape(l, shape);
  return shape;
}

std::vector<const Tensor*> ModelGraph::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers_) {
    if (!l.has_params()) continue;
    out.push_back(&l.weights);
    out.push_back(&l.biases);
  }
  return out;
}

std::vector<Tensor*> ModelGraph::mutable_parameters() {
  ++version_;
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    if (!l.has_params()) continue;
    out.push_back(&l.weights);
    out.push_back(&l.biases);
  }
  return out;
}

std::vector<Tensor> ModelGraph::parameter_values() const {
  std::vector<Tensor> out;
  for (const Tensor* p : parameters()) out.push_back(*p);
  return out;
}

void ModelGraph::set_parameters(std::span<const Tensor> values) {
  auto params = mutable_parameters();
  if (values.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(params.size()) +
                                              " parameter tensors, got " +
                                              std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].shape() != params[i]->shape()) {
      throw Error(ErrorCode::ShapeMismatch, "parameter " + std::to_string(i) + " shape " +
                                                shape_str(values[i].shape()) + " vs " +
                                                shape_str(params[i]->shape()));
    }
    *params[i] = values[i];
  }
}

std::size_t ModelGraph::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* p : parameters()) n += p->size();
  return n;
}

void ModelGraph::initialize(std::uint64_t seed) {
  ++version_;
  std::mt19937_64 rng(seed);
  auto uniform = [&](double limit) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return (2.0 * u - 1.0) * limit;
  };
  auto glorot = [&](Tensor& t, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : t.data()) v = uniform(limit);
  };
  for (auto& l : layers_) {
    if (!l.has_params()) continue;
    const auto& h = l.hyper;
    l.biases.fill(0.0);
    switch (l.kind) {
      case LayerKind::Conv1d:
        glorot(l.weights, static_cast<double>(h.in * h.kernel), static_cast<double>(h.out * h.kernel));
        break;
      case LayerKind::Dense:
        glorot(l.weights, static_cast<double>(h.in), static_cast<double>(h.out));
        break;
      case LayerKind::Lstm:
        glorot(l.weights, static_cast<double>(h.in + h.out), static_cast<double>(h.out));
        for (std::size_t j = 0; j < h.out; ++j) l.biases[h.out + j] = 1.0;
        break;
      case LayerKind::Rnn:
        glorot(l.weights, static_cast<double>(h.in + h.out), static_cast<double>(h.out));
        break;
      default:
        break;
    }
  }
}

std::uint64_t layer_noise_seed(std::uint64_t noise_seed, std::size_t layer_index) {
  return splitmix64(noise_seed ^ splitmix64(static_cast<std::uint64_t>(layer_index) + 1));
}

std::pair<Tensor, ForwardCache> model_forward(const ModelGraph& model, const Tensor& batch,
                                              std::uint64_t noise_seed) {
  check_batch(model, batch);
  ForwardCache cache;
  cache.instance_id = model.instance_id();
  cache.version = model.version();
  cache.layers.resize(model.layers().size());
  Tensor x = batch;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const auto& layer = model.layers()[i];
    x = layer_forward(layer, x, model.mode(), layer_noise_seed(noise_seed, i), &cache.layers[i]);
    check_finite(x, i, layer);
  }
  return {std::move(x), std::move(cache)};
}

Tensor model_predict(const ModelGraph& model, const Tensor& batch, std::uint64_t noise_seed) {
  check_batch(model, batch);
  Tensor x = batch;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const auto& layer = model.layers()[i];
    x = layer_forward(layer, x, model.mode(), layer_noise_seed(noise_seed, i), nullptr);
    check_finite(x, i, layer);
  }
  return x;
}

Gradients model_backward(const ModelGraph& model, const ForwardCache& cache,
                         const Tensor& output_grad) {
  if (cache.instance_id != model.instance_id() || cache.version != model.version() ||
      cache.layers.size() != model.layers().size()) {
    throw Error(ErrorCode::StaleCache, "forward cache does not belong to the current parameters");
  }
  Gradients grads;
  for (const Tensor* p : model.parameters()) grads.params.emplace_back(p->shape());

  Tensor g = output_grad;
  std::size_t pi = grads.params.size();
  for (std::size_t i = model.layers().size(); i-- > 0;) {
    const auto& layer = model.layers()[i];
    Tensor* dw = nullptr;
    Tensor* db = nullptr;
    if (layer.has_params()) {
      pi -= 2;
      dw = &grads.params[pi];
      db = &grads.params[pi + 1];
    }
    g = layer_backward(layer, cache.layers[i], g, dw, db);
  }
  grads.input = std::move(g);
  return grads;
}

double gradient_check(const ModelGraph& model, const Tensor& batch, const Tensor& targets,
                      double epsilon, std::uint64_t noise_seed) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-4)) {
    throw Error(ErrorCode::InvalidConfig, "gradient_check epsilon must lie in [1e-6, 1e-4]");
  }
  if (!(model_predict(model, batch, noise_seed) == model_predict(model, batch, noise_seed))) {
    throw Error(ErrorCode::NonDeterministicForward, "two identical forward passes differ");
  }

  auto [out, cache] = model_forward(model, batch, noise_seed);
  const auto loss = mse_loss(out, targets);
  const Gradients grads = model_backward(model, cache, loss.gradient);

  double worst = 0.0;
  auto compare = [&](double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };

  ModelGraph work = model;
  auto params = work.mutable_parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p];
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double orig = t[i];
      t[i] = orig + epsilon;
      const double up = mse_loss(model_predict(work, batch, noise_seed), targets).loss;
      t[i] = orig - epsilon;
      const double down = mse_loss(model_predict(work, batch, noise_seed), targets).loss;
      t[i] = orig;
      compare(grads.params[p][i], (up - down) / (2.0 * epsilon));
    }
  }

  Tensor x = batch;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + epsilon;
    const double up = mse_loss(model_predict(work, x, noise_seed), targets).loss;
    x[i] = orig - epsilon;
    const double down = mse_loss(model_predict(work, x, noise_seed), targets).loss;
    x[i] = orig;
    compare(grads.input[i], (up - down) / (2.0 * epsilon));
  }
  return worst;
}

}  // namespace epf
