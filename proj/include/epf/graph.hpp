#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "epf/layers.hpp"
#include "epf/tensor.hpp"

namespace epf {

/// Ordered layer stack plus the per-sample input shape it was built for.
/// Adjacent shapes are validated at construction. Every mutable access to
/// parameters bumps a version counter so that forward caches taken before
/// an update are rejected by model_backward.
class ModelGraph {
 public:
  ModelGraph(Shape input_shape, std::vector<LayerParams> layers, std::uint64_t rng_seed);
  ModelGraph(const ModelGraph& other);
  ModelGraph& operator=(const ModelGraph& other);
  ModelGraph(ModelGraph&&) noexcept = default;
  ModelGraph& operator=(ModelGraph&&) noexcept = default;

  const Shape& input_shape() const noexcept { return input_shape_; }
  Shape output_shape() const;
  const std::vector<LayerParams>& layers() const noexcept { return layers_; }
  std::uint64_t rng_seed() const noexcept { return rng_seed_; }

  Mode mode() const noexcept { return mode_; }
  void set_mode(Mode m) noexcept { mode_ = m; }

  /// Weight and bias tensors of every parameterized layer, in layer order.
  std::vector<const Tensor*> parameters() const;
  std::vector<Tensor*> mutable_parameters();
  std::vector<Tensor> parameter_values() const;
  void set_parameters(std::span<const Tensor> values);
  std::size_t parameter_count() const;

  /// Glorot-uniform weights, zero biases, LSTM forget-gate bias 1.0.
  void initialize(std::uint64_t seed);

  std::uint64_t instance_id() const noexcept { return instance_id_; }
  std::uint64_t version() const noexcept { return version_; }

 private:
  Shape input_shape_;
  std::vector<LayerParams> layers_;
  std::uint64_t rng_seed_ = 0;
  Mode mode_ = Mode::Inference;
  std::uint64_t instance_id_ = 0;
  std::uint64_t version_ = 0;
};

struct ForwardCache {
  std::uint64_t instance_id = 0;
  std::uint64_t version = 0;
  std::vector<LayerCache> layers;
};

struct Gradients {
  std::vector<Tensor> params;  // aligned with ModelGraph::parameters()
  Tensor input;
};

/// Seed used by a dropout layer at position `layer_index` for a forward pass
/// driven by `noise_seed`.
std::uint64_t layer_noise_seed(std::uint64_t noise_seed, std::size_t layer_index);

/// Runs the layers in order on batch x input_shape. In training mode the
/// dropout masks are a pure function of noise_seed.
std::pair<Tensor, ForwardCache> model_forward(const ModelGraph& model, const Tensor& batch,
                                              std::uint64_t noise_seed = 0);
/// Forward without caching.
Tensor model_predict(const ModelGraph& model, const Tensor& batch, std::uint64_t noise_seed = 0);

Gradients model_backward(const ModelGraph& model, const ForwardCache& cache,
                         const Tensor& output_grad);

/// Central-difference check of model_backward under the MSE loss. Every
/// parameter and every input element is perturbed by +/- epsilon; the
/// result is the largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double gradient_check(const ModelGraph& model, const Tensor& batch, const Tensor& targets,
                      double epsilon = 1e-5, std::uint64_t noise_seed = 0);

}  // namespace epf
