#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "epf/tensor.hpp"

namespace epf {

enum class LayerKind { Conv1d, MaxPool1d, Dense, Relu, Dropout, Lstm, Rnn, Flatten };

std::string_view to_string(LayerKind kind) noexcept;
std::optional<LayerKind> layer_kind_from_string(std::string_view name) noexcept;

enum class Mode { Training, Inference };

/// Kind-specific settings. Unused fields stay at their defaults.
struct LayerHyper {
  std::size_t in = 0;       // input channels (conv1d) / features (dense, lstm, rnn)
  std::size_t out = 0;      // output channels / units / hidden size
  std::size_t kernel = 1;   // conv1d
  std::size_t stride = 1;   // conv1d, maxpool1d
  std::size_t pool = 1;     // maxpool1d
  double rate = 0.0;        // dropout

  friend bool operator==(const LayerHyper&, const LayerHyper&) = default;
};

/// One layer of a ModelGraph.
///
/// Parameter layouts (row-major):
///   conv1d  weights [out][in][kernel], biases [out]
///   dense   weights [out][in],         biases [out]
///   lstm    weights [4*out][in+out],   biases [4*out]; gate blocks in the
///           order input, forget, candidate, output; columns are the input
///           features followed by the recurrent hidden state
///   rnn     weights [out][in+out],     biases [out]
/// Other kinds carry no parameters.
struct LayerParams {
  LayerKind kind = LayerKind::Relu;
  LayerHyper hyper;
  Tensor weights;
  Tensor biases;

  bool has_params() const noexcept { return !weights.empty(); }
  /// Throws InvalidConfig / InvalidRate when the hyper-settings are invalid.
  void validate() const;
};

LayerParams conv1d_layer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                         std::size_t stride = 1);
LayerParams maxpool1d_layer(std::size_t pool, std::size_t stride = 0);  // stride 0 = pool
LayerParams dense_layer(std::size_t in, std::size_t out);
LayerParams relu_layer();
LayerParams dropout_layer(double rate);
LayerParams lstm_layer(std::size_t in, std::size_t hidden);
LayerParams rnn_layer(std::size_t in, std::size_t hidden);
LayerParams flatten_layer();

/// Per-sample output shape (batch dimension excluded). Throws ShapeMismatch.
Shape layer_output_shape(const LayerParams& layer, const Shape& input);

/// Everything a layer's backward pass needs from its forward pass.
struct LayerCache {
  Tensor input;
  std::vector<Tensor> tensors;
  std::vector<std::size_t> indices;
};

// Stateless kernels. All take and return batch-major tensors.

/// x: batch x length x channels, valid padding.
Tensor conv1d_forward(const Tensor& x, const LayerParams& layer);
/// x: batch x length x channels. Argmax indices are flat offsets into x;
/// ties resolve to the earliest position.
std::pair<Tensor, std::vector<std::size_t>> maxpool1d_forward(const Tensor& x, std::size_t pool,
                                                              std::size_t stride);
/// x: batch x in.
Tensor dense_forward(const Tensor& x, const LayerParams& layer);
Tensor relu(const Tensor& x);
/// Inverted dropout. Inference mode (or rate 0) is the identity.
Tensor dropout(const Tensor& x, double rate, Mode mode, std::uint64_t seed);
/// Keep-mask (1 = keep) drawn from the seeded stream, one entry per element.
std::vector<unsigned char> dropout_mask(std::size_t n, double rate, std::uint64_t seed);
Tensor apply_dropout_mask(const Tensor& x, std::span<const unsigned char> mask, double rate);

struct LstmState {
  Tensor h;  // batch x hidden
  Tensor c;  // batch x hidden
};
/// One LSTM cell step. x_t: batch x in; h_prev, c_prev: batch x hidden.
LstmState lstm_step(const Tensor& x_t, const Tensor& h_prev, const Tensor& c_prev,
                    const LayerParams& layer);

/// Generic forward with caching (cache may be null). `seed` only matters
/// for dropout in training mode.
Tensor layer_forward(const LayerParams& layer, const Tensor& x, Mode mode, std::uint64_t seed,
                     LayerCache* cache);
/// Returns the input gradient. Parameter gradients are added into
/// `weight_grad` / `bias_grad`, which must be shaped like the parameters
/// (ignored for parameter-free layers).
Tensor layer_backward(const LayerParams& layer, const LayerCache& cache, const Tensor& grad_out,
                      Tensor* weight_grad, Tensor* bias_grad);

}  // namespace epf
