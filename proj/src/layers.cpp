#include "epf/layers.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "epf/error.hpp"

namespace epf {

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::MaxPool1d: return "maxpool1d";
    case LayerKind::Dense: return "dense";
    case LayerKind::Relu: return "relu";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Lstm: return "lstm";
    case LayerKind::Rnn: return "rnn";
    case LayerKind::Flatten: return "flatten";
  }
  return "unknown";
}

std::optional<LayerKind> layer_kind_from_string(std::string_view name) noexcept {
  for (auto k : {LayerKind::Conv1d, LayerKind::MaxPool1d, LayerKind::Dense, LayerKind::Relu,
                 LayerKind::Dropout, LayerKind::Lstm, LayerKind::Rnn, LayerKind::Flatten}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

void LayerParams::validate() const {
  auto bad = [&](const std::string& msg) {
    throw Error(ErrorCode::InvalidConfig, std::string(to_string(kind)) + ": " + msg);
  };
  auto expect = [&](const Tensor& t, const Shape& s, const char* what) {
    if (t.shape() != s) {
      throw Error(ErrorCode::ShapeMismatch, std::string(to_string(kind)) + " " + what + " is " +
                                                shape_str(t.shape()) + ", expected " + shape_str(s));
    }
  };
  switch (kind) {
    case LayerKind::Conv1d:
      if (hyper.kernel < 1 || hyper.stride < 1 || hyper.out < 1 || hyper.in < 1)
        bad("kernel, stride, channels must be >= 1");
      expect(weights, {hyper.out, hyper.in, hyper.kernel}, "weights");
      expect(biases, {hyper.out}, "biases");
      break;
    case LayerKind::MaxPool1d:
      if (hyper.pool < 1 || hyper.stride < 1) bad("pool and stride must be >= 1");
      break;
    case LayerKind::Dense:
      if (hyper.in < 1 || hyper.out < 1) bad("sizes must be >= 1");
      expect(weights, {hyper.out, hyper.in}, "weights");
      expect(biases, {hyper.out}, "biases");
      break;
    case LayerKind::Dropout:
      if (!(hyper.rate >= 0.0 && hyper.rate < 1.0)) {
        throw Error(ErrorCode::InvalidRate, "dropout rate " + std::to_string(hyper.rate));
      }
      break;
    case LayerKind::Lstm:
      if (hyper.in < 1 || hyper.out < 1) bad("sizes must be >= 1");
      expect(weights, {4 * hyper.out, hyper.in + hyper.out}, "weights");
      expect(biases, {4 * hyper.out}, "biases");
      break;
    case LayerKind::Rnn:
      if (hyper.in < 1 || hyper.out < 1) bad("sizes must be >= 1");
      expect(weights, {hyper.out, hyper.in + hyper.out}, "weights");
      expect(biases, {hyper.out}, "biases");
      break;
    case LayerKind::Relu:
    case LayerKind::Flatten:
      break;
  }
}

LayerParams conv1d_layer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                         std::size_t stride) {
  LayerParams l;
  l.kind = LayerKind::Conv1d;
  l.hyper.in = in_channels;
  l.hyper.out = out_channels;
  l.hyper.kernel = kernel;
  l.hyper.stride = stride;
  l.weights = Tensor({out_channels, in_channels, kernel});
  l.biases = Tensor({out_channels});
  l.validate();
  return l;
}

LayerParams maxpool1d_layer(std::size_t pool, std::size_t stride) {
  LayerParams l;
  l.kind = LayerKind::MaxPool1d;
  l.hyper.pool = pool;
  l.hyper.stride = stride == 0 ? pool : stride;
  l.validate();
  return l;
}

LayerParams dense_layer(std::size_t in, std::size_t out) {
  LayerParams l;
  l.kind = LayerKind::Dense;
  l.hyper.in = in;
  l.hyper.out = out;
  l.weights = Tensor({out, in});
  l.biases = Tensor({out});
  l.validate();
  return l;
}

LayerParams relu_layer() {
  LayerParams l;
  l.kind = LayerKind::Relu;
  return l;
}

LayerParams dropout_layer(double rate) {
  LayerParams l;
  l.kind = LayerKind::Dropout;
  l.hyper.rate = rate;
  l.validate();
  return l;
}

LayerParams lstm_layer(std::size_t in, std::size_t hidden) {
  LayerParams l;
  l.kind = LayerKind::Lstm;
  l.hyper.in = in;
  l.hyper.out = hidden;
  l.weights = Tensor({4 * hidden, in + hidden});
  l.biases = Tensor({4 * hidden});
  l.validate();
  return l;
}

LayerParams rnn_layer(std::size_t in, std::size_t hidden) {
  LayerParams l;
  l.kind = LayerKind::Rnn;
  l.hyper.in = in;
  l.hyper.out = hidden;
  l.weights = Tensor({hidden, in + hidden});
  l.biases = Tensor({hidden});
  l.validate();
  return l;
}

LayerParams flatten_layer() {
  LayerParams l;
  l.kind = LayerKind::Flatten;
  return l;
}

namespace {

[[noreturn]] void shape_error(LayerKind kind, const Shape& input, const std::string& why) {
  throw Error(ErrorCode::ShapeMismatch,
              std::string(to_string(kind)) + " input " + shape_str(input) + ": " + why);
}

std::size_t pooled_length(std::size_t length, std::size_t window, std::size_t stride) {
  return (length - window) / stride + 1;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require_rank(const Tensor& x, std::size_t rank, LayerKind kind) {
  if (x.rank() != rank) {
    shape_error(kind, x.shape(), "expected rank " + std::to_string(rank));
  }
}

// z = W * xh + b for one row of a recurrent layer.
void affine(const LayerParams& l, const double* xh, std::size_t d, double* z) {
  const std::size_t rows = l.biases.size();
  const double* w = l.weights.ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * d;
    double acc = l.biases[r];
    for (std::size_t k = 0; k < d; ++k) acc += wr[k] * xh[k];
    z[r] = acc;
  }
}

// One LSTM cell on a single batch row. gates receives activated (i, f, g, o).
void lstm_cell(const LayerParams& l, const double* xh, const double* c_prev, double* gates,
               double* c, double* tc, double* h) {
  const std::size_t hs = l.hyper.out;
  affine(l, xh, l.hyper.in + hs, gates);
  for (std::size_t j = 0; j < hs; ++j) {
    const double i = sigmoid(gates[j]);
    const double f = sigmoid(gates[hs + j]);
    const double g = std::tanh(gates[2 * hs + j]);
    const double o = sigmoid(gates[3 * hs + j]);
    gates[j] = i;
    gates[hs + j] = f;
    gates[2 * hs + j] = g;
    gates[3 * hs + j] = o;
    c[j] = f * c_prev[j] + i * g;
    tc[j] = std::tanh(c[j]);
    h[j] = o * tc[j];
  }
}

// --- forward/backward per kind ---------------------------------------------

Tensor conv1d_backward(const LayerParams& l, const LayerCache& cache, const Tensor& dy,
                       Tensor* dw, Tensor* db) {
  const Tensor& x = cache.input;
  const std::size_t batch = x.dim(0), len = x.dim(1), cin = x.dim(2);
  const std::size_t cout = l.hyper.out, k = l.hyper.kernel, s = l.hyper.stride;
  const std::size_t out_len = dy.dim(1);
  Tensor dx(x.shape());
  const double* w = l.weights.ptr();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x.ptr() + b * len * cin;
    double* dxb = dx.ptr() + b * len * cin;
    for (std::size_t t = 0; t < out_len; ++t) {
      const double* g = dy.ptr() + (b * out_len + t) * cout;
      for (std::size_t co = 0; co < cout; ++co) {
        const double go = g[co];
        if (go == 0.0) continue;
        if (db) (*db)[co] += go;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          const std::size_t wbase = (co * cin + ci) * k;
          for (std::size_t kk = 0; kk < k; ++kk) {
            const std::size_t xi = (t * s + kk) * cin + ci;
            if (dw) (*dw)[wbase + kk] += go * xb[xi];
            dxb[xi] += go * w[wbase + kk];
          }
        }
      }
    }
  }
  return dx;
}

Tensor maxpool_backward(const LayerCache& cache, const Tensor& dy) {
  Tensor dx(cache.input.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[cache.indices[i]] += dy[i];
  return dx;
}

Tensor dense_backward(const LayerParams& l, const LayerCache& cache, const Tensor& dy, Tensor* dw,
                      Tensor* db) {
  const Tensor& x = cache.input;
  const std::size_t batch = x.dim(0), in = l.hyper.in, out = l.hyper.out;
  Tensor dx(x.shape());
  const double* w = l.weights.ptr();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x.ptr() + b * in;
    double* dxb = dx.ptr() + b * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[b * out + o];
      if (g == 0.0) continue;
      if (db) (*db)[o] += g;
      const double* wr = w + o * in;
      double* dwr = dw ? dw->ptr() + o * in : nullptr;
      for (std::size_t i = 0; i < in; ++i) {
        if (dwr) dwr[i] += g * xb[i];
        dxb[i] += g * wr[i];
      }
    }
  }
  return dx;
}

Tensor lstm_forward_seq(const LayerParams& l, const Tensor& x, LayerCache* cache) {
  require_rank(x, 3, l.kind);
  const std::size_t batch = x.dim(0), steps = x.dim(1), f = x.dim(2), hs = l.hyper.out;
  if (f != l.hyper.in) shape_error(l.kind, x.shape(), "feature count differs from layer input");
  const std::size_t d = f + hs;

  Tensor xh({steps, batch, d});
  Tensor gates({steps, batch, 4 * hs});
  Tensor cells({steps + 1, batch, hs});
  Tensor tcs({steps, batch, hs});
  Tensor h({batch, hs});
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      double* row = xh.ptr() + (t * batch + b) * d;
      std::copy_n(x.ptr() + (b * steps + t) * f, f, row);
      std::copy_n(h.ptr() + b * hs, hs, row + f);
      lstm_cell(l, row, cells.ptr() + (t * batch + b) * hs, gates.ptr() + (t * batch + b) * 4 * hs,
                cells.ptr() + ((t + 1) * batch + b) * hs, tcs.ptr() + (t * batch + b) * hs,
                h.ptr() + b * hs);
    }
  }
  if (cache) {
    cache->tensors = {std::move(xh), std::move(gates), std::move(cells), std::move(tcs)};
  }
  return h;
}

Tensor lstm_backward_seq(const LayerParams& l, const LayerCache& cache, const Tensor& dy,
                         Tensor* dw, Tensor* db) {
  const Tensor& x = cache.input;
  const Tensor& xh = cache.tensors[0];
  const Tensor& gates = cache.tensors[1];
  const Tensor& cells = cache.tensors[2];
  const Tensor& tcs = cache.tensors[3];
  const std::size_t batch = x.dim(0), steps = x.dim(1), f = x.dim(2), hs = l.hyper.out;
  const std::size_t d = f + hs;
  const double* w = l.weights.ptr();

  Tensor dx(x.shape());
  std::vector<double> dh(dy.values());
  std::vector<double> dc(batch * hs, 0.0);
  std::vector<double> dz(4 * hs);
  std::vector<double> dxh(d);
  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t b = 0; b < batch; ++b) {
      const double* gt = gates.ptr() + (t * batch + b) * 4 * hs;
      const double* c_prev = cells.ptr() + (t * batch + b) * hs;
      const double* tc = tcs.ptr() + (t * batch + b) * hs;
      double* dhb = dh.data() + b * hs;
      double* dcb = dc.data() + b * hs;
      for (std::size_t j = 0; j < hs; ++j) {
        const double i = gt[j], fg = gt[hs + j], g = gt[2 * hs + j], o = gt[3 * hs + j];
        const double d_o = dhb[j] * tc[j];
        const double dcj = dcb[j] + dhb[j] * o * (1.0 - tc[j] * tc[j]);
        dz[j] = dcj * g * i * (1.0 - i);
        dz[hs + j] = dcj * c_prev[j] * fg * (1.0 - fg);
        dz[2 * hs + j] = dcj * i * (1.0 - g * g);
        dz[3 * hs + j] = d_o * o * (1.0 - o);
        dcb[j] = dcj * fg;
      }
      const double* row = xh.ptr() + (t * batch + b) * d;
      std::fill(dxh.begin(), dxh.end(), 0.0);
      for (std::size_t r = 0; r < 4 * hs; ++r) {
        const double g = dz[r];
        if (g == 0.0) continue;
        if (db) (*db)[r] += g;
        const double* wr = w + r * d;
        double* dwr = dw ? dw->ptr() + r * d : nullptr;
        for (std::size_t k = 0; k < d; ++k) {
          if (dwr) dwr[k] += g * row[k];
          dxh[k] += g * wr[k];
        }
      }
      std::copy_n(dxh.begin(), f, dx.ptr() + (b * steps + t) * f);
      std::copy_n(dxh.begin() + static_cast<std::ptrdiff_t>(f), hs, dhb);
    }
  }
  return dx;
}

Tensor rnn_forward_seq(const LayerParams& l, const Tensor& x, LayerCache* cache) {
  require_rank(x, 3, l.kind);
  const std::size_t batch = x.dim(0), steps = x.dim(1), f = x.dim(2), hs = l.hyper.out;
  if (f != l.hyper.in) shape_error(l.kind, x.shape(), "feature count differs from layer input");
  const std::size_t d = f + hs;
  Tensor xh({steps, batch, d});
  Tensor hidden({steps, batch, hs});
  Tensor h({batch, hs});
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      double* row = xh.ptr() + (t * batch + b) * d;
      std::copy_n(x.ptr() + (b * steps + t) * f, f, row);
      std::copy_n(h.ptr() + b * hs, hs, row + f);
      double* hb = h.ptr() + b * hs;
      affine(l, row, d, hb);
      for (std::size_t j = 0; j < hs; ++j) hb[j] = std::tanh(hb[j]);
      std::copy_n(hb, hs, hidden.ptr() + (t * batch + b) * hs);
    }
  }
  if (cache) cache->tensors = {std::move(xh), std::move(hidden)};
  return h;
}

Tensor rnn_backward_seq(const LayerParams& l, const LayerCache& cache, const Tensor& dy,
                        Tensor* dw, Tensor* db) {
  const Tensor& x = cache.input;
  const Tensor& xh = cache.tensors[0];
  const Tensor& hidden = cache.tensors[1];
  const std::size_t batch = x.dim(0), steps = x.dim(1), f = x.dim(2), hs = l.hyper.out;
  const std::size_t d = f + hs;
  const double* w = l.weights.ptr();
  Tensor dx(x.shape());
  std::vector<double> dh(dy.values());
  std::vector<double> dz(hs), dxh(d);
  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t b = 0; b < batch; ++b) {
      const double* ht = hidden.ptr() + (t * batch + b) * hs;
      double* dhb = dh.data() + b * hs;
      for (std::size_t j = 0; j < hs; ++j) dz[j] = dhb[j] * (1.0 - ht[j] * ht[j]);
      const double* row = xh.ptr() + (t * batch + b) * d;
      std::fill(dxh.begin(), dxh.end(), 0.0);
      for (std::size_t r = 0; r < hs; ++r) {
        const double g = dz[r];
        if (g == 0.0) continue;
        if (db) (*db)[r] += g;
        const double* wr = w + r * d;
        double* dwr = dw ? dw->ptr() + r * d : nullptr;
        for (std::size_t k = 0; k < d; ++k) {
          if (dwr) dwr[k] += g * row[k];
          dxh[k] += g * wr[k];
        }
      }
      std::copy_n(dxh.begin(), f, dx.ptr() + (b * steps + t) * f);
      std::copy_n(dxh.begin() + static_cast<std::ptrdiff_t>(f), hs, dhb);
    }
  }
  return dx;
}

}  // namespace

Shape layer_output_shape(const LayerParams& l, const Shape& in) {
  switch (l.kind) {
    case LayerKind::Conv1d:
      if (in.size() != 2) shape_error(l.kind, in, "expected length x channels");
      if (in[1] != l.hyper.in) shape_error(l.kind, in, "channel count differs from layer input");
      if (in[0] < l.hyper.kernel) shape_error(l.kind, in, "length shorter than kernel");
      return {pooled_length(in[0], l.hyper.kernel, l.hyper.stride), l.hyper.out};
    case LayerKind::MaxPool1d:
      if (in.size() != 2) shape_error(l.kind, in, "expected length x channels");
      if (in[0] < l.hyper.pool) shape_error(l.kind, in, "length shorter than pool");
      return {pooled_length(in[0], l.hyper.pool, l.hyper.stride), in[1]};
    case LayerKind::Dense:
      if (in.size() != 1 || in[0] != l.hyper.in) shape_error(l.kind, in, "expected " + std::to_string(l.hyper.in) + " features");
      return {l.hyper.out};
    case LayerKind::Lstm:
    case LayerKind::Rnn:
      if (in.size() != 2 || in[1] != l.hyper.in || in[0] < 1) shape_error(l.kind, in, "expected steps x " + std::to_string(l.hyper.in));
      return {l.hyper.out};
    case LayerKind::Flatten:
      return {shape_size(in)};
    case LayerKind::Relu:
    case LayerKind::Dropout:
      return in;
  }
  return in;
}

Tensor conv1d_forward(const Tensor& x, const LayerParams& l) {
  require_rank(x, 3, l.kind);
  const std::size_t batch = x.dim(0), len = x.dim(1), cin = x.dim(2);
  if (cin != l.hyper.in) shape_error(l.kind, x.shape(), "channel count differs from layer input");
  if (len < l.hyper.kernel) shape_error(l.kind, x.shape(), "length shorter than kernel");
  const std::size_t k = l.hyper.kernel, s = l.hyper.stride, cout = l.hyper.out;
  const std::size_t out_len = pooled_length(len, k, s);
  Tensor y({batch, out_len, cout});
  const double* w = l.weights.ptr();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x.ptr() + b * len * cin;
    for (std::size_t t = 0; t < out_len; ++t) {
      double* yt = y.ptr() + (b * out_len + t) * cout;
      for (std::size_t co = 0; co < cout; ++co) {
        double acc = l.biases[co];
        for (std::size_t ci = 0; ci < cin; ++ci) {
          const double* wk = w + (co * cin + ci) * k;
          for (std::size_t kk = 0; kk < k; ++kk) acc += xb[(t * s + kk) * cin + ci] * wk[kk];
        }
        yt[co] = acc;
      }
    }
  }
  return y;
}

std::pair<Tensor, std::vector<std::size_t>> maxpool1d_forward(const Tensor& x, std::size_t pool,
                                                              std::size_t stride) {
  require_rank(x, 3, LayerKind::MaxPool1d);
  if (pool < 1 || stride < 1) shape_error(LayerKind::MaxPool1d, x.shape(), "pool and stride must be >= 1");
  const std::size_t batch = x.dim(0), len = x.dim(1), ch = x.dim(2);
  if (len < pool) shape_error(LayerKind::MaxPool1d, x.shape(), "length shorter than pool");
  const std::size_t out_len = pooled_length(len, pool, stride);
  Tensor y({batch, out_len, ch});
  std::vector<std::size_t> argmax(y.size());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < out_len; ++t) {
      for (std::size_t c = 0; c < ch; ++c) {
        std::size_t best = (b * len + t * stride) * ch + c;
        for (std::size_t p = 1; p < pool; ++p) {
          const std::size_t idx = (b * len + t * stride + p) * ch + c;
          if (x[idx] > x[best]) best = idx;
        }
        const std::size_t o = (b * out_len + t) * ch + c;
        y[o] = x[best];
        argmax[o] = best;
      }
    }
  }
  return {std::move(y), std::move(argmax)};
}

Tensor dense_forward(const Tensor& x, const LayerParams& l) {
  require_rank(x, 2, l.kind);
  const std::size_t batch = x.dim(0), in = l.hyper.in, out = l.hyper.out;
  if (x.dim(1) != in) shape_error(l.kind, x.shape(), "expected " + std::to_string(in) + " features");
  Tensor y({batch, out});
  const double* w = l.weights.ptr();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x.ptr() + b * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = w + o * in;
      double acc = l.biases[o];
      for (std::size_t i = 0; i < in; ++i) acc += wr[i] * xb[i];
      y[b * out + o] = acc;
    }
  }
  return y;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

std::vector<unsigned char> dropout_mask(std::size_t n, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::InvalidRate, "dropout rate " + std::to_string(rate));
  }
  std::mt19937_64 rng(seed);
  std::vector<unsigned char> mask(n);
  for (auto& m : mask) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u >= rate ? 1 : 0;
  }
  return mask;
}

Tensor apply_dropout_mask(const Tensor& x, std::span<const unsigned char> mask, double rate) {
  if (mask.size() != x.size()) {
    throw Error(ErrorCode::ShapeMismatch, "dropout mask size differs from input");
  }
  const double scale = 1.0 / (1.0 - rate);
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = mask[i] ? y[i] * scale : 0.0;
  return y;
}

Tensor dropout(const Tensor& x, double rate, Mode mode, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::InvalidRate, "dropout rate " + std::to_string(rate));
  }
  if (mode == Mode::Inference || rate == 0.0) return x;
  return apply_dropout_mask(x, dropout_mask(x.size(), rate, seed), rate);
}

LstmState lstm_step(const Tensor& x_t, const Tensor& h_prev, const Tensor& c_prev,
                    const LayerParams& l) {
  if (l.kind != LayerKind::Lstm) throw Error(ErrorCode::InvalidConfig, "lstm_step needs an lstm layer");
  const std::size_t hs = l.hyper.out, f = l.hyper.in;
  if (x_t.rank() != 2 || x_t.dim(1) != f) shape_error(l.kind, x_t.shape(), "x_t must be batch x in");
  const std::size_t batch = x_t.dim(0);
  const Shape state{batch, hs};
  if (h_prev.shape() != state || c_prev.shape() != state) {
    shape_error(l.kind, h_prev.shape(), "state must be batch x hidden");
  }
  LstmState out{Tensor(state), Tensor(state)};
  std::vector<double> xh(f + hs), gates(4 * hs), tc(hs);
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(x_t.ptr() + b * f, f, xh.begin());
    std::copy_n(h_prev.ptr() + b * hs, hs, xh.begin() + static_cast<std::ptrdiff_t>(f));
    lstm_cell(l, xh.data(), c_prev.ptr() + b * hs, gates.data(), out.c.ptr() + b * hs, tc.data(),
              out.h.ptr() + b * hs);
  }
  return out;
}

Tensor layer_forward(const LayerParams& l, const Tensor& x, Mode mode, std::uint64_t seed,
                     LayerCache* cache) {
  if (cache) {
    cache->input = x;
    cache->tensors.clear();
    cache->indices.clear();
  }
  switch (l.kind) {
    case LayerKind::Conv1d:
      return conv1d_forward(x, l);
    case LayerKind::MaxPool1d: {
      auto [y, idx] = maxpool1d_forward(x, l.hyper.pool, l.hyper.stride);
      if (cache) cache->indices = std::move(idx);
      return y;
    }
    case LayerKind::Dense:
      return dense_forward(x, l);
    case LayerKind::Relu:
      return relu(x);
    case LayerKind::Dropout: {
      if (mode == Mode::Inference || l.hyper.rate == 0.0) return x;
      auto mask = dropout_mask(x.size(), l.hyper.rate, seed);
      Tensor y = apply_dropout_mask(x, mask, l.hyper.rate);
      if (cache) {
        Tensor mult(x.shape());
        const double scale = 1.0 / (1.0 - l.hyper.rate);
        for (std::size_t i = 0; i < mult.size(); ++i) mult[i] = mask[i] ? scale : 0.0;
        cache->tensors.push_back(std::move(mult));
      }
      return y;
    }
    case LayerKind::Lstm:
      return lstm_forward_seq(l, x, cache);
    case LayerKind::Rnn:
      return rnn_forward_seq(l, x, cache);
    case LayerKind::Flatten: {
      if (x.rank() < 1) shape_error(l.kind, x.shape(), "needs a batch dimension");
      const std::size_t batch = x.dim(0);
      return x.reshaped({batch, batch == 0 ? 0 : x.size() / batch});
    }
  }
  return x;
}

Tensor layer_backward(const LayerParams& l, const LayerCache& cache, const Tensor& dy,
                      Tensor* dw, Tensor* db) {
  switch (l.kind) {
    case LayerKind::Conv1d:
      return conv1d_backward(l, cache, dy, dw, db);
    case LayerKind::MaxPool1d:
      return maxpool_backward(cache, dy);
    case LayerKind::Dense:
      return dense_backward(l, cache, dy, dw, db);
    case LayerKind::Relu: {
      Tensor dx = dy;
      for (std::size_t i = 0; i < dx.size(); ++i) {
        if (!(cache.input[i] > 0.0)) dx[i] = 0.0;
      }
      return dx;
    }
    case LayerKind::Dropout: {
      if (cache.tensors.empty()) return dy;
      Tensor dx = dy;
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= cache.tensors[0][i];
      return dx;
    }
    case LayerKind::Lstm:
      return lstm_backward_seq(l, cache, dy, dw, db);
    case LayerKind::Rnn:
      return rnn_backward_seq(l, cache, dy, dw, db);
    case LayerKind::Flatten:
      return dy.reshaped(cache.input.shape());
  }
  return dy;
}

}  // namespace epf
