#include "epf/loss.hpp"

#include "epf/error.hpp"

namespace epf {

LossResult mse_loss(const Tensor& predictions, const Tensor& targets) {
  if (predictions.shape() != targets.shape()) {
    throw Error(ErrorCode::ShapeMismatch, "predictions " + shape_str(predictions.shape()) +
                                              " vs targets " + shape_str(targets.shape()));
  }
  if (predictions.empty()) throw Error(ErrorCode::EmptyInput, "mse of zero elements");
  const double n = static_cast<double>(predictions.size());
  LossResult r{0.0, Tensor(predictions.shape())};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double diff = predictions[i] - targets[i];
    r.loss += diff * diff;
    r.gradient[i] = 2.0 * diff / n;
  }
  r.loss /= n;
  return r;
}

}  // namespace epf
