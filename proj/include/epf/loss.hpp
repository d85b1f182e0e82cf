#pragma once

#include "epf/tensor.hpp"

namespace epf {

struct LossResult {
  double loss = 0.0;
  Tensor gradient;  // d loss / d predictions
};

/// Mean squared error over all elements: (1/n) sum (p - t)^2, gradient 2(p - t)/n.
LossResult mse_loss(const Tensor& predictions, const Tensor& targets);

}  // namespace epf
