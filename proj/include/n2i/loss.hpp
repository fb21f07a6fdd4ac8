#pragma once

#include "n2i/mask.hpp"
#include "n2i/tensor.hpp"

namespace n2i {

struct LossResult {
  double loss = 0.0;
  Tensor grad;
};

// Sum of squared errors over the masked positions J only; the gradient is
// 2(output - y) on J and exactly zero on J^c.
LossResult masked_loss(const Tensor& output, const Tensor& y,
                       const MaskPartition& partition);

// Sum of squared errors over all pixels.
LossResult full_loss(const Tensor& output, const Tensor& target);

}  // namespace n2i
