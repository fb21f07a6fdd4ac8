#include "n2i/loss.hpp"

#include "n2i/errors.hpp"

namespace n2i {

LossResult masked_loss(const Tensor& output, const Tensor& y,
                       const MaskPartition& partition) {
  if (!output.same_shape(y)) throw DimensionError("masked_loss: shape mismatch");
  if (output.height() != partition.height || output.width() != partition.width)
    throw DimensionError("masked_loss: partition shape mismatch");
  LossResult res;
  res.grad = Tensor(output.shape);
  for (int c = 0; c < output.channels(); ++c) {
    const double* op = output.plane(c);
    const double* yp = y.plane(c);
    double* gp = res.grad.plane(c);
    for (int32_t j : partition.masked) {
      double d = op[static_cast<size_t>(j)] - yp[static_cast<size_t>(j)];
      res.loss += d * d;
      gp[static_cast<size_t>(j)] = 2.0 * d;
    }
  }
  return res;
}

LossResult full_loss(const Tensor& output, const Tensor& target) {
  if (!output.same_shape(target)) throw DimensionError("full_loss: shape mismatch");
  LossResult res;
  res.grad = Tensor(output.shape);
  for (size_t i = 0; i < output.v.size(); ++i) {
    double d = output.v[i] - target.v[i];
    res.loss += d * d;
    res.grad.v[i] = 2.0 * d;
  }
  return res;
}

}  // namespace n2i
