#include "n2i/regularizer.hpp"

#include <cmath>

#include "n2i/dct.hpp"
#include "n2i/errors.hpp"

namespace n2i {

Tensor dct_soft_threshold(const Tensor& x, double tau) {
  if (tau < 0.0) throw ConfigError("dct_soft_threshold: tau must be >= 0");
  Tensor coef = dct2(x);
  size_t hw = static_cast<size_t>(x.height()) * x.width();
  for (int c = 0; c < x.channels(); ++c) {
    double* plane = coef.plane(c);
    for (size_t i = 1; i < hw; ++i) {  // i = 0 is DC, exempt
      double v = plane[i];
      double mag = std::fabs(v) - tau;
      plane[i] = mag > 0.0 ? (v < 0.0 ? -mag : mag) : 0.0;
    }
  }
  return idct2(coef);
}

Tensor Regularizer::backward(const std::any&, const Tensor&, NetParams&) const {
  throw NumericError("regularizer is not trainable");
}

Tensor UNetRegularizer::apply(const Tensor& x) const {
  return unet_forward(x, *params_);
}

Tensor UNetRegularizer::apply_traced(const Tensor& x, std::any& acts) const {
  UNetActs a;
  Tensor out = unet_forward(x, *params_, &a);
  acts = std::move(a);
  return out;
}

Tensor UNetRegularizer::backward(const std::any& acts, const Tensor& upstream,
                                 NetParams& grads) const {
  const UNetActs* a = std::any_cast<UNetActs>(&acts);
  if (!a) throw NumericError("unroll backward: missing forward trace");
  return unet_backward(*params_, *a, upstream, grads);
}

DctShrinkRegularizer::DctShrinkRegularizer(double tau) : tau_(tau) {
  if (tau < 0.0) throw ConfigError("dct_soft_threshold: tau must be >= 0");
}

Tensor DctShrinkRegularizer::apply(const Tensor& x) const {
  return dct_soft_threshold(x, tau_);
}

}  // namespace n2i
