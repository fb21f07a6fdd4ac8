#pragma once

#include <any>

#include "n2i/tensor.hpp"
#include "n2i/unet.hpp"

namespace n2i {

// Soft-thresholding of the orthonormal DCT coefficients, DC exempt:
// idct2(shrink(dct2(x), tau)) per channel. Learning-free plug-in used for
// solver tests and structured-noise inference.
Tensor dct_soft_threshold(const Tensor& x, double tau);

// The z = R(x) step of the alternating solver. One implementation is the
// learnable network, the other the classical DCT shrinkage.
class Regularizer {
 public:
  virtual ~Regularizer() = default;
  virtual Tensor apply(const Tensor& x) const = 0;

  virtual bool trainable() const { return false; }
  // Trainable path: forward that records what backward needs.
  virtual Tensor apply_traced(const Tensor& x, std::any& acts) const {
    (void)acts;
    return apply(x);
  }
  // Returns the gradient wrt x and accumulates parameter gradients.
  virtual Tensor backward(const std::any& acts, const Tensor& upstream,
                          NetParams& grads) const;
};

class UNetRegularizer : public Regularizer {
 public:
  explicit UNetRegularizer(const NetParams& params) : params_(&params) {}

  Tensor apply(const Tensor& x) const override;
  bool trainable() const override { return true; }
  Tensor apply_traced(const Tensor& x, std::any& acts) const override;
  Tensor backward(const std::any& acts, const Tensor& upstream,
                  NetParams& grads) const override;

 private:
  const NetParams* params_;  // non-owning; single writer between steps
};

class DctShrinkRegularizer : public Regularizer {
 public:
  explicit DctShrinkRegularizer(double tau);
  Tensor apply(const Tensor& x) const override;
  double tau() const { return tau_; }

 private:
  double tau_;
};

}  // namespace n2i
