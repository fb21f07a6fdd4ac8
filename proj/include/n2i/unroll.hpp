#pragma once

#include <any>
#include <functional>
#include <string>
#include <vector>

#include "n2i/mask.hpp"
#include "n2i/noise.hpp"
#include "n2i/regularizer.hpp"
#include "n2i/tensor.hpp"
#include "n2i/unet.hpp"

namespace n2i {

enum class DfVariant { masked_quadratic, full_image, colored_cg };

DfVariant df_variant_from_string(const std::string& s);
std::string to_string(DfVariant v);

struct UnrollConfig {
  int iterations = 10;
  DfVariant df_variant = DfVariant::masked_quadratic;
  FillStrategy fill;  // local_mean, radius 1
  double cg_tol = 1e-6;
  int cg_max_iter = 200;

  void validate() const;
};

// Closed-form minimizer of  ||y_Jc - P_Jc x||^2 + mu ||x - z||^2:
// x_j = z_j on J,  x_j = (y_j + mu z_j) / (1 + mu) on J^c.
Tensor df_update(const Tensor& y, const Tensor& z, const MaskPartition& partition,
                 double mu);

// Same blend with J empty (full observation): x = (y + mu z) / (1 + mu).
Tensor df_update_full(const Tensor& y, const Tensor& z, double mu);

struct CgInfo {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

using CgObserver = std::function<void(int iter, const Tensor& x, double rnorm)>;

// Conjugate gradients for SPD operators on tensors. Stops when
// ||A x - b|| <= tol ||b|| or after max_iter steps (reported via info).
Tensor cg_solve(const std::function<Tensor(const Tensor&)>& apply_A,
                const Tensor& b, double tol, int max_iter, CgInfo* info = nullptr,
                const CgObserver& observer = {});

struct ColoredDfResult {
  Tensor x;
  std::vector<CgInfo> cg;  // one entry per channel
};

// Full-observation colored-Gaussian data fidelity: exact minimizer of
// ||K^{-1/2}(y - x)||^2 + mu ||x - z||^2, i.e. (K^-1 + mu I) x = K^-1 y + mu z,
// solved by CG per channel with the floored inverse covariance.
ColoredDfResult df_update_colored(const Tensor& y, const Tensor& z,
                                  const ColoredCovariance& cov, double mu,
                                  double cg_tol = 1e-6, int cg_max_iter = 200);

// Masked colored data fidelity via dense assembly of the J^c restriction of
// K. Test-scale feature: restricted to images of at most 32x32 pixels.
Tensor df_update_colored_masked(const Tensor& y, const Tensor& z,
                                const MaskPartition& partition,
                                const ColoredCovariance& cov, double mu);

// Per-iteration snapshots; doubles as the cache the backward pass consumes.
struct UnrollTrace {
  Tensor z0;
  std::vector<Tensor> x;  // x^(1..K)
  std::vector<Tensor> z;  // z^(1..K)
  Tensor output;          // final data-fidelity output
  std::vector<std::any> reg_acts;
  std::vector<CgInfo> cg;
};

// The unrolled variable-splitting solver:
//   z^(0) = filled network input, then for k = 1..K:
//   x^(k) = DF(y, z^(k-1)),  z^(k) = R(x^(k)),
// and the returned image is one more DF step from z^(K), so the masked
// positions of the output are exactly the last regularizer output.
// `partition` is required for masked_quadratic and ignored otherwise;
// `cov` is required for colored_cg.
Tensor unroll_forward(const Tensor& y, const MaskPartition* partition, double mu,
                      const UnrollConfig& config, const Regularizer& reg,
                      UnrollTrace* trace = nullptr,
                      const ColoredCovariance* cov = nullptr);

// Exact reverse-mode gradients through all iterations. Parameter gradients
// accumulate into `grads` (shared weights: summed across iterations); the
// return value is dLoss/dmu including every data-fidelity application
// (d x_j / d mu = (z_j - y_j)/(1+mu)^2 on J^c, 0 on J).
double unroll_backward(const Tensor& y, const MaskPartition* partition, double mu,
                       const UnrollConfig& config, const Regularizer& reg,
                       const UnrollTrace& trace, const Tensor& upstream,
                       NetParams& grads);

}  // namespace n2i
