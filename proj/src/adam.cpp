#include "n2i/adam.hpp"

#include <cmath>

#include "n2i/errors.hpp"

namespace n2i {

AdamState make_adam_state(const NetParams& params) {
  AdamState state;
  for (const auto& nt : params.tensors) {
    state.m.emplace_back(nt.t.shape);
    state.v.emplace_back(nt.t.shape);
  }
  return state;
}

void adam_step(NetParams& params, const NetParams& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  if (params.tensors.size() != grads.tensors.size() ||
      params.tensors.size() != state.m.size())
    throw DimensionError("adam: parameter/gradient/state mismatch");
  for (size_t i = 0; i < grads.tensors.size(); ++i) {
    if (params.tensors[i].name != grads.tensors[i].name)
      throw DimensionError("adam: gradient plan differs from parameters");
    if (!all_finite(grads.tensors[i].t))
      throw NumericError("adam: non-finite gradient in " + grads.tensors[i].name +
                         ", step aborted");
  }
  ++state.t;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    Tensor& p = params.tensors[i].t;
    const Tensor& g = grads.tensors[i].t;
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (size_t j = 0; j < p.v.size(); ++j) {
      m.v[j] = beta1 * m.v[j] + (1.0 - beta1) * g.v[j];
      v.v[j] = beta2 * v.v[j] + (1.0 - beta2) * g.v[j] * g.v[j];
      double mhat = m.v[j] / bc1;
      double vhat = v.v[j] / bc2;
      p.v[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace n2i
