#pragma once

#include "n2i/unet.hpp"

namespace n2i {

// Standard Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias correction).
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long t = 0;
};

AdamState make_adam_state(const NetParams& params);

// One update in place. Throws NumericError (before touching any parameter)
// if a gradient is non-finite.
void adam_step(NetParams& params, const NetParams& grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

}  // namespace n2i
