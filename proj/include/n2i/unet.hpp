#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "n2i/tensor.hpp"

namespace n2i {

// Shallow U-Net: per encoder level two kxk convs + ReLU and a 2x2 max-pool;
// a two-conv bottleneck; per decoder level nearest-neighbor upsampling
// followed by a conv, skip concatenation and two convs; a linear 1x1
// projection head. Channels start at base_channels and double per level.
struct UNetConfig {
  int depth = 2;
  int base_channels = 32;
  int kernel = 3;
  int in_channels = 1;
  bool batch_norm = false;  // config extension; rejected when set

  void validate() const;
};

struct NamedTensor {
  std::string name;
  Tensor t;
};

// Named parameter set. Network tensors come first in a fixed plan order; an
// optional trailing "mu_log" scalar carries the penalty parameter of the
// unrolled solver (stored as log so mu stays positive).
struct NetParams {
  UNetConfig config;
  std::vector<NamedTensor> tensors;

  bool has(const std::string& name) const { return index_.count(name) > 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  void add(std::string name, Tensor t);

  size_t total_scalars() const;
  bool has_mu() const { return has("mu_log"); }
  double mu() const;
  void set_mu_log(double value);

 private:
  std::unordered_map<std::string, int> index_;
};

struct ConvSpec {
  std::string name;  // tensor names are name+".w" / name+".b"
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 0;
  bool relu = true;
};

// Fixed layer plan derived from the config; also defines checkpoint naming.
std::vector<ConvSpec> conv_plan(const UNetConfig& config);

// Analytic parameter count of the network (excludes mu_log).
size_t unet_param_count(const UNetConfig& config);

// He-style fan-in scaled uniform init, biases zero, seeded.
NetParams init_params(const UNetConfig& config, uint64_t seed,
                      bool with_mu = false, double mu_init = 0.05);

NetParams zero_like(const NetParams& params);

// Reconstructs the architecture from a named tensor table (checkpoints).
UNetConfig config_from_tensors(const std::vector<NamedTensor>& tensors);

// Layer primitives with explicit backward passes. Exposed for the per-layer
// gradient checks; the network composes exactly these.
namespace layers {
Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor& b);
// Returns dx; accumulates dw/db.
Tensor conv_backward(const Tensor& x, const Tensor& w, const Tensor& dout,
                     Tensor& dw, Tensor& db);
Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& preact, const Tensor& dout);
Tensor maxpool2(const Tensor& x, std::vector<int32_t>& argmax);
Tensor maxpool2_backward(const std::vector<int32_t>& argmax,
                         const std::vector<int>& in_shape, const Tensor& dout);
Tensor upsample2(const Tensor& x);
Tensor upsample2_backward(const Tensor& dout);
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor reflect_pad(const Tensor& x, int ph, int pw);
Tensor reflect_pad_backward(const Tensor& dout, int orig_h, int orig_w);
}  // namespace layers

// Forward activations cache; required for the exact backward pass.
struct UNetActs {
  int orig_h = 0, orig_w = 0;
  std::vector<Tensor> conv_in;                    // input of each conv
  std::vector<Tensor> preact;                     // conv outputs before ReLU
  std::vector<std::vector<int32_t>> pool_argmax;  // per encoder level
};

// Inputs whose spatial dims are not divisible by 2^depth are reflect-padded
// on the bottom/right and the output is cropped back.
Tensor unet_forward(const Tensor& x, const NetParams& params,
                    UNetActs* acts = nullptr);

// Exact reverse-mode gradients. Accumulates parameter gradients into
// `grads` (same plan as params) and returns the gradient wrt the input.
Tensor unet_backward(const NetParams& params, const UNetActs& acts,
                     const Tensor& upstream, NetParams& grads);

}  // namespace n2i
