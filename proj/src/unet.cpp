#include "n2i/unet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "n2i/errors.hpp"
#include "n2i/rng.hpp"

namespace n2i {

void UNetConfig::validate() const {
  if (depth < 1) throw ConfigError("unet: depth must be >= 1");
  if (base_channels < 1) throw ConfigError("unet: base_channels must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("unet: kernel must be odd");
  if (in_channels != 1 && in_channels != 3)
    throw ConfigError("unet: in_channels must be 1 or 3");
  if (batch_norm)
    throw ConfigError("unet: batch_norm is a documented config extension and is "
                      "not implemented in this build");
}

Tensor& NetParams::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw CheckpointError("missing tensor: " + name);
  return tensors[static_cast<size_t>(it->second)].t;
}

const Tensor& NetParams::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw CheckpointError("missing tensor: " + name);
  return tensors[static_cast<size_t>(it->second)].t;
}

void NetParams::add(std::string name, Tensor t) {
  if (has(name)) throw CheckpointError("duplicate tensor: " + name);
  index_.emplace(name, static_cast<int>(tensors.size()));
  tensors.push_back({std::move(name), std::move(t)});
}

size_t NetParams::total_scalars() const {
  size_t n = 0;
  for (const auto& nt : tensors) n += nt.t.size();
  return n;
}

double NetParams::mu() const { return std::exp(at("mu_log").v[0]); }

void NetParams::set_mu_log(double value) { at("mu_log").v[0] = value; }

std::vector<ConvSpec> conv_plan(const UNetConfig& cfg) {
  cfg.validate();
  std::vector<ConvSpec> plan;
  int c = cfg.base_channels;
  for (int level = 0; level < cfg.depth; ++level) {
    int ch = c << level;
    int in = level == 0 ? cfg.in_channels : (c << (level - 1));
    plan.push_back({"enc" + std::to_string(level) + ".conv1", in, ch, cfg.kernel, true});
    plan.push_back({"enc" + std::to_string(level) + ".conv2", ch, ch, cfg.kernel, true});
  }
  int mid = c << cfg.depth;
  plan.push_back({"mid.conv1", c << (cfg.depth - 1), mid, cfg.kernel, true});
  plan.push_back({"mid.conv2", mid, mid, cfg.kernel, true});
  for (int level = cfg.depth - 1; level >= 0; --level) {
    int ch = c << level;
    plan.push_back({"dec" + std::to_string(level) + ".up", ch * 2, ch, cfg.kernel, true});
    plan.push_back({"dec" + std::to_string(level) + ".conv1", ch * 2, ch, cfg.kernel, true});
    plan.push_back({"dec" + std::to_string(level) + ".conv2", ch, ch, cfg.kernel, true});
  }
  plan.push_back({"out", c, cfg.in_channels, 1, false});
  return plan;
}

size_t unet_param_count(const UNetConfig& cfg) {
  size_t n = 0;
  for (const auto& spec : conv_plan(cfg)) {
    n += static_cast<size_t>(spec.out_ch) * spec.in_ch * spec.kernel * spec.kernel;
    n += static_cast<size_t>(spec.out_ch);
  }
  return n;
}

NetParams init_params(const UNetConfig& cfg, uint64_t seed, bool with_mu,
                      double mu_init) {
  NetParams params;
  params.config = cfg;
  Rng rng(derive_seed(seed, "init"));
  for (const auto& spec : conv_plan(cfg)) {
    double fan_in = static_cast<double>(spec.in_ch) * spec.kernel * spec.kernel;
    Tensor w({spec.out_ch, spec.in_ch, spec.kernel, spec.kernel});
    double bound = std::sqrt(6.0 / fan_in);
    for (double& v : w.v) v = rng.uniform(-bound, bound);
    params.add(spec.name + ".w", std::move(w));
    // fan-in-scaled bias init; exactly-zero biases make ReLU pre-activations
    // sit exactly on the kink wherever an input window is all zero
    Tensor b({spec.out_ch});
    double bbound = 1.0 / std::sqrt(fan_in);
    for (double& v : b.v) v = rng.uniform(-bbound, bbound);
    params.add(spec.name + ".b", std::move(b));
  }
  if (with_mu) {
    if (!(mu_init > 0.0)) throw ConfigError("mu_init must be > 0");
    params.add("mu_log", Tensor::scalar(std::log(mu_init)));
  }
  return params;
}

NetParams zero_like(const NetParams& params) {
  NetParams out;
  out.config = params.config;
  for (const auto& nt : params.tensors) out.add(nt.name, Tensor(nt.t.shape));
  return out;
}

UNetConfig config_from_tensors(const std::vector<NamedTensor>& tensors) {
  UNetConfig cfg;
  cfg.depth = 0;
  const Tensor* enc0 = nullptr;
  for (const auto& nt : tensors) {
    if (nt.name == "enc0.conv1.w") enc0 = &nt.t;
    if (nt.name.rfind("enc", 0) == 0 && nt.name.find(".conv1.w") != std::string::npos) {
      int level = std::stoi(nt.name.substr(3, nt.name.find('.') - 3));
      cfg.depth = std::max(cfg.depth, level + 1);
    }
  }
  if (!enc0 || enc0->shape.size() != 4)
    throw CheckpointError("checkpoint does not describe a known architecture");
  cfg.base_channels = enc0->dim(0);
  cfg.in_channels = enc0->dim(1);
  cfg.kernel = enc0->dim(2);
  cfg.validate();
  return cfg;
}

namespace {

int pad_to_multiple(int n, int m) { return (n + m - 1) / m * m; }

int reflect_index(int i, int n) { return i < n ? i : 2 * n - 2 - i; }

Tensor crop(const Tensor& x, int h, int w) {
  if (x.height() == h && x.width() == w) return x;
  Tensor out({x.channels(), h, w});
  for (int c = 0; c < x.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) out.at3(c, y, xx) = x.at3(c, y, xx);
  return out;
}

Tensor crop_backward(const Tensor& dout, int h, int w) {
  if (dout.height() == h && dout.width() == w) return dout;
  Tensor dx({dout.channels(), h, w});
  for (int c = 0; c < dout.channels(); ++c)
    for (int y = 0; y < dout.height(); ++y)
      for (int xx = 0; xx < dout.width(); ++xx) dx.at3(c, y, xx) = dout.at3(c, y, xx);
  return dx;
}

}  // namespace

namespace layers {

Tensor reflect_pad(const Tensor& x, int ph, int pw) {
  int c = x.channels(), h = x.height(), w = x.width();
  if (ph > h - 1 || pw > w - 1)
    throw DimensionError("unet: image too small for network depth");
  Tensor out({c, h + ph, w + pw});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h + ph; ++y)
      for (int xx = 0; xx < w + pw; ++xx)
        out.at3(ch, y, xx) = x.at3(ch, reflect_index(y, h), reflect_index(xx, w));
  return out;
}

Tensor reflect_pad_backward(const Tensor& dout, int orig_h, int orig_w) {
  int c = dout.channels();
  Tensor dx({c, orig_h, orig_w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < dout.height(); ++y)
      for (int xx = 0; xx < dout.width(); ++xx)
        dx.at3(ch, reflect_index(y, orig_h), reflect_index(xx, orig_w)) +=
            dout.at3(ch, y, xx);
  return dx;
}

Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  int ic = w.dim(1), oc = w.dim(0), k = w.dim(2);
  int h = x.height(), wd = x.width();
  int pad = k / 2;
  Tensor out({oc, h, wd});
  for (int o = 0; o < oc; ++o) {
    double* op = out.plane(o);
    std::fill(op, op + static_cast<size_t>(h) * wd, b.v[static_cast<size_t>(o)]);
    for (int i = 0; i < ic; ++i) {
      const double* xp = x.plane(i);
      for (int ky = 0; ky < k; ++ky) {
        int sy = ky - pad;
        for (int kx = 0; kx < k; ++kx) {
          int sx = kx - pad;
          double wv = w.v[((static_cast<size_t>(o) * ic + i) * k + ky) * k + kx];
          int ylo = std::max(0, -sy), yhi = std::min(h, h - sy);
          int xlo = std::max(0, -sx), xhi = std::min(wd, wd - sx);
          for (int y = ylo; y < yhi; ++y) {
            const double* xrow = xp + static_cast<size_t>(y + sy) * wd + sx;
            double* orow = op + static_cast<size_t>(y) * wd;
            for (int xx = xlo; xx < xhi; ++xx) orow[xx] += wv * xrow[xx];
          }
        }
      }
    }
  }
  return out;
}

// dx returned; dw/db accumulated.
Tensor conv_backward(const Tensor& x, const Tensor& w, const Tensor& dout,
                     Tensor& dw, Tensor& db) {
  int ic = w.dim(1), oc = w.dim(0), k = w.dim(2);
  int h = x.height(), wd = x.width();
  int pad = k / 2;
  Tensor dx(x.shape);
  for (int o = 0; o < oc; ++o) {
    const double* dop = dout.plane(o);
    double dbv = 0.0;
    for (size_t i = 0; i < static_cast<size_t>(h) * wd; ++i) dbv += dop[i];
    db.v[static_cast<size_t>(o)] += dbv;
    for (int i = 0; i < ic; ++i) {
      const double* xp = x.plane(i);
      double* dxp = dx.plane(i);
      for (int ky = 0; ky < k; ++ky) {
        int sy = ky - pad;
        for (int kx = 0; kx < k; ++kx) {
          int sx = kx - pad;
          size_t widx = ((static_cast<size_t>(o) * ic + i) * k + ky) * k + kx;
          double wv = w.v[widx];
          double dwv = 0.0;
          int ylo = std::max(0, -sy), yhi = std::min(h, h - sy);
          int xlo = std::max(0, -sx), xhi = std::min(wd, wd - sx);
          for (int y = ylo; y < yhi; ++y) {
            const double* xrow = xp + static_cast<size_t>(y + sy) * wd + sx;
            double* dxrow = dxp + static_cast<size_t>(y + sy) * wd + sx;
            const double* dorow = dop + static_cast<size_t>(y) * wd;
            for (int xx = xlo; xx < xhi; ++xx) {
              dwv += dorow[xx] * xrow[xx];
              dxrow[xx] += wv * dorow[xx];
            }
          }
          dw.v[widx] += dwv;
        }
      }
    }
  }
  return dx;
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.v)
    if (v < 0.0) v = 0.0;
  return out;
}

Tensor relu_backward(const Tensor& preact, const Tensor& dout) {
  Tensor dx = dout;
  for (size_t i = 0; i < dx.v.size(); ++i)
    if (preact.v[i] <= 0.0) dx.v[i] = 0.0;
  return dx;
}

Tensor maxpool2(const Tensor& x, std::vector<int32_t>& argmax) {
  int c = x.channels(), h = x.height(), w = x.width();
  if (h % 2 != 0 || w % 2 != 0) throw DimensionError("maxpool: odd input");
  Tensor out({c, h / 2, w / 2});
  argmax.assign(out.size(), 0);
  size_t oi = 0;
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; y += 2)
      for (int xx = 0; xx < w; xx += 2) {
        int32_t best = -1;
        double bv = -std::numeric_limits<double>::infinity();
        for (int dy = 0; dy < 2; ++dy)
          for (int dx2 = 0; dx2 < 2; ++dx2) {
            int32_t idx = static_cast<int32_t>(
                (static_cast<size_t>(ch) * h + (y + dy)) * w + (xx + dx2));
            double v = x.v[static_cast<size_t>(idx)];
            if (v > bv) {
              bv = v;
              best = idx;
            }
          }
        out.v[oi] = bv;
        argmax[oi] = best;
        ++oi;
      }
  return out;
}

Tensor maxpool2_backward(const std::vector<int32_t>& argmax,
                         const std::vector<int>& in_shape, const Tensor& dout) {
  Tensor dx(in_shape);
  for (size_t i = 0; i < dout.v.size(); ++i)
    dx.v[static_cast<size_t>(argmax[i])] += dout.v[i];
  return dx;
}

Tensor upsample2(const Tensor& x) {
  int c = x.channels(), h = x.height(), w = x.width();
  Tensor out({c, h * 2, w * 2});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h * 2; ++y)
      for (int xx = 0; xx < w * 2; ++xx)
        out.at3(ch, y, xx) = x.at3(ch, y / 2, xx / 2);
  return out;
}

Tensor upsample2_backward(const Tensor& dout) {
  int c = dout.channels(), h = dout.height() / 2, w = dout.width() / 2;
  Tensor dx({c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < dout.height(); ++y)
      for (int xx = 0; xx < dout.width(); ++xx)
        dx.at3(ch, y / 2, xx / 2) += dout.at3(ch, y, xx);
  return dx;
}

// skip first, upsampled path second
Tensor concat_channels(const Tensor& a, const Tensor& b) {
  Tensor out({a.channels() + b.channels(), a.height(), a.width()});
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + static_cast<long>(a.size()));
  return out;
}

}  // namespace layers

using namespace layers;

Tensor unet_forward(const Tensor& x, const NetParams& params, UNetActs* acts) {
  const UNetConfig& cfg = params.config;
  cfg.validate();
  if (x.shape.size() != 3 || x.channels() != cfg.in_channels)
    throw DimensionError("unet: input channel count mismatch");

  UNetActs local;
  UNetActs& a = acts ? *acts : local;
  a.conv_in.clear();
  a.preact.clear();
  a.pool_argmax.clear();
  a.orig_h = x.height();
  a.orig_w = x.width();

  int mult = 1 << cfg.depth;
  int ph = pad_to_multiple(x.height(), mult) - x.height();
  int pw = pad_to_multiple(x.width(), mult) - x.width();
  Tensor h = (ph || pw) ? reflect_pad(x, ph, pw) : x;

  std::vector<ConvSpec> plan = conv_plan(cfg);
  size_t ci = 0;
  auto conv_block = [&](Tensor input) {
    const ConvSpec& spec = plan[ci];
    const Tensor& w = params.at(spec.name + ".w");
    const Tensor& b = params.at(spec.name + ".b");
    Tensor pre = conv_forward(input, w, b);
    a.conv_in.push_back(std::move(input));
    Tensor out = spec.relu ? relu(pre) : pre;
    if (spec.relu) a.preact.push_back(std::move(pre));
    ++ci;
    return out;
  };

  std::vector<Tensor> skips;
  for (int level = 0; level < cfg.depth; ++level) {
    h = conv_block(std::move(h));
    h = conv_block(std::move(h));
    skips.push_back(h);
    std::vector<int32_t> argmax;
    Tensor pooled = maxpool2(h, argmax);
    a.pool_argmax.push_back(std::move(argmax));
    h = std::move(pooled);
  }
  h = conv_block(std::move(h));
  h = conv_block(std::move(h));
  for (int level = cfg.depth - 1; level >= 0; --level) {
    h = upsample2(h);
    h = conv_block(std::move(h));
    h = concat_channels(skips[static_cast<size_t>(level)], h);
    h = conv_block(std::move(h));
    h = conv_block(std::move(h));
  }
  h = conv_block(std::move(h));  // linear 1x1 head
  return crop(h, a.orig_h, a.orig_w);
}

Tensor unet_backward(const NetParams& params, const UNetActs& acts,
                     const Tensor& upstream, NetParams& grads) {
  const UNetConfig& cfg = params.config;
  std::vector<ConvSpec> plan = conv_plan(cfg);
  int n_convs = static_cast<int>(plan.size());

  int mult = 1 << cfg.depth;
  int padded_h = pad_to_multiple(acts.orig_h, mult);
  int padded_w = pad_to_multiple(acts.orig_w, mult);
  if (upstream.height() != acts.orig_h || upstream.width() != acts.orig_w ||
      upstream.channels() != cfg.in_channels)
    throw DimensionError("unet backward: upstream shape mismatch");

  int ci = n_convs - 1;   // conv cursor, walking backward
  int ri = static_cast<int>(acts.preact.size()) - 1;  // relu cursor
  auto conv_block_backward = [&](const Tensor& dout) {
    const ConvSpec& spec = plan[static_cast<size_t>(ci)];
    Tensor d = dout;
    if (spec.relu) {
      d = relu_backward(acts.preact[static_cast<size_t>(ri)], d);
      --ri;
    }
    Tensor dx = conv_backward(acts.conv_in[static_cast<size_t>(ci)],
                              params.at(spec.name + ".w"), d,
                              grads.at(spec.name + ".w"), grads.at(spec.name + ".b"));
    --ci;
    return dx;
  };

  Tensor d = crop_backward(upstream, padded_h, padded_w);
  d = conv_block_backward(d);  // output head

  // decoder levels, reverse of forward traversal (level 0 first)
  std::vector<Tensor> d_skip(static_cast<size_t>(cfg.depth));
  for (int level = 0; level < cfg.depth; ++level) {
    d = conv_block_backward(d);  // dec.conv2
    d = conv_block_backward(d);  // dec.conv1
    int skip_ch = cfg.base_channels << level;
    // split concat: skip part first, upsampled path second
    Tensor ds({skip_ch, d.height(), d.width()});
    Tensor du({d.channels() - skip_ch, d.height(), d.width()});
    std::copy(d.v.begin(), d.v.begin() + static_cast<long>(ds.size()), ds.v.begin());
    std::copy(d.v.begin() + static_cast<long>(ds.size()), d.v.end(), du.v.begin());
    d_skip[static_cast<size_t>(level)] = std::move(ds);
    d = conv_block_backward(du);  // dec.up
    d = upsample2_backward(d);
  }

  d = conv_block_backward(d);  // mid.conv2
  d = conv_block_backward(d);  // mid.conv1

  for (int level = cfg.depth - 1; level >= 0; --level) {
    int lh = padded_h >> level, lw = padded_w >> level;
    int ch = cfg.base_channels << level;
    Tensor dpool = maxpool2_backward(acts.pool_argmax[static_cast<size_t>(level)],
                                     {ch, lh, lw}, d);
    axpy(1.0, d_skip[static_cast<size_t>(level)], dpool);
    d = conv_block_backward(dpool);  // enc.conv2
    d = conv_block_backward(d);      // enc.conv1
  }

  if (padded_h != acts.orig_h || padded_w != acts.orig_w)
    d = reflect_pad_backward(d, acts.orig_h, acts.orig_w);
  return d;
}

}  // namespace n2i
