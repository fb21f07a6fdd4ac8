#include "n2i/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "n2i/checkpoint.hpp"
#include "n2i/errors.hpp"
#include "n2i/loss.hpp"
#include "n2i/regularizer.hpp"
#include "n2i/rng.hpp"

namespace n2i {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "n2t") return TrainMode::n2t;
  if (s == "n2n") return TrainMode::n2n;
  if (s == "n2s") return TrainMode::n2s;
  if (s == "n2i") return TrainMode::n2i;
  throw ConfigError("unknown training mode: " + s);
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::n2t: return "n2t";
    case TrainMode::n2n: return "n2n";
    case TrainMode::n2s: return "n2s";
    case TrainMode::n2i: return "n2i";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (learning_rate < 0.0) throw ConfigError("train: learning_rate must be >= 0");
  if (mode == TrainMode::n2s || mode == TrainMode::n2i) {
    if (!(density > 0.0 && density < 1.0))
      throw ConfigError("train: mask density must be in (0,1) for n2s/n2i");
  }
  if ((mode == TrainMode::n2t || mode == TrainMode::n2n) &&
      noise.kind == NoiseKind::none)
    throw ConfigError("train: " + to_string(mode) +
                      " requires clean references (a noise spec to corrupt them)");
  noise.validate();
  if (noise2) noise2->validate();
  net.validate();
  unroll.validate();
  if (mode == TrainMode::n2i && !(mu_init > 0.0))
    throw ConfigError("train: mu_init must be > 0");
}

size_t trainable_param_count(const TrainConfig& config) {
  return unet_param_count(config.net) + (config.mode == TrainMode::n2i ? 1 : 0);
}

std::string format_train_log(const TrainLog& log) {
  std::string out = "epoch loss psnr mu seconds\n";
  char buf[256];
  for (const auto& r : log.epochs) {
    std::snprintf(buf, sizeof(buf), "%d %.12g %.12g %.12g %.3f\n", r.epoch, r.loss,
                  r.psnr, r.mu, r.seconds);
    out += buf;
  }
  return out;
}

Tensor denoise_tensor(const NetParams& params, const Tensor& y_norm,
                      const UnrollConfig& ucfg, const ColoredCovariance* cov) {
  if (!params.has_mu()) return unet_forward(y_norm, params);
  UnrollConfig cfg = ucfg;
  cfg.df_variant = cov ? DfVariant::colored_cg : DfVariant::full_image;
  UNetRegularizer reg(params);
  return unroll_forward(y_norm, nullptr, params.mu(), cfg, reg, nullptr, cov);
}

Image denoise_image(const NetParams& params, const Image& noisy,
                    const UnrollConfig& ucfg, const ColoredCovariance* cov) {
  Tensor y = to_chw(noisy);
  scale(y, 1.0 / noisy.peak);
  Tensor out = denoise_tensor(params, y, ucfg, cov);
  scale(out, noisy.peak);
  return from_chw(out, noisy.peak);
}

namespace {

struct Sample {
  Tensor y;                 // normalized noisy input
  Tensor target;            // normalized clean (n2t) or second noisy (n2n)
  const Image* clean;       // validation reference, may be null
  double peak;
};

double validate_psnr(const std::vector<Sample>& samples, const NetParams& params,
                     const TrainConfig& cfg) {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : samples) {
    if (!s.clean) continue;
    Tensor out = denoise_tensor(params, s.y, cfg.unroll);
    scale(out, s.peak);
    sum += psnr(*s.clean, from_chw(out, s.peak));
    ++n;
  }
  return n > 0 ? sum / n : kNan;
}

}  // namespace

TrainResult train(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.items.empty()) throw ConfigError("train: dataset is empty");
  int channels = dataset.items.front().channels;
  for (const auto& img : dataset.items) {
    img.validate();
    if (img.channels != channels)
      throw DimensionError("train: dataset mixes channel counts");
  }
  if (channels != config.net.in_channels)
    throw ConfigError("train: net.in_channels does not match dataset");

  bool synthesize = config.noise.kind != NoiseKind::none;
  bool masked_mode = config.mode == TrainMode::n2s || config.mode == TrainMode::n2i;

  // One noisy realization per image, fixed across epochs.
  std::vector<Sample> samples;
  samples.reserve(dataset.items.size());
  for (size_t i = 0; i < dataset.items.size(); ++i) {
    const Image& clean = dataset.items[i];
    Sample s;
    s.peak = clean.peak;
    Image noisy = clean;
    if (synthesize) {
      NoiseSpec spec = config.noise;
      spec.seed = derive_seed(config.seed, "noise", i);
      noisy = corrupt(clean, spec);
    }
    s.y = to_chw(noisy);
    scale(s.y, 1.0 / clean.peak);
    if (config.mode == TrainMode::n2t) {
      s.target = to_chw(clean);
      scale(s.target, 1.0 / clean.peak);
    } else if (config.mode == TrainMode::n2n) {
      NoiseSpec spec2 = config.noise2 ? *config.noise2 : config.noise;
      spec2.seed = derive_seed(config.seed, "noise2", i);
      Image pair = corrupt(clean, spec2);
      s.target = to_chw(pair);
      scale(s.target, 1.0 / clean.peak);
    }
    s.clean = synthesize ? &dataset.items[i] : nullptr;
    samples.push_back(std::move(s));
  }

  NetParams params = init_params(config.net, derive_seed(config.seed, "init"),
                                 config.mode == TrainMode::n2i, config.mu_init);
  AdamState adam = make_adam_state(params);
  UNetRegularizer reg(params);
  UnrollConfig unroll_cfg = config.unroll;
  unroll_cfg.df_variant = DfVariant::masked_quadratic;

  TrainLog log;
  size_t n = samples.size();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    double epoch_loss = 0.0;
    for (size_t start = 0; start < n; start += config.batch_size) {
      size_t stop = std::min(n, start + config.batch_size);
      double inv_batch = 1.0 / static_cast<double>(stop - start);
      NetParams grads = zero_like(params);
      for (size_t i = start; i < stop; ++i) {
        Sample& s = samples[i];
        if (masked_mode) {
          MaskPartition part = sample_mask(
              s.y.height(), s.y.width(), config.density, config.mask_mode,
              derive_seed(config.seed, "mask", static_cast<uint64_t>(epoch), i));
          if (config.mode == TrainMode::n2s) {
            UNetActs acts;
            Tensor in = fill_masked(s.y, part, config.unroll.fill,
                                    derive_seed(config.seed, "fill",
                                                static_cast<uint64_t>(epoch), i));
            Tensor out = unet_forward(in, params, &acts);
            LossResult lr = masked_loss(out, s.y, part);
            epoch_loss += lr.loss;
            scale(lr.grad, inv_batch);
            unet_backward(params, acts, lr.grad, grads);
          } else {
            double mu = params.mu();
            UnrollTrace trace;
            Tensor out = unroll_forward(s.y, &part, mu, unroll_cfg, reg, &trace);
            LossResult lr = masked_loss(out, s.y, part);
            epoch_loss += lr.loss;
            scale(lr.grad, inv_batch);
            double dmu = unroll_backward(s.y, &part, mu, unroll_cfg, reg, trace,
                                         lr.grad, grads);
            grads.at("mu_log").v[0] += dmu * mu;  // chain through mu = exp(mu_log)
          }
        } else {
          UNetActs acts;
          Tensor out = unet_forward(s.y, params, &acts);
          LossResult lr = full_loss(out, s.target);
          epoch_loss += lr.loss;
          scale(lr.grad, inv_batch);
          unet_backward(params, acts, lr.grad, grads);
        }
      }
      if (!std::isfinite(epoch_loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
      adam_step(params, grads, adam, config.learning_rate);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = epoch_loss / static_cast<double>(n);
    rec.psnr = synthesize ? validate_psnr(samples, params, config) : kNan;
    rec.mu = config.mode == TrainMode::n2i ? params.mu() : kNan;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.epochs.push_back(rec);

    if (config.checkpoint_every > 0 && !config.checkpoint_dir.empty() &&
        epoch % config.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_epoch_%04d.n2ickpt", epoch);
      save_params(std::filesystem::path(config.checkpoint_dir) / name, params);
    }
  }
  return {std::move(params), std::move(log)};
}

}  // namespace n2i
