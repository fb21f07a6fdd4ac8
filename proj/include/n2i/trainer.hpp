#pragma once

#include <optional>
#include <string>
#include <vector>

#include "n2i/adam.hpp"
#include "n2i/image.hpp"
#include "n2i/mask.hpp"
#include "n2i/noise.hpp"
#include "n2i/unet.hpp"
#include "n2i/unroll.hpp"

namespace n2i {

enum class TrainMode { n2t, n2n, n2s, n2i };

TrainMode train_mode_from_string(const std::string& s);
std::string to_string(TrainMode mode);

struct TrainConfig {
  TrainMode mode = TrainMode::n2i;
  int epochs = 100;
  int batch_size = 8;
  double learning_rate = 1e-5;
  double density = 1.0 / 25.0;  // mask density for n2s/n2i
  MaskMode mask_mode = MaskMode::stratified;
  NoiseSpec noise;                    // kind none: dataset is already noisy
  std::optional<NoiseSpec> noise2;    // n2n pair; defaults to `noise` on an
                                      // independent seed stream
  uint64_t seed = 1;
  int checkpoint_every = 0;           // epochs; 0 = no periodic checkpoints
  std::string checkpoint_dir;
  double mu_init = 0.05;
  UNetConfig net;
  UnrollConfig unroll;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;       // 1-based
  double loss = 0.0;   // mean per-image loss (masked or full, mode-dependent)
  double psnr = 0.0;   // validation PSNR vs clean refs; NaN when unavailable
  double mu = 0.0;     // NaN for baseline modes
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

// "epoch loss psnr mu seconds" rows; the seconds column is the only
// non-deterministic field.
std::string format_train_log(const TrainLog& log);

struct TrainResult {
  NetParams params;
  TrainLog log;
};

// Seed derivation: corruption of image i uses (seed, "noise", i) — fixed
// across epochs, so each image has one noisy realization, as when training
// on a noisy dataset on disk. Masks use (seed, "mask", epoch, i) and are
// resampled every epoch. Weight init uses (seed, "init").
TrainResult train(const Dataset& dataset, const TrainConfig& config);

size_t trainable_param_count(const TrainConfig& config);

// Inference: single network pass for baseline parameter sets, full-image
// unrolling for parameter sets that carry mu (colored data fidelity when a
// covariance is supplied).
Tensor denoise_tensor(const NetParams& params, const Tensor& y_norm,
                      const UnrollConfig& ucfg,
                      const ColoredCovariance* cov = nullptr);
Image denoise_image(const NetParams& params, const Image& noisy,
                    const UnrollConfig& ucfg,
                    const ColoredCovariance* cov = nullptr);

}  // namespace n2i
