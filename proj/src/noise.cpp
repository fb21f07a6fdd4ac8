#include "n2i/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "n2i/dct.hpp"
#include "n2i/errors.hpp"
#include "n2i/rng.hpp"

namespace n2i {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::blind_gaussian: return "blind_gaussian";
    case NoiseKind::bernoulli: return "bernoulli";
    case NoiseKind::poisson: return "poisson";
    case NoiseKind::mixture: return "mixture";
    case NoiseKind::colored: return "colored";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "none") return NoiseKind::none;
  if (s == "gaussian") return NoiseKind::gaussian;
  if (s == "blind_gaussian") return NoiseKind::blind_gaussian;
  if (s == "bernoulli") return NoiseKind::bernoulli;
  if (s == "poisson") return NoiseKind::poisson;
  if (s == "mixture") return NoiseKind::mixture;
  if (s == "colored") return NoiseKind::colored;
  throw ConfigError("unknown noise kind: " + s);
}

void NoiseSpec::validate() const {
  switch (kind) {
    case NoiseKind::none:
      break;
    case NoiseKind::gaussian:
      if (sigma < 0.0) throw ConfigError("gaussian: sigma must be >= 0");
      break;
    case NoiseKind::blind_gaussian:
      if (sigma_min < 0.0 || sigma_max < sigma_min)
        throw ConfigError("blind_gaussian: need 0 <= sigma_min <= sigma_max");
      break;
    case NoiseKind::bernoulli:
      if (p < 0.0 || p > 1.0) throw ConfigError("bernoulli: p must be in [0,1]");
      break;
    case NoiseKind::poisson:
      if (!(lambda > 0.0)) throw ConfigError("poisson: lambda must be > 0");
      break;
    case NoiseKind::mixture:
      if (components.empty()) throw ConfigError("mixture: no components");
      for (const auto& c : components) {
        if (c.kind == NoiseKind::mixture)
          throw ConfigError("mixture: nested mixtures are not supported");
        c.validate();
      }
      break;
    case NoiseKind::colored:
      if (band_lo < 0 || band_hi <= band_lo)
        throw ConfigError("colored: need 0 <= band_lo < band_hi");
      if (!(energy > 0.0)) throw ConfigError("colored: energy must be > 0");
      break;
  }
}

ColoredCovariance ColoredCovariance::band_pass(int h, int w, int band_lo,
                                               int band_hi,
                                               double energy_per_pixel) {
  if (band_lo < 0 || band_hi <= band_lo)
    throw ConfigError("colored: need 0 <= band_lo < band_hi");
  if (band_hi > h || band_hi > w)
    throw ConfigError("colored: passband exceeds transform size");
  if (!(energy_per_pixel > 0.0)) throw ConfigError("colored: energy must be > 0");

  ColoredCovariance cov;
  cov.height = h;
  cov.width = w;
  cov.variance.assign(static_cast<size_t>(h) * w, 0.0);
  size_t npass = 0;
  for (int i = band_lo; i < band_hi; ++i)
    for (int j = band_lo; j < band_hi; ++j) {
      if (i == 0 && j == 0) continue;  // DC stays noise-free
      cov.variance[static_cast<size_t>(i) * w + j] = 1.0;
      ++npass;
    }
  if (npass == 0) throw ConfigError("colored: empty passband");
  // E||n||^2 = sum of passband variances; fix per-pixel energy.
  double var = energy_per_pixel * static_cast<double>(h) * w / static_cast<double>(npass);
  for (double& v : cov.variance)
    if (v > 0.0) v = var;
  cov.floor_eps = 1e-3 * var;
  cov.validate();
  return cov;
}

ColoredCovariance ColoredCovariance::from_variances(int h, int w,
                                                    std::vector<double> variance) {
  ColoredCovariance cov;
  cov.height = h;
  cov.width = w;
  cov.variance = std::move(variance);
  double vmax = 0.0;
  for (double v : cov.variance) vmax = std::max(vmax, v);
  if (!(vmax > 0.0)) throw ConfigError("colored: empty passband");
  cov.floor_eps = 1e-3 * vmax;
  cov.validate();
  return cov;
}

size_t ColoredCovariance::passband_size() const {
  size_t n = 0;
  for (double v : variance)
    if (v > 0.0) ++n;
  return n;
}

void ColoredCovariance::validate() const {
  if (height <= 0 || width <= 0 ||
      variance.size() != static_cast<size_t>(height) * width)
    throw DimensionError("colored covariance: bad shape");
  if (!(floor_eps > 0.0)) throw ConfigError("colored covariance: floor must be > 0");
  for (double v : variance)
    if (v < 0.0 || !std::isfinite(v))
      throw ConfigError("colored covariance: variance must be finite and >= 0");
}

std::vector<double> sample_colored(const ColoredCovariance& cov, uint64_t seed) {
  cov.validate();
  if (cov.passband_size() == 0) throw ConfigError("colored: empty passband");
  Rng rng(seed);
  std::vector<double> coef(cov.variance.size(), 0.0);
  for (size_t i = 0; i < coef.size(); ++i)
    if (cov.variance[i] > 0.0)
      coef[i] = std::sqrt(cov.variance[i]) * rng.gaussian();
  return idct2(cov.height, cov.width, coef);
}

std::vector<double> apply_covariance(const ColoredCovariance& cov,
                                     const std::vector<double>& v) {
  if (v.size() != cov.variance.size())
    throw DimensionError("apply_covariance: size mismatch");
  std::vector<double> coef = dct2(cov.height, cov.width, v);
  for (size_t i = 0; i < coef.size(); ++i) coef[i] *= cov.variance[i];
  return idct2(cov.height, cov.width, coef);
}

std::vector<double> apply_inverse_covariance(const ColoredCovariance& cov,
                                             const std::vector<double>& v) {
  if (v.size() != cov.variance.size())
    throw DimensionError("apply_inverse_covariance: size mismatch");
  std::vector<double> coef = dct2(cov.height, cov.width, v);
  for (size_t i = 0; i < coef.size(); ++i)
    coef[i] /= std::max(cov.variance[i], cov.floor_eps);
  return idct2(cov.height, cov.width, coef);
}

namespace {

void add_gaussian(Image& img, double sigma, uint64_t seed) {
  Rng rng(seed);
  for (double& v : img.data) v += sigma * rng.gaussian();
}

void apply_bernoulli(Image& img, double p, uint64_t seed) {
  Rng rng(seed);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (rng.bernoulli(p))  // whole pixel blacks out, all channels
        for (int c = 0; c < img.channels; ++c) img.at(y, x, c) = 0.0;
}

void apply_poisson(Image& img, double lambda, uint64_t seed) {
  Rng rng(seed);
  for (double& v : img.data) {
    double rate = lambda * std::max(v, 0.0) / img.peak;
    v = img.peak * static_cast<double>(rng.poisson(rate)) / lambda;
  }
}

void add_colored(Image& img, const NoiseSpec& spec, uint64_t seed) {
  if (spec.band_hi > img.height || spec.band_hi > img.width)
    throw ConfigError("colored: passband exceeds image size");
  ColoredCovariance cov = ColoredCovariance::band_pass(
      img.height, img.width, spec.band_lo, spec.band_hi, spec.energy);
  for (int c = 0; c < img.channels; ++c) {
    std::vector<double> n = sample_colored(cov, derive_seed(seed, "colored-chan", c));
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        img.at(y, x, c) += n[static_cast<size_t>(y) * img.width + x];
  }
}

void apply_stage(Image& img, const NoiseSpec& spec, uint64_t seed,
                 CorruptInfo* info) {
  switch (spec.kind) {
    case NoiseKind::none:
      break;
    case NoiseKind::gaussian:
      if (info) info->drawn_sigma = spec.sigma;
      add_gaussian(img, spec.sigma, derive_seed(seed, "gaussian"));
      break;
    case NoiseKind::blind_gaussian: {
      Rng draw(derive_seed(seed, "blind-sigma"));
      double sigma = draw.uniform(spec.sigma_min, spec.sigma_max);
      if (info) info->drawn_sigma = sigma;
      add_gaussian(img, sigma, derive_seed(seed, "blind-noise"));
      break;
    }
    case NoiseKind::bernoulli:
      apply_bernoulli(img, spec.p, derive_seed(seed, "bernoulli"));
      break;
    case NoiseKind::poisson:
      apply_poisson(img, spec.lambda, derive_seed(seed, "poisson"));
      break;
    case NoiseKind::colored:
      add_colored(img, spec, derive_seed(seed, "colored"));
      break;
    case NoiseKind::mixture:
      for (size_t i = 0; i < spec.components.size(); ++i)
        apply_stage(img, spec.components[i], derive_seed(seed, "mixture", i), info);
      break;
  }
}

}  // namespace

Image corrupt(const Image& image, const NoiseSpec& spec, CorruptInfo* info) {
  image.validate();
  spec.validate();
  if (info) info->drawn_sigma = kNan;
  Image out = image;
  apply_stage(out, spec, spec.seed, info);
  return out;
}

Image corrupt(const Image& image, const NoiseSpec& spec) {
  return corrupt(image, spec, nullptr);
}

}  // namespace n2i
