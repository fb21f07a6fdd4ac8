#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "n2i/image.hpp"

namespace n2i {

enum class NoiseKind {
  none,  // identity; marks datasets that are already noisy
  gaussian,
  blind_gaussian,
  bernoulli,
  poisson,
  mixture,
  colored,
};

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& s);

// Tagged description of a corruption process. All parameters are in the
// image's intensity units (sigma = 25 on a peak-255 image, sigma = 0.1 on a
// peak-1 image).
struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double sigma = 25.0;                  // gaussian
  double sigma_min = 0.0;               // blind_gaussian
  double sigma_max = 50.0;
  double p = 0.5;                       // bernoulli blackout probability
  double lambda = 30.0;                 // multiplicative poisson
  int band_lo = 0;                      // colored: DCT passband [lo, hi)^2
  int band_hi = 0;
  double energy = 100.0;                // colored: expected energy per pixel
  std::vector<NoiseSpec> components;    // mixture, applied in listed order
  uint64_t seed = 0;

  void validate() const;
};

// Diagonal covariance in the orthonormal 2D DCT basis. The passband is the
// square of coefficient indices [band_lo, band_hi) x [band_lo, band_hi) with
// the DC coefficient excluded; variance is zero exactly on the stop-band.
// floor_eps regularizes the inverse (an ideal band-pass K is singular).
struct ColoredCovariance {
  int height = 0;
  int width = 0;
  std::vector<double> variance;  // per DCT coefficient, row-major h x w
  double floor_eps = 0.0;

  // Flat passband scaled so E[ |noise|^2 ] / (H*W) = energy_per_pixel.
  static ColoredCovariance band_pass(int h, int w, int band_lo, int band_hi,
                                     double energy_per_pixel);
  // Arbitrary variance profile; floor_eps = 1e-3 * max(variance).
  static ColoredCovariance from_variances(int h, int w, std::vector<double> variance);

  size_t passband_size() const;
  void validate() const;
};

struct CorruptInfo {
  double drawn_sigma;  // NaN unless a (blind) gaussian stage ran
};

// Applies the corruption process. Deterministic given (image, spec.seed);
// every stage derives its own stream from the spec seed.
Image corrupt(const Image& image, const NoiseSpec& spec);
Image corrupt(const Image& image, const NoiseSpec& spec, CorruptInfo* info);

// One colored-noise sample: i.i.d. standard normals in DCT space, stop-band
// zeroed, passband scaled per the covariance, transformed back.
std::vector<double> sample_colored(const ColoredCovariance& cov, uint64_t seed);

// K v = idct2( variance ⊙ dct2(v) ) and the floored inverse, which uses
// 1 / max(variance, floor_eps) per coefficient.
std::vector<double> apply_covariance(const ColoredCovariance& cov,
                                     const std::vector<double>& v);
std::vector<double> apply_inverse_covariance(const ColoredCovariance& cov,
                                             const std::vector<double>& v);

}  // namespace n2i
