#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace n2i {

// SplitMix64 (constants from Steele/Lea/Vigna's public-domain reference).
// Every random draw in the toolkit comes from streams of this generator, so
// any run is reproducible from the seeds recorded in configs, manifests and
// logs. Sampler algorithms are fixed here as well: Box-Muller for normals,
// inversion for Bernoulli, Knuth product / Hormann PTRS for Poisson.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) by rejection.
  uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t u;
    do {
      u = next_u64();
    } while (u >= limit);
    return u % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    constexpr double two_pi = 6.283185307179586476925286766559;
    double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(two_pi * u2);
    have_cached_ = true;
    return r * std::cos(two_pi * u2);
  }

  // Poisson(rate). Knuth product method for small rates, PTRS (Hormann 1993,
  // transformed rejection) above it.
  long poisson(double rate) {
    if (rate <= 0.0) return 0;
    if (rate < 30.0) {
      double limit = std::exp(-rate);
      long k = 0;
      double prod = uniform();
      while (prod > limit) {
        ++k;
        prod *= uniform();
      }
      return k;
    }
    double b = 0.931 + 2.53 * std::sqrt(rate);
    double a = -0.059 + 0.02483 * b;
    double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      double u = uniform() - 0.5;
      double v = uniform();
      double us = 0.5 - std::fabs(u);
      double k = std::floor((2.0 * a / us + b) * u + rate + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<long>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          k * std::log(rate) - rate - std::lgamma(k + 1.0)) {
        return static_cast<long>(k);
      }
    }
  }

 private:
  uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// Derives an independent stream seed from (seed, purpose tag, indices).
// FNV-1a over the tag and operands, then one SplitMix64 scramble. All
// randomness in the toolkit flows from one global seed through this hook.
inline uint64_t derive_seed(uint64_t seed, std::string_view purpose,
                            uint64_t a = 0, uint64_t b = 0) {
  uint64_t h = 0xCBF29CE484222325ull;
  auto eat_byte = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001B3ull;
  };
  for (char c : purpose) eat_byte(static_cast<unsigned char>(c));
  for (uint64_t x : {a, b, seed}) {
    for (int i = 0; i < 8; ++i) eat_byte(static_cast<unsigned char>(x >> (8 * i)));
  }
  Rng mix(h);
  return mix.next_u64();
}

}  // namespace n2i
