#include "n2i/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "n2i/rng.hpp"

namespace n2i {

Image synthetic_image(int height, int width, int channels, double peak,
                      uint64_t seed) {
  Rng rng(derive_seed(seed, "synthetic"));
  Image img = Image::zeros(height, width, channels, peak);
  const double pi = 3.14159265358979323846;

  for (int c = 0; c < channels; ++c) {
    double base = rng.uniform(0.35, 0.65);
    // 2-4 low-frequency cosine waves
    int waves = 2 + static_cast<int>(rng.below(3));
    std::vector<double> fy(waves), fx(waves), phase(waves), amp(waves);
    for (int k = 0; k < waves; ++k) {
      fy[k] = rng.uniform(0.3, 2.5);
      fx[k] = rng.uniform(0.3, 2.5);
      phase[k] = rng.uniform(0.0, 2.0 * pi);
      amp[k] = rng.uniform(0.04, 0.14);
    }
    // 1-3 soft blobs
    int blobs = 1 + static_cast<int>(rng.below(3));
    std::vector<double> by(blobs), bx(blobs), br(blobs), ba(blobs);
    for (int k = 0; k < blobs; ++k) {
      by[k] = rng.uniform(0.1, 0.9) * height;
      bx[k] = rng.uniform(0.1, 0.9) * width;
      br[k] = rng.uniform(0.08, 0.25) * std::min(height, width);
      ba[k] = rng.uniform(-0.25, 0.25);
    }
    double ramp_y = rng.uniform(-0.12, 0.12);
    double ramp_x = rng.uniform(-0.12, 0.12);

    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double u = static_cast<double>(y) / height;
        double v = static_cast<double>(x) / width;
        double val = base + ramp_y * (u - 0.5) + ramp_x * (v - 0.5);
        for (int k = 0; k < waves; ++k)
          val += amp[k] * std::cos(2.0 * pi * (fy[k] * u + fx[k] * v) + phase[k]);
        for (int k = 0; k < blobs; ++k) {
          double dy = (y - by[k]) / br[k];
          double dx = (x - bx[k]) / br[k];
          val += ba[k] * std::exp(-0.5 * (dy * dy + dx * dx));
        }
        img.at(y, x, c) = std::clamp(val, 0.02, 0.98) * peak;
      }
    }
  }
  return img;
}

Dataset synthetic_corpus(int count, int height, int width, int channels,
                         double peak, uint64_t seed) {
  Dataset ds;
  ds.provenance = "synthetic";
  for (int i = 0; i < count; ++i) {
    ds.items.push_back(synthetic_image(height, width, channels, peak,
                                       derive_seed(seed, "corpus", i)));
    char name[32];
    std::snprintf(name, sizeof(name), "synthetic_%03d.pgm", i);
    ds.names.emplace_back(name);
  }
  return ds;
}

}  // namespace n2i
