#pragma once

#include <string>
#include <vector>

#include "n2i/tensor.hpp"

namespace n2i {

// H x W x C grid of real-valued intensities with a declared dynamic-range
// peak. File loaders keep raw sample values (peak = source maxval); nothing
// downstream assumes integers, so images stay exact through the pipeline.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 1;
  double peak = 255.0;
  std::vector<double> data;  // row-major H x W x C, interleaved

  static Image zeros(int h, int w, int c = 1, double peak = 255.0);
  static Image constant(int h, int w, int c, double peak, double value);

  double& at(int y, int x, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  size_t pixel_count() const {
    return static_cast<size_t>(height) * static_cast<size_t>(width);
  }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  // Throws if the struct violates its invariants (size, peak, finiteness).
  void validate() const;
};

struct Dataset {
  std::vector<Image> items;
  std::vector<std::string> names;  // parallel to items when loaded from disk
  int patch_size = 0;              // 0 = whole images
  std::string provenance;
};

inline constexpr double kPsnrCap = 300.0;  // returned when MSE is exactly 0

// 10*log10(peak^2 / MSE), MSE taken jointly over all channels.
double psnr(const Image& reference, const Image& test);

// {identity, rot90, rot180, rot270} x {plain, mirrored}, in that order with
// the mirrored block second. Rotations are counter-clockwise; mirroring
// flips left-right before rotating.
std::vector<Image> augment_eightfold(const Image& image);

Image rot90(const Image& image);
Image mirror_lr(const Image& image);

// Row-major tiling; partial tiles at the right/bottom edges are dropped.
std::vector<Image> extract_patches(const Image& image, int size, int stride);

// Raw layout conversions (no intensity scaling).
Tensor to_chw(const Image& image);
Image from_chw(const Tensor& t, double peak);

}  // namespace n2i
