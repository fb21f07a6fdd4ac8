#include "n2i/image.hpp"

#include <cmath>

#include "n2i/errors.hpp"

namespace n2i {

Image Image::zeros(int h, int w, int c, double peak) {
  Image img;
  img.height = h;
  img.width = w;
  img.channels = c;
  img.peak = peak;
  img.data.assign(static_cast<size_t>(h) * w * c, 0.0);
  img.validate();
  return img;
}

Image Image::constant(int h, int w, int c, double peak, double value) {
  Image img = zeros(h, w, c, peak);
  std::fill(img.data.begin(), img.data.end(), value);
  return img;
}

void Image::validate() const {
  if (height <= 0 || width <= 0 || (channels != 1 && channels != 3))
    throw DimensionError("image dimensions invalid");
  if (data.size() != static_cast<size_t>(height) * width * channels)
    throw DimensionError("image data length does not match dimensions");
  if (!(peak > 0.0)) throw DimensionError("image peak must be positive");
  for (double v : data)
    if (!std::isfinite(v)) throw NumericError("image contains non-finite intensity");
}

double psnr(const Image& reference, const Image& test) {
  if (!reference.same_shape(test))
    throw DimensionError("psnr: image shapes differ");
  if (reference.peak != test.peak)
    throw DimensionError("psnr: image peaks differ");
  double se = 0.0;
  for (size_t i = 0; i < reference.data.size(); ++i) {
    double d = reference.data[i] - test.data[i];
    se += d * d;
  }
  double mse = se / static_cast<double>(reference.data.size());
  if (mse == 0.0) return kPsnrCap;
  return 10.0 * std::log10(reference.peak * reference.peak / mse);
}

Image rot90(const Image& image) {
  // counter-clockwise: (y, x) -> (H-1-x, y) of the source seen from the output
  Image out = Image::zeros(image.width, image.height, image.channels, image.peak);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < out.channels; ++c)
        out.at(y, x, c) = image.at(x, image.width - 1 - y, c);
  return out;
}

Image mirror_lr(const Image& image) {
  Image out = image;
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < out.channels; ++c)
        out.at(y, x, c) = image.at(y, image.width - 1 - x, c);
  return out;
}

std::vector<Image> augment_eightfold(const Image& image) {
  std::vector<Image> out;
  out.reserve(8);
  Image cur = image;
  for (int r = 0; r < 4; ++r) {
    out.push_back(cur);
    if (r < 3) cur = rot90(cur);
  }
  cur = mirror_lr(image);
  for (int r = 0; r < 4; ++r) {
    out.push_back(cur);
    if (r < 3) cur = rot90(cur);
  }
  return out;
}

std::vector<Image> extract_patches(const Image& image, int size, int stride) {
  if (size <= 0 || stride <= 0)
    throw DimensionError("extract_patches: size and stride must be positive");
  if (size > image.height || size > image.width)
    throw DimensionError("extract_patches: patch larger than image");
  std::vector<Image> patches;
  for (int y = 0; y + size <= image.height; y += stride) {
    for (int x = 0; x + size <= image.width; x += stride) {
      Image p = Image::zeros(size, size, image.channels, image.peak);
      for (int py = 0; py < size; ++py)
        for (int px = 0; px < size; ++px)
          for (int c = 0; c < image.channels; ++c)
            p.at(py, px, c) = image.at(y + py, x + px, c);
      patches.push_back(std::move(p));
    }
  }
  return patches;
}

Tensor to_chw(const Image& image) {
  Tensor t({image.channels, image.height, image.width});
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        t.at3(c, y, x) = image.at(y, x, c);
  return t;
}

Image from_chw(const Tensor& t, double peak) {
  Image img = Image::zeros(t.height(), t.width(), t.channels(), peak);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        img.at(y, x, c) = t.at3(c, y, x);
  return img;
}

}  // namespace n2i
