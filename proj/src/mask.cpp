#include "n2i/mask.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "n2i/errors.hpp"
#include "n2i/rng.hpp"

namespace n2i {

std::vector<uint8_t> MaskPartition::indicator() const {
  std::vector<uint8_t> ind(pixel_count(), 0);
  for (int32_t j : masked) ind[static_cast<size_t>(j)] = 1;
  return ind;
}

MaskMode mask_mode_from_string(const std::string& s) {
  if (s == "uniform") return MaskMode::uniform;
  if (s == "stratified") return MaskMode::stratified;
  throw ConfigError("unknown mask mode: " + s);
}

std::string to_string(MaskMode mode) {
  return mode == MaskMode::uniform ? "uniform" : "stratified";
}

FillKind fill_kind_from_string(const std::string& s) {
  if (s == "zero") return FillKind::zero;
  if (s == "local_mean") return FillKind::local_mean;
  if (s == "random_neighbor") return FillKind::random_neighbor;
  throw ConfigError("unknown fill strategy: " + s);
}

std::string to_string(FillKind kind) {
  switch (kind) {
    case FillKind::zero: return "zero";
    case FillKind::local_mean: return "local_mean";
    case FillKind::random_neighbor: return "random_neighbor";
  }
  return "unknown";
}

MaskPartition sample_mask(int height, int width, double density, MaskMode mode,
                          uint64_t seed) {
  if (height < 2 || width < 2)
    throw DimensionError("sample_mask: shape must be at least 2x2");
  if (!(density > 0.0 && density < 1.0))
    throw ConfigError("sample_mask: density must be in (0,1)");

  MaskPartition part;
  part.height = height;
  part.width = width;
  part.density = density;
  size_t n = part.pixel_count();

  Rng rng(derive_seed(seed, "mask"));
  if (mode == MaskMode::uniform) {
    for (int attempt = 0; attempt < 1024; ++attempt) {
      part.masked.clear();
      for (size_t i = 0; i < n; ++i)
        if (rng.bernoulli(density)) part.masked.push_back(static_cast<int32_t>(i));
      if (!part.masked.empty() && part.masked.size() < n) return part;
    }
    throw NumericError("sample_mask: could not draw a proper partition");
  }

  // stratified: one masked pixel per grid cell
  int cell = static_cast<int>(std::ceil(1.0 / std::sqrt(density)));
  if (cell < 1) cell = 1;
  part.masked.clear();
  for (int cy = 0; cy < height; cy += cell) {
    int ch = std::min(cell, height - cy);
    for (int cx = 0; cx < width; cx += cell) {
      int cw = std::min(cell, width - cx);
      int pick = static_cast<int>(rng.below(static_cast<uint64_t>(ch) * cw));
      int py = cy + pick / cw;
      int px = cx + pick % cw;
      part.masked.push_back(static_cast<int32_t>(py) * width + px);
    }
  }
  std::sort(part.masked.begin(), part.masked.end());
  if (part.masked.size() >= n)
    throw NumericError("sample_mask: stratified mask left no complement");
  return part;
}

namespace {

void check_shape(const Tensor& x, const MaskPartition& p, const char* op) {
  if (x.shape.size() != 3 || x.height() != p.height || x.width() != p.width)
    throw DimensionError(std::string(op) + ": tensor/partition shape mismatch");
}

}  // namespace

Tensor project(const Tensor& x, const MaskPartition& partition, MaskSide side) {
  check_shape(x, partition, "project");
  std::vector<uint8_t> ind = partition.indicator();
  uint8_t keep = side == MaskSide::J ? 1 : 0;
  Tensor out = x;
  size_t hw = partition.pixel_count();
  for (int c = 0; c < x.channels(); ++c) {
    double* plane = out.plane(c);
    for (size_t i = 0; i < hw; ++i)
      if (ind[i] != keep) plane[i] = 0.0;
  }
  return out;
}

Tensor fill_masked(const Tensor& x, const MaskPartition& partition,
                   const FillStrategy& strategy, uint64_t seed) {
  check_shape(x, partition, "fill_masked");
  if (strategy.radius < 1) throw ConfigError("fill_masked: radius must be >= 1");
  std::vector<uint8_t> ind = partition.indicator();
  Tensor out = x;
  int h = partition.height, w = partition.width, r = strategy.radius;
  Rng rng(derive_seed(seed, "fill"));

  for (int32_t j : partition.masked) {
    int y = j / w, xpos = j % w;
    if (strategy.kind == FillKind::zero) {
      for (int c = 0; c < x.channels(); ++c) out.plane(c)[j] = 0.0;
      continue;
    }
    int ylo = std::max(0, y - r), yhi = std::min(h - 1, y + r);
    int xlo = std::max(0, xpos - r), xhi = std::min(w - 1, xpos + r);
    if (strategy.kind == FillKind::local_mean) {
      int count = 0;
      for (int yy = ylo; yy <= yhi; ++yy)
        for (int xx = xlo; xx <= xhi; ++xx)
          if (!ind[static_cast<size_t>(yy) * w + xx]) ++count;
      for (int c = 0; c < x.channels(); ++c) {
        double sum = 0.0;
        for (int yy = ylo; yy <= yhi; ++yy)
          for (int xx = xlo; xx <= xhi; ++xx) {
            size_t idx = static_cast<size_t>(yy) * w + xx;
            if (!ind[idx]) sum += x.plane(c)[idx];
          }
        out.plane(c)[j] = count > 0 ? sum / count : 0.0;
      }
    } else {  // random_neighbor: one spatial choice shared by all channels
      std::vector<int32_t> candidates;
      for (int yy = ylo; yy <= yhi; ++yy)
        for (int xx = xlo; xx <= xhi; ++xx) {
          int32_t idx = static_cast<int32_t>(yy) * w + xx;
          if (!ind[static_cast<size_t>(idx)]) candidates.push_back(idx);
        }
      if (candidates.empty()) {
        for (int c = 0; c < x.channels(); ++c) out.plane(c)[j] = 0.0;
      } else {
        int32_t pick = candidates[rng.below(candidates.size())];
        for (int c = 0; c < x.channels(); ++c)
          out.plane(c)[j] = x.plane(c)[static_cast<size_t>(pick)];
      }
    }
  }
  return out;
}

Image project(const Image& image, const MaskPartition& partition, MaskSide side) {
  return from_chw(project(to_chw(image), partition, side), image.peak);
}

Image fill_masked(const Image& image, const MaskPartition& partition,
                  const FillStrategy& strategy, uint64_t seed) {
  return from_chw(fill_masked(to_chw(image), partition, strategy, seed), image.peak);
}

namespace {
constexpr char kMaskMagic[9] = "N2IMASK1";

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint32_t get_u32(const std::string& bytes, size_t& pos) {
  if (pos + 4 > bytes.size()) throw FormatError("mask dump: truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  pos += 4;
  return v;
}
}  // namespace

std::string serialize_mask(const MaskPartition& partition) {
  std::string out(kMaskMagic, 8);
  put_u32(out, static_cast<uint32_t>(partition.height));
  put_u32(out, static_cast<uint32_t>(partition.width));
  std::vector<uint8_t> ind = partition.indicator();
  uint8_t cur = 0;  // runs alternate starting with zeros
  uint32_t run = 0;
  for (uint8_t b : ind) {
    if (b == cur) {
      ++run;
    } else {
      put_u32(out, run);
      cur = b;
      run = 1;
    }
  }
  put_u32(out, run);
  return out;
}

MaskPartition deserialize_mask(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMaskMagic, 8) != 0)
    throw FormatError("mask dump: bad magic");
  size_t pos = 8;
  MaskPartition part;
  part.height = static_cast<int>(get_u32(bytes, pos));
  part.width = static_cast<int>(get_u32(bytes, pos));
  if (part.height <= 0 || part.width <= 0)
    throw FormatError("mask dump: bad shape");
  size_t n = part.pixel_count();
  size_t at = 0;
  uint8_t cur = 0;
  while (at < n) {
    uint32_t run = get_u32(bytes, pos);
    if (at + run > n) throw FormatError("mask dump: runs exceed shape");
    if (cur)
      for (uint32_t k = 0; k < run; ++k)
        part.masked.push_back(static_cast<int32_t>(at + k));
    at += run;
    cur = 1 - cur;
  }
  part.density = static_cast<double>(part.masked.size()) / static_cast<double>(n);
  return part;
}

}  // namespace n2i
