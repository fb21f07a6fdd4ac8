#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "n2i/image.hpp"
#include "n2i/tensor.hpp"

namespace n2i {

// Disjoint pixel partition: J (masked, held out for the loss) and its
// complement J^c (fed to the data-fidelity units). Indices are spatial and
// row-major; for multi-channel images a masked position covers all channels.
struct MaskPartition {
  int height = 0;
  int width = 0;
  std::vector<int32_t> masked;  // sorted J
  double density = 0.0;

  size_t pixel_count() const {
    return static_cast<size_t>(height) * static_cast<size_t>(width);
  }
  // 1 on J, 0 on J^c, row-major.
  std::vector<uint8_t> indicator() const;
};

enum class MaskMode { uniform, stratified };

MaskMode mask_mode_from_string(const std::string& s);
std::string to_string(MaskMode mode);

// uniform: i.i.d. Bernoulli(density) per pixel, redrawn if either side ends
// up empty. stratified: the image is tiled by cells of side
// ceil(1/sqrt(density)) and one pixel is drawn uniformly in every cell
// (partial edge cells included), so no two masked pixels share a cell.
MaskPartition sample_mask(int height, int width, double density, MaskMode mode,
                          uint64_t seed);

enum class FillKind { zero, local_mean, random_neighbor };

FillKind fill_kind_from_string(const std::string& s);
std::string to_string(FillKind kind);

struct FillStrategy {
  FillKind kind = FillKind::local_mean;
  int radius = 1;
};

enum class MaskSide { J, Jc };

// Realizes P_J / P_{J^c}: keeps the selected side, zeroes the rest.
Tensor project(const Tensor& x, const MaskPartition& partition, MaskSide side);
Image project(const Image& image, const MaskPartition& partition, MaskSide side);

// Network-input construction: J^c pixels pass through untouched, J pixels
// are replaced using only J^c values (zero / windowed mean / random
// neighbor). Falls back to 0 when the window holds no J^c pixel.
Tensor fill_masked(const Tensor& x, const MaskPartition& partition,
                   const FillStrategy& strategy, uint64_t seed);
Image fill_masked(const Image& image, const MaskPartition& partition,
                  const FillStrategy& strategy, uint64_t seed);

// Debug-dump serialization: "N2IMASK1", u32 height, u32 width, then u32
// run lengths of the J indicator in row-major order, starting with a (possibly
// zero-length) run of zeros and alternating. Little-endian throughout.
std::string serialize_mask(const MaskPartition& partition);
MaskPartition deserialize_mask(const std::string& bytes);

}  // namespace n2i
