#pragma once

#include <filesystem>
#include <vector>

#include "n2i/unet.hpp"

namespace n2i {

// Checkpoint file, little-endian binary:
//   magic "N2ICKPT1"
//   u32 entry count
//   per entry: u32 name length, utf-8 name bytes, u32 rank, u32 dims[rank],
//              float32 payload (row-major)
// Unrolled-solver checkpoints carry the extra 1-element tensor "mu_log".
// In-memory doubles are narrowed to float32 on write; a save/load/save
// cycle reproduces the file byte for byte.
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> load_checkpoint_tensors(const std::filesystem::path& path);

void save_params(const std::filesystem::path& path, const NetParams& params);
NetParams load_params(const std::filesystem::path& path);

}  // namespace n2i
