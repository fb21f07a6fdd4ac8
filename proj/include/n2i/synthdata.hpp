#pragma once

#include <cstdint>

#include "n2i/image.hpp"

namespace n2i {

// Procedural clean images: smooth cosine fields plus soft-edged blobs and a
// ramp, occupying the middle of the dynamic range. Stands in for natural
// image corpora at desk scale.
Image synthetic_image(int height, int width, int channels, double peak,
                      uint64_t seed);

Dataset synthetic_corpus(int count, int height, int width, int channels,
                         double peak, uint64_t seed);

}  // namespace n2i
