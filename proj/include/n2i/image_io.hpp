#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "n2i/image.hpp"

namespace n2i {

// Supported formats: PNG (8-bit gray/RGB) and binary PGM/PPM (8/16-bit).
// Loading keeps raw sample values and records peak = maxval. Saving rounds
// and clamps to [0, maxval] with maxval = round(peak); files are written
// atomically (temp file + rename).
Image load_image(const std::filesystem::path& path);
void save_image(const Image& image, const std::filesystem::path& path);

// Image files of a directory in lexicographic filename order. The ordering
// is part of the reproducibility contract for dataset folders.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

Dataset load_dataset(const std::filesystem::path& dir);

// Byte-level atomic write helper shared by all writers.
void atomic_write_bytes(const std::filesystem::path& path, const std::string& bytes);
std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace n2i
