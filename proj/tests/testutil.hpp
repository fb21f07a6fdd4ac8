#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>

#include "n2i/image.hpp"
#include "n2i/rng.hpp"
#include "n2i/tensor.hpp"

namespace n2i::test {

inline Tensor random_tensor(std::vector<int> shape, uint64_t seed, double lo = 0.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (double& v : t.v) v = rng.uniform(lo, hi);
  return t;
}

inline Image random_image(int h, int w, int c, double peak, uint64_t seed) {
  Image img = Image::zeros(h, w, c, peak);
  Rng rng(seed);
  for (double& v : img.data) v = rng.uniform(0.0, peak);
  return img;
}

// Dense SPD test matrix with a controlled spectrum: M^T M / n + I.
inline Eigen::MatrixXd random_spd(int n, uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m.transpose() * m / static_cast<double>(n) +
         Eigen::MatrixXd::Identity(n, n);
}

// Scratch directory under the system temp dir, cleaned on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("n2i_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace n2i::test
