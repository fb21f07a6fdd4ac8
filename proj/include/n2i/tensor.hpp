#pragma once

#include <cstddef>
#include <vector>

namespace n2i {

// Dense row-major tensor of doubles. Activations and feature maps use CHW
// order, convolution kernels OC x IC x KH x KW.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor scalar(double value);

  size_t size() const { return v.size(); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  // CHW accessors.
  int channels() const { return shape[0]; }
  int height() const { return shape[1]; }
  int width() const { return shape[2]; }
  double& at3(int c, int y, int x) {
    return v[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
  }
  double at3(int c, int y, int x) const {
    return v[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
  }
  double* plane(int c) { return v.data() + static_cast<size_t>(c) * shape[1] * shape[2]; }
  const double* plane(int c) const {
    return v.data() + static_cast<size_t>(c) * shape[1] * shape[2];
  }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

double dot(const Tensor& a, const Tensor& b);
double norm2(const Tensor& a);
// y += alpha * x
void axpy(double alpha, const Tensor& x, Tensor& y);
void scale(Tensor& x, double alpha);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& a);

}  // namespace n2i
