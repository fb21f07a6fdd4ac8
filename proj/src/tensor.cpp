#include "n2i/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "n2i/errors.hpp"

namespace n2i {

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw DimensionError("tensor dimensions must be positive");
    n *= static_cast<size_t>(d);
  }
  v.assign(n, 0.0);
}

Tensor Tensor::scalar(double value) {
  Tensor t({1});
  t.v[0] = value;
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
  return s;
}

double norm2(const Tensor& a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, const Tensor& x, Tensor& y) {
  for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += alpha * x.v[i];
}

void scale(Tensor& x, double alpha) {
  for (double& e : x.v) e *= alpha;
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += b.v[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= b.v[i];
  return out;
}

bool all_finite(const Tensor& a) {
  return std::all_of(a.v.begin(), a.v.end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace n2i
