#include "n2i/dct.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "n2i/errors.hpp"

namespace n2i {

namespace {

// C[k][n] = s(k) cos(pi (2n+1) k / (2N)), s(0)=sqrt(1/N), s(k)=sqrt(2/N).
struct Basis {
  int n;
  std::vector<double> c;  // n x n row-major
  explicit Basis(int n_) : n(n_), c(static_cast<size_t>(n_) * n_) {
    const double pi = 3.14159265358979323846;
    for (int k = 0; k < n; ++k) {
      double s = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
      for (int j = 0; j < n; ++j)
        c[static_cast<size_t>(k) * n + j] =
            s * std::cos(pi * (2.0 * j + 1.0) * k / (2.0 * n));
    }
  }
};

std::shared_ptr<const Basis> basis_for(int n) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const Basis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto b = std::make_shared<const Basis>(n);
  cache.emplace(n, b);
  return b;
}

// out = A * X  with A (h x h) applied down columns, X (h x w)
void left_mul(const Basis& a, bool transpose, int h, int w, const double* x,
              double* out) {
  for (int k = 0; k < h; ++k) {
    for (int j = 0; j < w; ++j) out[static_cast<size_t>(k) * w + j] = 0.0;
    for (int y = 0; y < h; ++y) {
      double av = transpose ? a.c[static_cast<size_t>(y) * h + k]
                            : a.c[static_cast<size_t>(k) * h + y];
      const double* row = x + static_cast<size_t>(y) * w;
      double* orow = out + static_cast<size_t>(k) * w;
      for (int j = 0; j < w; ++j) orow[j] += av * row[j];
    }
  }
}

// out = X * B^T (rows of X transformed), X (h x w), B (w x w)
void right_mul(const Basis& b, bool transpose, int h, int w, const double* x,
               double* out) {
  for (int y = 0; y < h; ++y) {
    const double* row = x + static_cast<size_t>(y) * w;
    double* orow = out + static_cast<size_t>(y) * w;
    for (int l = 0; l < w; ++l) {
      double s = 0.0;
      for (int j = 0; j < w; ++j) {
        double bv = transpose ? b.c[static_cast<size_t>(j) * w + l]
                              : b.c[static_cast<size_t>(l) * w + j];
        s += row[j] * bv;
      }
      orow[l] = s;
    }
  }
}

}  // namespace

void dct2(int h, int w, const double* in, double* out) {
  if (h <= 0 || w <= 0) throw DimensionError("dct2: empty grid");
  auto bh = basis_for(h);
  auto bw = basis_for(w);
  std::vector<double> tmp(static_cast<size_t>(h) * w);
  left_mul(*bh, false, h, w, in, tmp.data());
  right_mul(*bw, false, h, w, tmp.data(), out);
}

void idct2(int h, int w, const double* in, double* out) {
  if (h <= 0 || w <= 0) throw DimensionError("idct2: empty grid");
  auto bh = basis_for(h);
  auto bw = basis_for(w);
  std::vector<double> tmp(static_cast<size_t>(h) * w);
  left_mul(*bh, true, h, w, in, tmp.data());
  right_mul(*bw, true, h, w, tmp.data(), out);
}

std::vector<double> dct2(int h, int w, const std::vector<double>& in) {
  std::vector<double> out(in.size());
  dct2(h, w, in.data(), out.data());
  return out;
}

std::vector<double> idct2(int h, int w, const std::vector<double>& in) {
  std::vector<double> out(in.size());
  idct2(h, w, in.data(), out.data());
  return out;
}

Tensor dct2(const Tensor& x) {
  Tensor out = x;
  for (int c = 0; c < x.channels(); ++c)
    dct2(x.height(), x.width(), x.plane(c), out.plane(c));
  return out;
}

Tensor idct2(const Tensor& x) {
  Tensor out = x;
  for (int c = 0; c < x.channels(); ++c)
    idct2(x.height(), x.width(), x.plane(c), out.plane(c));
  return out;
}

}  // namespace n2i
