#pragma once

#include <vector>

#include "n2i/tensor.hpp"

namespace n2i {

// Orthonormal 2D DCT-II and its inverse over single-channel grids, computed
// as dense products against cached cosine bases (C_h * X * C_w^T). Exact
// orthonormality makes Parseval identities hold to roundoff, which the
// colored-noise covariance relies on.
void dct2(int h, int w, const double* in, double* out);
void idct2(int h, int w, const double* in, double* out);

std::vector<double> dct2(int h, int w, const std::vector<double>& in);
std::vector<double> idct2(int h, int w, const std::vector<double>& in);

// Per-channel transforms of CHW tensors.
Tensor dct2(const Tensor& x);
Tensor idct2(const Tensor& x);

}  // namespace n2i
