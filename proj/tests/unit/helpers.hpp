#pragma once

#include "linf/types.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace testing_support {

using linf::HessianTensor;
using linf::Matrix;
using linf::Vector;

inline Matrix gaussian(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = g(rng);
  return m;
}

inline Vector gaussian_vector(std::mt19937_64& rng, int size) { return gaussian(rng, size, 1); }

/// Random N x n matrix of rank k built as a product of Gaussian factors.
inline Matrix rank_k(std::mt19937_64& rng, int N, int n, int k) {
  if (k == 0) return Matrix::Zero(N, n);
  return gaussian(rng, N, k) * gaussian(rng, k, n);
}

inline HessianTensor symmetric_tensor(std::mt19937_64& rng, int N, int n) {
  HessianTensor X(N, n);
  for (int b = 0; b < N; ++b) {
    const Matrix S = gaussian(rng, n, n);
    X.set_slice(b, S + S.transpose());
  }
  return X;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += std::log(x[k]) / m;
    my += std::log(y[k]) / m;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
    sxx += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
  }
  return sxy / sxx;
}

}  // namespace testing_support
