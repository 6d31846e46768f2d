#pragma once

// Core value types shared by every module.
//
// Index conventions: Greek indices (alpha, beta) run over the N codomain
// components, Latin indices (i, j) over the n domain coordinates. A gradient
// matrix P is stored N x n with P(alpha, i) = d u_alpha / d x_i.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace linf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using SpatialPoint = Vector;    // length n
using StateVector = Vector;     // length N
using GradientMatrix = Matrix;  // N x n

inline bool all_finite(const Vector& v) { return v.allFinite(); }
inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

/// Second-derivative tensor X(beta, i, j), symmetric in (i, j).
///
/// The constructor from raw data does not symmetrize; use `symmetrized()`
/// (or `from_raw_symmetrized`) when the source may be asymmetric.
class HessianTensor {
 public:
  HessianTensor() = default;
  HessianTensor(int N, int n) : N_(N), n_(n), data_(static_cast<std::size_t>(N * n * n), 0.0) {
    require(N >= 1 && n >= 1, "HessianTensor: dimensions must be positive");
  }

  static HessianTensor from_raw_symmetrized(int N, int n, const std::vector<double>& raw) {
    HessianTensor t(N, n);
    require(raw.size() == t.data_.size(), "HessianTensor: raw size mismatch");
    t.data_ = raw;
    return t.symmetrized();
  }

  int N() const { return N_; }
  int n() const { return n_; }

  double& operator()(int beta, int i, int j) { return data_[index(beta, i, j)]; }
  double operator()(int beta, int i, int j) const { return data_[index(beta, i, j)]; }

  /// The n x n slice for component beta.
  Matrix slice(int beta) const {
    Matrix m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = (*this)(beta, i, j);
    return m;
  }
  void set_slice(int beta, const Matrix& m) {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) (*this)(beta, i, j) = m(i, j);
  }

  HessianTensor symmetrized() const {
    HessianTensor out(*this);
    for (int b = 0; b < N_; ++b)
      for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j) {
          const double avg = 0.5 * ((*this)(b, i, j) + (*this)(b, j, i));
          out(b, i, j) = avg;
          out(b, j, i) = avg;
        }
    return out;
  }

  bool is_symmetric() const {
    for (int b = 0; b < N_; ++b)
      for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j)
          if ((*this)(b, i, j) != (*this)(b, j, i)) return false;
    return true;
  }

  double norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  const std::vector<double>& raw() const { return data_; }

  HessianTensor& operator+=(const HessianTensor& o) {
    require(o.N_ == N_ && o.n_ == n_, "HessianTensor: shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  HessianTensor& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }
  friend HessianTensor operator-(HessianTensor a, const HessianTensor& b) {
    require(a.N_ == b.N_ && a.n_ == b.n_, "HessianTensor: shape mismatch");
    for (std::size_t k = 0; k < a.data_.size(); ++k) a.data_[k] -= b.data_[k];
    return a;
  }

 private:
  std::size_t index(int beta, int i, int j) const {
    return static_cast<std::size_t>((beta * n_ + i) * n_ + j);
  }

  int N_ = 0;
  int n_ = 0;
  std::vector<double> data_;
};

/// Flat index of the pair (alpha, i) used for the Nn x Nn second-derivative block.
inline int pair_index(int alpha, int i, int n) { return alpha * n + i; }

/// Frobenius inner product A : B.
inline double frobenius(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

}  // namespace linf
