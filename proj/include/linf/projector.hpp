#pragma once

#include "linf/types.hpp"

#include <vector>

namespace linf {

inline constexpr double kDefaultRankTol = 1e-12;

/// Orthogonal projection onto R(A)^perp for an N x n matrix A.
struct OrthProjector {
  Matrix matrix;           // N x N, symmetric, idempotent
  int rank_of_range = 0;   // numerical rank of A
  double sv_threshold = 0.0;
  bool rank_ambiguous = false;  // some singular value lies within a factor 10 of the cut
};

/// Singular values at or below rel_tol * max(N, n) * sigma_max count as zero.
OrthProjector orth_complement_projector(const Matrix& A, double rel_tol = kDefaultRankTol);

/// Orthonormal basis of R(A)^perp in R^N (empty when A has full row rank).
std::vector<Vector> range_complement_basis(const Matrix& A, double rel_tol = kDefaultRankTol);

/// Orthonormal basis of R(A), the U_r factor as columns.
Matrix range_basis(const Matrix& A, double rel_tol = kDefaultRankTol);

}  // namespace linf
