#include "linf/projector.hpp"

#include <algorithm>
#include <stdexcept>

namespace linf {

namespace {

struct RankedSvd {
  Matrix U;  // N x N
  int rank = 0;
  double threshold = 0.0;
  bool ambiguous = false;
};

RankedSvd ranked_svd(const Matrix& A, double rel_tol) {
  if (!A.allFinite()) throw std::domain_error("projector: non-finite input matrix");
  require(rel_tol > 0.0, "projector: rel_tol must be positive");
  require(A.rows() >= 1 && A.cols() >= 1, "projector: empty matrix");

  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullU);
  const Vector& s = svd.singularValues();
  RankedSvd out;
  out.U = svd.matrixU();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  out.threshold = rel_tol * static_cast<double>(std::max(A.rows(), A.cols())) * smax;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) > out.threshold) ++out.rank;
    if (smax > 0.0 && s(k) > out.threshold / 10.0 && s(k) < out.threshold * 10.0) out.ambiguous = true;
  }
  return out;
}

}  // namespace

OrthProjector orth_complement_projector(const Matrix& A, double rel_tol) {
  const RankedSvd r = ranked_svd(A, rel_tol);
  const Eigen::Index N = A.rows();
  // Built from the complementary singular vectors so that full row rank gives exactly zero.
  const Matrix Uc = r.U.rightCols(N - r.rank);
  const Matrix pi = Uc * Uc.transpose();
  OrthProjector p;
  p.matrix = 0.5 * (pi + pi.transpose());
  p.rank_of_range = r.rank;
  p.sv_threshold = r.threshold;
  p.rank_ambiguous = r.ambiguous;
  return p;
}

std::vector<Vector> range_complement_basis(const Matrix& A, double rel_tol) {
  const RankedSvd r = ranked_svd(A, rel_tol);
  std::vector<Vector> basis;
  for (Eigen::Index k = r.rank; k < A.rows(); ++k) basis.emplace_back(r.U.col(k));
  return basis;
}

Matrix range_basis(const Matrix& A, double rel_tol) {
  const RankedSvd r = ranked_svd(A, rel_tol);
  return r.U.leftCols(r.rank);
}

}  // namespace linf
