#include "linf/pde_operator.hpp"

#include <stdexcept>

namespace linf {

void check_jet_shapes(const SecondOrderJet& jet, int n, int N) {
  require(jet.x.size() == n, "jet: x has wrong dimension");
  require(jet.eta.size() == N, "jet: eta has wrong dimension");
  require(jet.P.rows() == N && jet.P.cols() == n, "jet: P has wrong shape");
  require(jet.X.N() == N && jet.X.n() == n, "jet: X has wrong shape");
}

Vector f_parallel(const HamiltonianJet& hj, const SecondOrderJet& jet) {
  const int n = jet.n();
  const int N = jet.N();
  check_jet_shapes(jet, n, N);
  Vector f(n);
  for (int i = 0; i < n; ++i) {
    double s = hj.h_x(i);
    for (int b = 0; b < N; ++b) {
      s += hj.h_eta(b) * jet.P(b, i);
      for (int j = 0; j < n; ++j) s += hj.h_P(b, j) * jet.X(b, i, j);
    }
    f(i) = s;
  }
  return f;
}

Vector f_parallel(const HamiltonianModel& model, const SecondOrderJet& jet) {
  check_jet_shapes(jet, model.n(), model.N());
  return f_parallel(eval_jet(model, jet.x, jet.eta, jet.P), jet);
}

Vector f_perp(const HamiltonianJet& hj, const SecondOrderJet& jet) {
  const int n = jet.n();
  const int N = jet.N();
  check_jet_shapes(jet, n, N);
  Vector f(N);
  for (int a = 0; a < N; ++a) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const int ai = pair_index(a, i, n);
      s += hj.h_Px(ai, i);
      for (int b = 0; b < N; ++b) {
        s += hj.h_Peta(ai, b) * jet.P(b, i);
        for (int j = 0; j < n; ++j) s += hj.h_PP(ai, pair_index(b, j, n)) * jet.X(b, i, j);
      }
    }
    f(a) = s;
  }
  return f;
}

Vector f_perp(const HamiltonianModel& model, const SecondOrderJet& jet) {
  check_jet_shapes(jet, model.n(), model.N());
  return f_perp(eval_jet(model, jet.x, jet.eta, jet.P), jet);
}

OperatorValue f_infinity(const HamiltonianJet& hj, const SecondOrderJet& jet, double rel_tol) {
  OperatorValue v;
  v.f_parallel = f_parallel(hj, jet);
  v.f_perp = f_perp(hj, jet);
  const OrthProjector pi = orth_complement_projector(hj.h_P, rel_tol);
  v.tangential = hj.h_P * v.f_parallel;
  v.normal = hj.h * (pi.matrix * (v.f_perp - hj.h_eta));
  v.full = v.tangential + v.normal;
  v.rank_ambiguous = pi.rank_ambiguous;
  v.rank_of_h_P = pi.rank_of_range;
  v.scale = 1.0 + std::abs(hj.h) + hj.h_P.norm() + v.f_parallel.norm() + v.f_perp.norm();
  return v;
}

OperatorValue f_infinity(const HamiltonianModel& model, const SecondOrderJet& jet, double rel_tol) {
  check_jet_shapes(jet, model.n(), model.N());
  return f_infinity(eval_jet(model, jet.x, jet.eta, jet.P), jet, rel_tol);
}

Vector infinity_laplacian(const Matrix& P, const HessianTensor& X, double rel_tol) {
  const int N = static_cast<int>(P.rows());
  const int n = static_cast<int>(P.cols());
  require(X.N() == N && X.n() == n, "infinity_laplacian: shape mismatch");
  if (!P.allFinite() || !X.all_finite()) throw std::domain_error("infinity_laplacian: non-finite input");
  const Matrix pi = orth_complement_projector(P, rel_tol).matrix;
  const double p2 = P.squaredNorm();
  Vector out(N);
  for (int a = 0; a < N; ++a) {
    double s = 0.0;
    for (int b = 0; b < N; ++b) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) s += P(a, i) * P(b, j) * X(b, i, j);
        s += p2 * pi(a, b) * X(b, i, i);
      }
    }
    out(a) = s;
  }
  return out;
}

}  // namespace linf
