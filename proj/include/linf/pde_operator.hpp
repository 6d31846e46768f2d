#pragma once

#include "linf/hamiltonian.hpp"
#include "linf/projector.hpp"
#include "linf/types.hpp"

namespace linf {

/// A point (x, eta, P, X) at which the second-order operator is evaluated.
struct SecondOrderJet {
  Vector x;
  Vector eta;
  Matrix P;
  HessianTensor X;

  /// Builds a jet, symmetrizing X in its last two indices.
  static SecondOrderJet make(Vector x, Vector eta, Matrix P, const HessianTensor& X) {
    return SecondOrderJet{std::move(x), std::move(eta), std::move(P), X.symmetrized()};
  }

  int n() const { return static_cast<int>(x.size()); }
  int N() const { return static_cast<int>(eta.size()); }
};

/// The operator value with its two mutually orthogonal parts.
struct OperatorValue {
  Vector full;         // tangential + normal
  Vector tangential;   // H_P F_par
  Vector normal;       // H [[H_P]]^perp (F_perp - H_eta)
  Vector f_parallel;   // length n
  Vector f_perp;       // length N
  bool rank_ambiguous = false;
  int rank_of_h_P = 0;
  double scale = 1.0;  // 1 + |h| + |h_P| + |F_par| + |F_perp|
};

// F_par_i = sum_{beta j} H_{P beta j} X_{beta i j} + sum_beta H_{eta beta} P_{beta i} + H_{x i}
Vector f_parallel(const HamiltonianJet& hj, const SecondOrderJet& jet);
Vector f_parallel(const HamiltonianModel& model, const SecondOrderJet& jet);

// F_perp_alpha = sum_{beta i j} H_{P alpha i P beta j} X_{beta i j}
//              + sum_{beta i} H_{P alpha i eta beta} P_{beta i} + sum_i H_{P alpha i x i}
Vector f_perp(const HamiltonianJet& hj, const SecondOrderJet& jet);
Vector f_perp(const HamiltonianModel& model, const SecondOrderJet& jet);

OperatorValue f_infinity(const HamiltonianJet& hj, const SecondOrderJet& jet,
                         double rel_tol = kDefaultRankTol);
OperatorValue f_infinity(const HamiltonianModel& model, const SecondOrderJet& jet,
                         double rel_tol = kDefaultRankTol);

/// (P (x) P + |P|^2 [[P]]^perp (x) I) : X, component by component.
Vector infinity_laplacian(const Matrix& P, const HessianTensor& X, double rel_tol = kDefaultRankTol);

void check_jet_shapes(const SecondOrderJet& jet, int n, int N);

}  // namespace linf
