#pragma once

#include "linf/types.hpp"

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace linf {

/// All derivative blocks of H(x, eta, P) at one point.
///
/// Pair-indexed blocks use the flat index alpha * n + i for (alpha, i):
///   h_PP   (Nn x Nn)  d^2 H / dP_{alpha i} dP_{beta j}
///   h_Peta (Nn x N)   d^2 H / dP_{alpha i} d eta_beta
///   h_Px   (Nn x n)   d^2 H / dP_{alpha i} d x_j
struct HamiltonianJet {
  double h = 0.0;
  Vector h_x;
  Vector h_eta;
  Matrix h_P;
  Matrix h_PP;
  Matrix h_Peta;
  Matrix h_Px;
};

/// A C^2 Hamiltonian with optional analytic derivative blocks.
///
/// Missing blocks are filled in by central finite differences. The model is
/// immutable after construction and safe to share across threads.
class HamiltonianModel {
 public:
  using ValueFn = std::function<double(const Vector& x, const Vector& eta, const Matrix& P)>;
  using VectorFn = std::function<Vector(const Vector& x, const Vector& eta, const Matrix& P)>;
  using MatrixFn = std::function<Matrix(const Vector& x, const Vector& eta, const Matrix& P)>;

  struct Closures {
    ValueFn value;
    VectorFn h_x;
    VectorFn h_eta;
    MatrixFn h_P;
    MatrixFn h_PP;
    MatrixFn h_Peta;
    MatrixFn h_Px;
  };

  static double default_fd_step() { return std::cbrt(std::numeric_limits<double>::epsilon()); }

  HamiltonianModel(int n, int N, Closures closures, double fd_step = default_fd_step(),
                   bool convex = false, std::string name = "custom");

  int n() const { return n_; }
  int N() const { return N_; }
  double fd_step() const { return fd_step_; }
  bool convex() const { return convex_; }
  const std::string& name() const { return name_; }
  const Closures& closures() const { return closures_; }

  bool has_any_analytic_block() const;

  double value(const Vector& x, const Vector& eta, const Matrix& P) const;

  /// Copy of this model with every analytic block dropped (value only).
  HamiltonianModel fd_only() const;
  HamiltonianModel with_fd_step(double step) const;

 private:
  int n_;
  int N_;
  Closures closures_;
  double fd_step_;
  bool convex_;
  std::string name_;
};

HamiltonianJet eval_jet(const HamiltonianModel& model, const Vector& x, const Vector& eta,
                        const Matrix& P);

/// Value and first derivatives in (eta, P) only; used by energy sweeps.
struct FirstOrderJet {
  double h = 0.0;
  Vector h_eta;
  Matrix h_P;
};

FirstOrderJet eval_first_order(const HamiltonianModel& model, const Vector& x, const Vector& eta,
                               const Matrix& P);

/// One sample point (x, eta, P) for the sampling-based checks.
struct JetSample {
  Vector x;
  Vector eta;
  Matrix P;
};

struct JetConsistencyReport {
  std::map<std::string, double> max_deviation;  // per block name
  std::size_t samples = 0;
  double tol = 0.0;
  bool pass = true;
};

/// Compares analytic blocks against value-only finite differences.
JetConsistencyReport check_jet_consistency(const HamiltonianModel& model,
                                           const std::vector<JetSample>& samples, double tol);

struct AssumptionViolation {
  std::size_t sample_index = 0;
  double h = 0.0;
  double h_P_norm = 0.0;
};

/// Sample-based screen for {H_P = 0} being contained in {H = 0}.
///
/// A sample is tested when |h_P| < tol; it violates when |h| >= tol * scale with
/// scale = 1 + |x| + |eta| + |P|. This is a necessary check only.
struct AssumptionReport {
  std::size_t samples = 0;
  std::size_t tested = 0;
  std::vector<AssumptionViolation> violations;
  double tol = 0.0;
  bool pass = true;
  std::string convention = "|h_P| < tol implies |h| < tol * (1 + |x| + |eta| + |P|)";
};

AssumptionReport check_assumption_H(const HamiltonianModel& model,
                                    const std::vector<JetSample>& samples, double tol);

/// Built-in Hamiltonians: "sq_norm" |P|^2, "sq_norm_plus_potential" |P|^2 + |eta|^2,
/// "shifted_sq_norm" |P - P0|^2. `shift` is P0 (defaults to all entries 0.25).
HamiltonianModel builtin_hamiltonian(const std::string& name, int n, int N,
                                     std::optional<Matrix> shift = std::nullopt);

std::vector<std::string> builtin_hamiltonian_names();

}  // namespace linf
