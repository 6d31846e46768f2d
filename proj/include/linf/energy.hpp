#pragma once

// Supremal energy, sublevel neighbourhoods, the rate function and its lower
// Dini derivative, and the affine variation classes.

#include "linf/fields.hpp"
#include "linf/hamiltonian.hpp"
#include "linf/pde_operator.hpp"
#include "linf/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace linf {

using NodeMask = std::vector<bool>;

NodeMask full_mask(const SampledMap& u);
/// Nodes with every multi-index in [lo, hi] (inclusive).
NodeMask box_mask(const SampledMap& u, const std::vector<int>& lo, const std::vector<int>& hi);
std::size_t mask_count(const NodeMask& mask);

/// Band used to decide membership in the argmax set.
inline double argmax_tolerance(double energy) { return 1e-8 * (1.0 + std::abs(energy)); }

enum class VariationClass { parallel, perpendicular, constant };
const char* to_string(VariationClass c);

struct VariationProvenance {
  Vector point;                       // anchor x
  Vector direction;                   // xi (parallel) or n_x (perpendicular)
  std::optional<HessianTensor> atom;  // X_x used in the construction
  Vector null_coeffs;                 // perpendicular only
  int normal_index = -1;
};

/// A(z) = offset + matrix (z - base_point).
struct AffineVariation {
  Vector base_point;
  Vector offset;
  Matrix matrix;
  VariationClass class_tag = VariationClass::constant;
  VariationProvenance provenance;

  Vector operator()(const Vector& z) const { return offset + matrix * (z - base_point); }
  /// t A; the classes are closed under real scaling.
  AffineVariation scaled(double t) const;

  static AffineVariation constant(const Vector& base_point, const Vector& c);
};

/// Per-node cache of (x, u, Du) and the first-order jet of H along u.
class EnergyContext {
 public:
  EnergyContext(const HamiltonianModel& model, const SampledMap& u);

  const HamiltonianModel& model() const { return model_; }
  const SampledMap& map() const { return map_; }

  const Vector& point(NodeIndex k) const { return x_[k]; }
  const Vector& value(NodeIndex k) const { return u_[k]; }
  const Matrix& gradient(NodeIndex k) const { return du_[k]; }
  double h(NodeIndex k) const { return jets_[k].h; }
  const FirstOrderJet& first_order(NodeIndex k) const { return jets_[k]; }

  /// sup over masked nodes of H(x, u + lambda A, Du + lambda DA).
  double perturbed_sup(const NodeMask& mask, const AffineVariation& A, double lambda) const;

 private:
  const HamiltonianModel& model_;
  const SampledMap& map_;
  std::vector<Vector> x_;
  std::vector<Vector> u_;
  std::vector<Matrix> du_;
  std::vector<FirstOrderJet> jets_;
};

struct EnergyReport {
  double energy = 0.0;
  std::vector<NodeIndex> argmax_nodes;
  double tolerance_used = 0.0;
};

EnergyReport sup_energy(const EnergyContext& ctx, const NodeMask& mask);
EnergyReport sup_energy(const HamiltonianModel& model, const SampledMap& u, const NodeMask& mask);

/// Discrete version of {y : h(y) <= h(x)}^interior intersected with the open
/// eps-ball at x. Requires 0 < eps < distance from x to the box boundary.
NodeMask sublevel_neighborhood(const EnergyContext& ctx, NodeIndex x, double eps);
NodeMask sublevel_neighborhood(const HamiltonianModel& model, const SampledMap& u, NodeIndex x, double eps);

/// r(lambda) = E(u + lambda A) - E(u) over the mask; r(0) = 0 exactly.
/// The returned callable borrows `ctx` (or model and u) and must not outlive them.
using RateFunction = std::function<double(double)>;
RateFunction rate_function(const EnergyContext& ctx, const AffineVariation& A, const NodeMask& mask);
RateFunction rate_function(const HamiltonianModel& model, const SampledMap& u, const AffineVariation& A,
                           const NodeMask& mask);

inline constexpr double kDefaultLambda0 = 1e-2;
inline constexpr int kDefaultDiniLevels = 8;

struct DiniResult {
  double value = 0.0;            // min_k r(lambda_k) / lambda_k
  std::vector<double> lambdas;   // lambda0 * 2^-k, k = 0..K
  std::vector<double> quotients;
};

DiniResult dini_lower(const RateFunction& r, double lambda0 = kDefaultLambda0, int K = kDefaultDiniLevels);

/// Affine space {Q : H_P : Q = -eta . F_perp}, or {0} when H_P vanishes.
struct ScriptLSpace {
  Matrix particular;
  std::vector<Matrix> null_basis;
  bool degenerate = false;

  Matrix member(const Vector& coeffs) const;
};

ScriptLSpace script_L(const HamiltonianJet& hj, const SecondOrderJet& jet, const Vector& eta,
                      double rel_tol = kDefaultRankTol);
ScriptLSpace script_L(const HamiltonianModel& model, const SecondOrderJet& jet, const Vector& eta,
                      double rel_tol = kDefaultRankTol);

/// The second-order jet of u at a node with the given hessian atom.
SecondOrderJet jet_at(const SampledMap& u, NodeIndex node, const HessianTensor& X);

/// A(z) = (xi (x) F_par(x, u, Du, X)) (z - x).
AffineVariation make_parallel_variation(const HamiltonianModel& model, const SampledMap& u, NodeIndex x,
                                        const Vector& xi, const HessianTensor& X);

/// A(z) = n_x + N_x (z - x) with n_x the chosen complement direction of R(H_P)
/// and N_x = particular + sum coeffs * null_basis. Empty when R(H_P)^perp is
/// trivial or the index is out of range (no nontrivial normal direction).
std::optional<AffineVariation> make_perpendicular_variation(const HamiltonianModel& model, const SampledMap& u,
                                                            NodeIndex x, int normal_index,
                                                            const Vector& null_coeffs, const HessianTensor& X,
                                                            double rel_tol = kDefaultRankTol);

struct MembershipResult {
  bool member = false;
  std::vector<std::string> diagnostics;
  double argmax_gap = 0.0;
  double offset_residual = 0.0;
  double matrix_residual = 0.0;
  double atom_distance = 0.0;
};

/// Re-derives the class conditions of A relative to the mask: anchor in the
/// argmax set, provenance atom among the atoms computed at the anchor, and the
/// class identities. Verdicts are relative to the computed atom list.
MembershipResult variation_membership(const HamiltonianModel& model, const SampledMap& u, const AffineVariation& A,
                                      const NodeMask& mask, double tol, const HessianOptions& hess = {});
MembershipResult variation_membership(const EnergyContext& ctx, const AffineVariation& A, const NodeMask& mask,
                                      double tol, const HessianOptions& hess = {});

/// max over masked nodes of H_P : DA + H_eta . A.
double first_variation_bound(const EnergyContext& ctx, const AffineVariation& A, const NodeMask& mask);
double first_variation_bound(const HamiltonianModel& model, const SampledMap& u, const AffineVariation& A,
                             const NodeMask& mask);

}  // namespace linf
