#pragma once

// Desk-scale checks of the equivalence between vanishing operator residuals
// and local minimality of the supremal energy under affine variations.

#include "linf/energy.hpp"
#include "linf/fields.hpp"
#include "linf/hamiltonian.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace linf {

struct CheckConfig {
  std::uint64_t seed = 0;
  std::size_t points = 16;               // sampled interior points per check
  std::vector<Vector> explicit_points;   // overrides sampling when nonempty
  std::vector<double> epsilon_fractions = {0.2, 0.1, 0.05};  // times the smallest box width
  HessianOptions hessian;
  double residual_tol = 1e-6;
  double energy_tol = 1e-8;
  double c2_tol = 1e-8;
  double rank_tol = kDefaultRankTol;
  double lambda0 = kDefaultLambda0;
  int lambda_levels = kDefaultDiniLevels;
  std::size_t null_samples = 2;          // null-space coefficient draws per normal direction (first is zero)
  std::size_t random_directions = 1;     // extra random xi per anchor on top of +-e_alpha
  std::size_t subdomains = 4;
  std::size_t anchors_per_subdomain = 3;
  bool exclude_rank_ambiguous = true;

  void validate() const;
  std::vector<double> lambda_ladder() const;
};

enum class CheckDirection { dsolution_residual, min_to_pde, pde_to_min, c2_corollary };
enum class Verdict { pass, fail, inconclusive };

const char* to_string(CheckDirection d);
const char* to_string(Verdict v);

/// A variation together with the energy drop it produced.
struct Witness {
  double epsilon = 0.0;
  double t = 0.0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  double drop = 0.0;
  AffineVariation variation;
};

struct PointRecord {
  NodeIndex node = 0;
  Vector x;
  std::size_t atoms = 0;
  double escaped_fraction = 0.0;
  double residual = 0.0;        // max |F| over atoms
  double tangential = 0.0;      // max |tangential part| over atoms
  double normal = 0.0;          // max |normal part| over atoms
  double energy_gap = 0.0;      // min r(lambda) seen (pde_to_min) or largest drop (min_to_pde)
  double identity_residual = 0.0;
  std::size_t variations_tested = 0;
  bool rank_ambiguous = false;
  bool trivially_satisfied = false;
  bool violates = false;
  std::string status;           // short outcome code
  std::string exclusion;        // reason code when the point is excluded
  std::optional<Witness> witness;
  std::vector<double> epsilons;       // min_to_pde: epsilons with a nonempty neighbourhood
  std::vector<double> bound_trend;    // first-variation bound per epsilon
  bool trend_nonincreasing = true;
  std::vector<std::string> notes;
};

struct CheckReport {
  CheckDirection direction = CheckDirection::dsolution_residual;
  Verdict verdict = Verdict::pass;
  std::string reason;
  std::vector<PointRecord> records;
  std::size_t sampled = 0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
  std::size_t excluded_rank_ambiguous = 0;
  std::size_t excluded_empty_neighborhood = 0;
  std::size_t witnesses = 0;
  std::size_t violations = 0;
  double max_residual = 0.0;
  double residual_tol = 0.0;
  double energy_tol = 0.0;
};

/// Samples interior nodes whose distance to the boundary is at least `margin`
/// grid steps. Deterministic in the seed.
std::vector<NodeIndex> sample_nodes(const SampledMap& u, int margin, std::size_t count, std::uint64_t seed);

/// Engine for point `index`, split from the check seed.
std::mt19937_64 point_rng(std::uint64_t seed, std::uint64_t index);

/// Parallel variations for +-e_alpha and `random_directions` random xi, and
/// perpendicular variations for every normal direction with `null_samples`
/// coefficient draws (the first one zero) and both signs.
std::vector<AffineVariation> class_variations(const HamiltonianModel& model, const SampledMap& u, NodeIndex node,
                                              const HessianTensor& X, const CheckConfig& config,
                                              std::mt19937_64& rng);

CheckReport dsolution_residual(const HamiltonianModel& model, const SampledMap& u, const CheckConfig& config);
CheckReport check_min_to_pde(const HamiltonianModel& model, const SampledMap& u, const CheckConfig& config);
/// `pde_report` can pass in an already computed residual report.
CheckReport check_pde_to_min(const HamiltonianModel& model, const SampledMap& u, const CheckConfig& config,
                             const CheckReport* pde_report = nullptr);
CheckReport check_c2_corollary(const HamiltonianModel& model, const SampledMap& u, const CheckConfig& config);

/// Divergence identity <DA, h_P> + A(x) . Div(H_P(., u, Du))(x) for a variation
/// anchored at a node, with the divergence taken by central differences of the
/// composed analytic field. Needs analytic Du.
double divergence_identity_residual(const HamiltonianModel& model, const SampledMap& u, NodeIndex node,
                                    const AffineVariation& A);
/// Div(H_P(., u, Du)) at a node by central differences.
Vector fd_divergence(const HamiltonianModel& model, const SampledMap& u, NodeIndex node);
/// Gradient of h = H(., u, Du) at a node by central differences.
Vector fd_energy_gradient(const HamiltonianModel& model, const SampledMap& u, NodeIndex node);

struct CombinedReport {
  std::vector<CheckReport> parts;
  Verdict verdict = Verdict::pass;
  bool contradiction = false;
  std::vector<std::string> diagnostics;
};

/// Runs the residual check and both directions (plus the C^2 identities when
/// the map carries an analytic hessian).
CombinedReport run_all_checks(const HamiltonianModel& model, const SampledMap& u, const CheckConfig& config);

}  // namespace linf
