#pragma once

#include "linf/types.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace linf {

using NodeIndex = std::size_t;

/// Axis-aligned box sampled on a uniform grid with the same step on every axis.
/// Nodes are numbered row-major: the last axis varies fastest.
class BoxDomain {
 public:
  BoxDomain() = default;
  BoxDomain(Vector lower, Vector upper, double spacing);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  double spacing() const { return spacing_; }
  const std::vector<int>& counts() const { return counts_; }
  std::size_t node_count() const { return node_count_; }
  double min_width() const;

  std::vector<int> multi_index(NodeIndex node) const;
  NodeIndex flat_index(const std::vector<int>& idx) const;
  Vector point(NodeIndex node) const;
  /// Neighbor along `axis` at offset `step` nodes, if inside the grid.
  std::optional<NodeIndex> offset(NodeIndex node, int axis, int step) const;
  /// Grid node coinciding with x (within 1e-6 spacing).
  std::optional<NodeIndex> node_at(const Vector& x) const;
  /// Number of whole grid steps from the node to the nearest face of the box.
  int steps_to_boundary(NodeIndex node) const;
  bool contains(const Vector& x, double slack = 0.0) const;

  bool operator==(const BoxDomain& o) const;

 private:
  Vector lower_;
  Vector upper_;
  double spacing_ = 0.0;
  std::vector<int> counts_;
  std::size_t node_count_ = 0;
};

/// A map u: box -> R^N sampled on the grid, with optional analytic u, Du, D^2u.
class SampledMap {
 public:
  using MapFn = std::function<Vector(const Vector&)>;
  using GradFn = std::function<Matrix(const Vector&)>;
  using HessFn = std::function<HessianTensor(const Vector&)>;

  struct Analytic {
    MapFn u;
    GradFn Du;
    HessFn D2u;
  };

  SampledMap(BoxDomain domain, int N, std::vector<double> values, Analytic analytic = {},
             std::string name = "custom");

  /// Samples `analytic.u` on every node.
  static SampledMap from_function(BoxDomain domain, int N, Analytic analytic, std::string name = "custom");

  const BoxDomain& domain() const { return domain_; }
  int n() const { return domain_.dim(); }
  int N() const { return N_; }
  std::size_t node_count() const { return domain_.node_count(); }
  const std::string& name() const { return name_; }
  const Analytic& analytic() const { return analytic_; }

  Vector value(NodeIndex node) const;
  /// Analytic Du at the node when available, otherwise fd_gradient.
  Matrix gradient(NodeIndex node) const;
  bool has_analytic_gradient() const { return static_cast<bool>(analytic_.Du); }
  bool has_analytic_hessian() const { return static_cast<bool>(analytic_.D2u); }

  /// Copy keeping only the sampled values.
  SampledMap without_analytic() const;

  const std::vector<double>& values() const { return values_; }

 private:
  BoxDomain domain_;
  int N_;
  std::vector<double> values_;  // node-major, values_[node * N + alpha]
  Analytic analytic_;
  std::string name_;
};

/// Central differences on interior nodes, second-order one-sided at the boundary.
Matrix fd_gradient(const SampledMap& u, NodeIndex node);

/// Forward quotient (1/h)[Du(x + h e_i) - Du(x)] per axis, symmetrized in (i, j).
/// h must be a nonzero multiple of the grid spacing with the stencil inside the grid.
HessianTensor dq_hessian(const SampledMap& u, NodeIndex node, double h);

struct DiffuseHessianApprox {
  Vector point;
  NodeIndex node = 0;
  std::vector<HessianTensor> support_atoms;
  std::vector<double> atom_weights;  // fraction of quotient samples in each atom
  double escaped_fraction = 0.0;
  double cluster_radius = 0.0;
  std::vector<double> scales;        // sorted decreasing
  std::size_t samples = 0;
};

inline constexpr double kDefaultBlowupCutoff = 1e6;

/// Approximates the reduced support of a diffuse hessian at a node: quotients
/// over the scale ladder, those above `blowup_cutoff` counted as escaped mass,
/// the rest clustered by single linkage. A non-positive radius selects the
/// default 1e-3 * (1 + largest quotient norm).
DiffuseHessianApprox diffuse_hessian_support(const SampledMap& u, NodeIndex node, std::vector<double> scales,
                                             double cluster_radius = 0.0,
                                             double blowup_cutoff = kDefaultBlowupCutoff);
DiffuseHessianApprox diffuse_hessian_support(const SampledMap& u, const Vector& x, std::vector<double> scales,
                                             double cluster_radius = 0.0,
                                             double blowup_cutoff = kDefaultBlowupCutoff);

/// spacing * 2^k for k = levels-1 down to 0.
std::vector<double> default_scale_ladder(double spacing, int levels = 5);

enum class HessianSource { automatic, analytic, diffuse };

/// How second-order atoms are obtained at a node. `automatic` uses the
/// analytic hessian when the map carries one (a C^2 map has a single Dirac
/// diffuse hessian) and the clustered quotients otherwise.
struct HessianOptions {
  HessianSource source = HessianSource::automatic;
  int scale_levels = 5;
  std::vector<double> scales;  // empty: default_scale_ladder(spacing, scale_levels)
  double cluster_radius = 0.0;
  double blowup_cutoff = kDefaultBlowupCutoff;
};

struct AtomSet {
  std::vector<HessianTensor> atoms;
  double escaped_fraction = 0.0;
  double cluster_radius = 0.0;
  bool analytic = false;
};

std::vector<double> resolved_scales(const SampledMap& u, const HessianOptions& opts);
/// Grid steps the quotient stencil needs on the forward side (0 for analytic atoms).
int stencil_steps(const SampledMap& u, const HessianOptions& opts);
AtomSet hessian_atoms(const SampledMap& u, NodeIndex node, const HessianOptions& opts);

struct TestMapParams {
  std::optional<Matrix> B;  // "linear" gradient
  std::optional<Vector> c;  // "linear" offset
  std::optional<BoxDomain> box;
};

/// Registry: "linear" (Bx + c), "aronsson43" (x^{4/3} - y^{4/3}, n = 2, N = 1),
/// "quadratic_bump" (u_alpha = |x|^2).
SampledMap test_map(const std::string& name, int n, int N, const TestMapParams& params = {});
std::vector<std::string> test_map_names();

/// CSV with header x1..xn,u1..uN, one node per row in row-major order.
void write_csv(const SampledMap& u, std::ostream& os);
SampledMap read_csv(std::istream& is, const std::string& name = "csv");

}  // namespace linf
