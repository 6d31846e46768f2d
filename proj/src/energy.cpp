#include "linf/energy.hpp"

#include "linf/parallel.hpp"
#include "linf/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace linf {

const char* to_string(VariationClass c) {
  switch (c) {
    case VariationClass::parallel: return "parallel";
    case VariationClass::perpendicular: return "perpendicular";
    case VariationClass::constant: return "constant";
  }
  return "unknown";
}

NodeMask full_mask(const SampledMap& u) { return NodeMask(u.node_count(), true); }

NodeMask box_mask(const SampledMap& u, const std::vector<int>& lo, const std::vector<int>& hi) {
  const BoxDomain& d = u.domain();
  require(static_cast<int>(lo.size()) == d.dim() && static_cast<int>(hi.size()) == d.dim(),
          "box_mask: index dimension mismatch");
  NodeMask m(u.node_count(), false);
  for (NodeIndex k = 0; k < u.node_count(); ++k) {
    const auto idx = d.multi_index(k);
    bool in = true;
    for (int a = 0; a < d.dim() && in; ++a) in = idx[a] >= lo[a] && idx[a] <= hi[a];
    m[k] = in;
  }
  return m;
}

std::size_t mask_count(const NodeMask& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

AffineVariation AffineVariation::scaled(double t) const {
  AffineVariation out = *this;
  out.offset *= t;
  out.matrix *= t;
  if (out.provenance.direction.size() > 0) out.provenance.direction *= t;
  if (out.provenance.null_coeffs.size() > 0) out.provenance.null_coeffs *= t;
  return out;
}

AffineVariation AffineVariation::constant(const Vector& base_point, const Vector& c) {
  AffineVariation a;
  a.base_point = base_point;
  a.offset = c;
  a.matrix = Matrix::Zero(c.size(), base_point.size());
  a.class_tag = VariationClass::constant;
  a.provenance.point = base_point;
  return a;
}

// ---------------------------------------------------------------------------

EnergyContext::EnergyContext(const HamiltonianModel& model, const SampledMap& u) : model_(model), map_(u) {
  require(model.n() == u.n() && model.N() == u.N(), "EnergyContext: model and map dimensions differ");
  const std::size_t count = u.node_count();
  x_.resize(count);
  u_.resize(count);
  du_.resize(count);
  jets_.resize(count);
  parallel_for(count, [&](std::size_t k) {
    x_[k] = u.domain().point(k);
    u_[k] = u.value(k);
    du_[k] = u.gradient(k);
    jets_[k] = eval_first_order(model, x_[k], u_[k], du_[k]);
  });
}

double EnergyContext::perturbed_sup(const NodeMask& mask, const AffineVariation& A, double lambda) const {
  require(mask.size() == x_.size(), "perturbed_sup: mask size mismatch");
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  const Matrix dP = lambda * A.matrix;
  for (NodeIndex k = 0; k < x_.size(); ++k) {
    if (!mask[k]) continue;
    any = true;
    const double v = model_.value(x_[k], u_[k] + lambda * A(x_[k]), du_[k] + dP);
    best = std::max(best, v);
  }
  require(any, "perturbed_sup: empty subdomain");
  return best;
}

EnergyReport sup_energy(const EnergyContext& ctx, const NodeMask& mask) {
  require(mask.size() == ctx.map().node_count(), "sup_energy: mask size mismatch");
  EnergyReport r;
  r.energy = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (NodeIndex k = 0; k < mask.size(); ++k)
    if (mask[k]) {
      any = true;
      r.energy = std::max(r.energy, ctx.h(k));
    }
  require(any, "sup_energy: empty subdomain");
  r.tolerance_used = argmax_tolerance(r.energy);
  for (NodeIndex k = 0; k < mask.size(); ++k)
    if (mask[k] && ctx.h(k) >= r.energy - r.tolerance_used) r.argmax_nodes.push_back(k);
  return r;
}

EnergyReport sup_energy(const HamiltonianModel& model, const SampledMap& u, const NodeMask& mask) {
  return sup_energy(EnergyContext(model, u), mask);
}

NodeMask sublevel_neighborhood(const EnergyContext& ctx, NodeIndex x, double eps) {
  const BoxDomain& d = ctx.map().domain();
  const double dist = d.steps_to_boundary(x) * d.spacing();
  if (!(eps > 0.0 && eps < dist)) throw std::out_of_range("sublevel_neighborhood: eps out of range");

  const double level = ctx.h(x) + argmax_tolerance(ctx.h(x));
  auto below = [&](NodeIndex k) { return ctx.h(k) <= level; };
  const Vector& xp = ctx.point(x);
  const auto center = d.multi_index(x);
  const int reach = static_cast<int>(std::ceil(eps / d.spacing()));

  NodeMask mask(d.node_count(), false);
  std::vector<int> idx(center.size());
  for (std::size_t a = 0; a < idx.size(); ++a) idx[a] = center[a] - reach;
  // Odometer over the cube of half-width `reach` around x.
  while (true) {
    bool inside = true;
    for (int a = 0; a < d.dim() && inside; ++a) inside = idx[a] >= 0 && idx[a] < d.counts()[a];
    if (inside) {
      const NodeIndex y = d.flat_index(idx);
      if ((ctx.point(y) - xp).norm() < eps && below(y)) {
        bool interior = true;
        for (int a = 0; a < d.dim() && interior; ++a)
          for (int s : {-1, 1}) {
            const auto nb = d.offset(y, a, s);
            if (!nb || !below(*nb)) {
              interior = false;
              break;
            }
          }
        mask[y] = interior;
      }
    }
    int a = d.dim() - 1;
    while (a >= 0 && idx[a] == center[a] + reach) {
      idx[a] = center[a] - reach;
      --a;
    }
    if (a < 0) break;
    ++idx[a];
  }
  return mask;
}

NodeMask sublevel_neighborhood(const HamiltonianModel& model, const SampledMap& u, NodeIndex x, double eps) {
  return sublevel_neighborhood(EnergyContext(model, u), x, eps);
}

RateFunction rate_function(const EnergyContext& ctx, const AffineVariation& A, const NodeMask& mask) {
  const double base = sup_energy(ctx, mask).energy;
  return [&ctx, A, mask, base](double lambda) {
    require(lambda >= 0.0, "rate_function: lambda must be non-negative");
    if (lambda == 0.0) return 0.0;
    return ctx.perturbed_sup(mask, A, lambda) - base;
  };
}

RateFunction rate_function(const HamiltonianModel& model, const SampledMap& u, const AffineVariation& A,
                           const NodeMask& mask) {
  auto ctx = std::make_shared<const EnergyContext>(model, u);
  RateFunction inner = rate_function(*ctx, A, mask);
  return [ctx, inner](double lambda) { return inner(lambda); };
}

DiniResult dini_lower(const RateFunction& r, double lambda0, int K) {
  require(lambda0 > 0.0, "dini_lower: lambda0 must be positive");
  require(K >= 3, "dini_lower: K must be at least 3");
  DiniResult d;
  d.value = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= K; ++k) {
    const double lam = std::ldexp(lambda0, -k);
    const double q = r(lam) / lam;
    d.lambdas.push_back(lam);
    d.quotients.push_back(q);
    d.value = std::min(d.value, q);
  }
  return d;
}

// ---------------------------------------------------------------------------

Matrix ScriptLSpace::member(const Vector& coeffs) const {
  Matrix q = particular;
  if (degenerate) return q;
  require(coeffs.size() == 0 || coeffs.size() == static_cast<Eigen::Index>(null_basis.size()),
          "ScriptLSpace::member: coefficient count mismatch");
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) q += coeffs(k) * null_basis[static_cast<std::size_t>(k)];
  return q;
}

ScriptLSpace script_L(const HamiltonianJet& hj, const SecondOrderJet& jet, const Vector& eta, double rel_tol) {
  const int N = jet.N();
  const int n = jet.n();
  require(eta.size() == N, "script_L: eta has wrong dimension");
  const Vector fperp = f_perp(hj, jet);
  const Vector fpar = f_parallel(hj, jet);
  const double scale = 1.0 + std::abs(hj.h) + hj.h_P.norm() + fpar.norm() + fperp.norm();

  ScriptLSpace L;
  L.particular = Matrix::Zero(N, n);
  const double hp2 = hj.h_P.squaredNorm();
  if (std::sqrt(hp2) <= rel_tol * scale) {
    L.degenerate = true;
    return L;
  }
  L.particular = (-eta.dot(fperp) / hp2) * hj.h_P;

  // Orthonormal basis of the Frobenius complement of h_P via one Householder reflection.
  const int np = N * n;
  Matrix v(np, 1);
  for (int a = 0; a < N; ++a)
    for (int i = 0; i < n; ++i) v(pair_index(a, i, n), 0) = hj.h_P(a, i);
  Eigen::HouseholderQR<Matrix> qr(v);
  const Matrix Q = qr.householderQ() * Matrix::Identity(np, np);
  for (int c = 1; c < np; ++c) {
    Matrix B(N, n);
    for (int a = 0; a < N; ++a)
      for (int i = 0; i < n; ++i) B(a, i) = Q(pair_index(a, i, n), c);
    L.null_basis.push_back(std::move(B));
  }
  return L;
}

ScriptLSpace script_L(const HamiltonianModel& model, const SecondOrderJet& jet, const Vector& eta,
                      double rel_tol) {
  check_jet_shapes(jet, model.n(), model.N());
  return script_L(eval_jet(model, jet.x, jet.eta, jet.P), jet, eta, rel_tol);
}

SecondOrderJet jet_at(const SampledMap& u, NodeIndex node, const HessianTensor& X) {
  return SecondOrderJet::make(u.domain().point(node), u.value(node), u.gradient(node), X);
}

AffineVariation make_parallel_variation(const HamiltonianModel& model, const SampledMap& u, NodeIndex x,
                                        const Vector& xi, const HessianTensor& X) {
  require(xi.size() == u.N(), "make_parallel_variation: xi has wrong dimension");
  const SecondOrderJet jet = jet_at(u, x, X);
  const Vector fpar = f_parallel(model, jet);
  AffineVariation A;
  A.base_point = jet.x;
  A.offset = Vector::Zero(u.N());
  A.matrix = xi * fpar.transpose();
  A.class_tag = VariationClass::parallel;
  A.provenance.point = jet.x;
  A.provenance.direction = xi;
  A.provenance.atom = jet.X;
  return A;
}

std::optional<AffineVariation> make_perpendicular_variation(const HamiltonianModel& model, const SampledMap& u,
                                                            NodeIndex x, int normal_index,
                                                            const Vector& null_coeffs, const HessianTensor& X,
                                                            double rel_tol) {
  const SecondOrderJet jet = jet_at(u, x, X);
  const HamiltonianJet hj = eval_jet(model, jet.x, jet.eta, jet.P);
  const auto basis = range_complement_basis(hj.h_P, rel_tol);
  if (normal_index < 0 || normal_index >= static_cast<int>(basis.size())) return std::nullopt;

  const Vector& nx = basis[static_cast<std::size_t>(normal_index)];
  const ScriptLSpace L = script_L(hj, jet, nx, rel_tol);

  AffineVariation A;
  A.base_point = jet.x;
  A.offset = nx;
  A.matrix = L.member(null_coeffs);
  A.class_tag = VariationClass::perpendicular;
  A.provenance.point = jet.x;
  A.provenance.direction = nx;
  A.provenance.atom = jet.X;
  A.provenance.null_coeffs = L.degenerate ? Vector() : null_coeffs;
  A.provenance.normal_index = normal_index;

  const Vector fperp = f_perp(hj, jet);
  const double scale = 1.0 + std::abs(hj.h) + hj.h_P.norm() + f_parallel(hj, jet).norm() + fperp.norm();
  const double normal_res = (nx.transpose() * hj.h_P).norm();
  const double affine_res = L.degenerate ? A.matrix.norm() : std::abs(frobenius(hj.h_P, A.matrix) + nx.dot(fperp));
  if (normal_res > 1e-9 * scale || affine_res > 1e-9 * scale * (1.0 + null_coeffs.norm()))
    throw std::logic_error("make_perpendicular_variation: constructed variation violates its class identities");
  return A;
}

// ---------------------------------------------------------------------------

namespace {

bool touches_mask(const BoxDomain& d, const NodeMask& mask, NodeIndex k) {
  if (mask[k]) return true;
  for (int a = 0; a < d.dim(); ++a)
    for (int s : {-1, 1}) {
      const auto nb = d.offset(k, a, s);
      if (nb && mask[*nb]) return true;
    }
  return false;
}

}  // namespace

MembershipResult variation_membership(const HamiltonianModel& model, const SampledMap& u, const AffineVariation& A,
                                      const NodeMask& mask, double tol, const HessianOptions& hess) {
  if (A.class_tag == VariationClass::constant) {
    MembershipResult res;
    res.matrix_residual = A.matrix.norm();
    res.member = res.matrix_residual <= tol;
    if (!res.member) res.diagnostics.push_back("constant-tagged variation has a nonzero matrix");
    return res;
  }
  return variation_membership(EnergyContext(model, u), A, mask, tol, hess);
}

MembershipResult variation_membership(const EnergyContext& ctx, const AffineVariation& A, const NodeMask& mask,
                                      double tol, const HessianOptions& hess) {
  const HamiltonianModel& model = ctx.model();
  const SampledMap& u = ctx.map();
  MembershipResult res;
  if (A.class_tag == VariationClass::constant) {
    res.matrix_residual = A.matrix.norm();
    res.member = res.matrix_residual <= tol;
    if (!res.member) res.diagnostics.push_back("constant-tagged variation has a nonzero matrix");
    return res;
  }

  const BoxDomain& d = u.domain();
  const auto anchor = d.node_at(A.base_point);
  if (!anchor) {
    res.diagnostics.push_back("anchor is not a grid node");
    return res;
  }
  if (!A.provenance.atom) {
    res.diagnostics.push_back("provenance carries no hessian atom");
    return res;
  }

  const EnergyReport E = sup_energy(ctx, mask);
  res.argmax_gap = E.energy - ctx.h(*anchor);
  bool ok = true;
  if (res.argmax_gap > E.tolerance_used || !touches_mask(d, mask, *anchor)) {
    res.diagnostics.push_back("anchor is not in the argmax set of the subdomain");
    ok = false;
  }

  const HessianTensor& atom = *A.provenance.atom;
  const AtomSet atoms = hessian_atoms(u, *anchor, hess);
  res.atom_distance = std::numeric_limits<double>::infinity();
  for (const auto& X : atoms.atoms) res.atom_distance = std::min(res.atom_distance, (X - atom).norm());
  if (!(res.atom_distance <= std::max(atoms.cluster_radius, tol * (1.0 + atom.norm())))) {
    res.diagnostics.push_back("provenance atom is not among the computed reduced-support atoms");
    ok = false;
  }

  const SecondOrderJet jet = jet_at(u, *anchor, atom);
  const HamiltonianJet hj = eval_jet(model, jet.x, jet.eta, jet.P);
  const Vector fpar = f_parallel(hj, jet);
  const Vector fperp = f_perp(hj, jet);
  const double scale = 1.0 + std::abs(hj.h) + hj.h_P.norm() + fpar.norm() + fperp.norm();

  if (A.class_tag == VariationClass::parallel) {
    res.offset_residual = A.offset.norm();
    if (res.offset_residual > tol) {
      res.diagnostics.push_back("parallel class requires A(x) = 0");
      ok = false;
    }
    const Vector& xi = A.provenance.direction;
    if (xi.size() != u.N()) {
      res.diagnostics.push_back("provenance direction has wrong dimension");
      ok = false;
    } else {
      res.matrix_residual = (A.matrix - xi * fpar.transpose()).norm();
      if (res.matrix_residual > tol * scale) {
        res.diagnostics.push_back("DA differs from xi (x) F_par");
        ok = false;
      }
    }
  } else {
    res.offset_residual = (A.offset.transpose() * hj.h_P).norm();
    if (res.offset_residual > tol * scale) {
      res.diagnostics.push_back("A(x) is not normal to the range of H_P");
      ok = false;
    }
    const ScriptLSpace L = script_L(hj, jet, A.offset);
    res.matrix_residual = L.degenerate ? A.matrix.norm()
                                       : std::abs(frobenius(hj.h_P, A.matrix) + A.offset.dot(fperp));
    if (res.matrix_residual > tol * scale) {
      res.diagnostics.push_back("DA is not in the affine space L(x, A(x), X)");
      ok = false;
    }
  }
  res.member = ok;
  return res;
}

double first_variation_bound(const EnergyContext& ctx, const AffineVariation& A, const NodeMask& mask) {
  require(mask.size() == ctx.map().node_count(), "first_variation_bound: mask size mismatch");
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (NodeIndex k = 0; k < mask.size(); ++k) {
    if (!mask[k]) continue;
    any = true;
    const auto& j = ctx.first_order(k);
    best = std::max(best, frobenius(j.h_P, A.matrix) + j.h_eta.dot(A(ctx.point(k))));
  }
  require(any, "first_variation_bound: empty subdomain");
  return best;
}

double first_variation_bound(const HamiltonianModel& model, const SampledMap& u, const AffineVariation& A,
                             const NodeMask& mask) {
  return first_variation_bound(EnergyContext(model, u), A, mask);
}

}  // namespace linf
