#include "linf/checker.hpp"

#include "linf/parallel.hpp"
#include "linf/pde_operator.hpp"
#include "linf/projector.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <stdexcept>

namespace linf {

void CheckConfig::validate() const {
  require(!epsilon_fractions.empty(), "check: epsilon ladder is empty");
  for (double e : epsilon_fractions) require(e > 0.0 && std::isfinite(e), "check: epsilon fractions must be positive");
  require(residual_tol > 0.0 && energy_tol > 0.0 && c2_tol > 0.0 && rank_tol > 0.0,
          "check: tolerances must be positive");
  require(lambda0 > 0.0, "check: lambda0 must be positive");
  require(lambda_levels >= 3, "check: the lambda ladder needs at least 4 rungs");
  require(points >= 1 || !explicit_points.empty(), "check: no points requested");
  require(hessian.scale_levels >= 1, "check: scale ladder is empty");
  for (double s : hessian.scales) require(s > 0.0, "check: scales must be positive");
  require(null_samples >= 1, "check: null_samples must be at least 1");
}

std::vector<double> CheckConfig::lambda_ladder() const {
  std::vector<double> out;
  for (int k = 0; k <= lambda_levels; ++k) out.push_back(std::ldexp(lambda0, -k));
  return out;
}

const char* to_string(CheckDirection d) {
  switch (d) {
    case CheckDirection::dsolution_residual: return "dsolution_residual";
    case CheckDirection::min_to_pde: return "min_to_pde";
    case CheckDirection::pde_to_min: return "pde_to_min";
    case CheckDirection::c2_corollary: return "c2_corollary";
  }
  return "unknown";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

std::mt19937_64 point_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::vector<NodeIndex> sample_nodes(const SampledMap& u, int margin, std::size_t count, std::uint64_t seed) {
  const BoxDomain& d = u.domain();
  std::vector<NodeIndex> eligible;
  for (NodeIndex k = 0; k < d.node_count(); ++k)
    if (d.steps_to_boundary(k) >= margin) eligible.push_back(k);
  if (eligible.size() <= count) return eligible;
  std::vector<NodeIndex> out;
  auto rng = point_rng(seed, 0x5a3c9e1dULL);
  std::sample(eligible.begin(), eligible.end(), std::back_inserter(out), count, rng);
  return out;
}

namespace {

constexpr std::uint64_t kSaltForward = 0x1f0a;
constexpr std::uint64_t kSaltConverse = 0x2e0b;
constexpr std::uint64_t kSaltCorollary = 0x3d0c;

std::vector<NodeIndex> resolve_points(const SampledMap& u, const CheckConfig& cfg, int margin) {
  if (cfg.explicit_points.empty()) return sample_nodes(u, margin, cfg.points, cfg.seed);
  std::vector<NodeIndex> out;
  for (const auto& p : cfg.explicit_points) {
    require(p.size() == u.n(), "check: explicit point has wrong dimension");
    const auto node = u.domain().node_at(p);
    require(node.has_value(), "check: explicit point is not a grid node");
    out.push_back(*node);
  }
  return out;
}

struct PointResidual {
  PointRecord rec;
  std::vector<HessianTensor> atoms;
};

PointResidual residual_at(const HamiltonianModel& model, const SampledMap& u, NodeIndex node,
                          const CheckConfig& cfg) {
  PointResidual out;
  PointRecord& rec = out.rec;
  rec.node = node;
  rec.x = u.domain().point(node);
  AtomSet atoms = hessian_atoms(u, node, cfg.hessian);
  rec.atoms = atoms.atoms.size();
  rec.escaped_fraction = atoms.escaped_fraction;
  rec.trivially_satisfied = atoms.atoms.empty();
  for (const auto& X : atoms.atoms) {
    const OperatorValue op = f_infinity(model, jet_at(u, node, X), cfg.rank_tol);
    rec.residual = std::max(rec.residual, op.full.norm());
    rec.tangential = std::max(rec.tangential, op.tangential.norm());
    rec.normal = std::max(rec.normal, op.normal.norm());
    rec.rank_ambiguous = rec.rank_ambiguous || op.rank_ambiguous;
  }
  out.atoms = std::move(atoms.atoms);
  return out;
}

Vector random_normal(std::mt19937_64& rng, int size) {
  std::normal_distribution<double> g;
  Vector v(size);
  for (int k = 0; k < size; ++k) v(k) = g(rng);
  return v;
}

void finalize(CheckReport& rep) {
  rep.sampled = rep.records.size();
  rep.evaluated = rep.excluded = rep.excluded_rank_ambiguous = rep.excluded_empty_neighborhood = 0;
  rep.witnesses = rep.violations = 0;
  rep.max_residual = 0.0;
  for (const auto& r : rep.records) {
    if (!r.exclusion.empty()) {
      ++rep.excluded;
      if (r.exclusion == "rank-ambiguous") ++rep.excluded_rank_ambiguous;
      if (r.exclusion == "assm-screen") ++rep.excluded_empty_neighborhood;
      continue;
    }
    ++rep.evaluated;
    rep.max_residual = std::max(rep.max_residual, r.residual);
    if (r.witness) ++rep.witnesses;
    if (r.violates) ++rep.violations;
  }
  if (rep.violations > 0) {
    rep.verdict = Verdict::fail;
  } else if (rep.evaluated == 0) {
    rep.verdict = Verdict::inconclusive;
    if (rep.reason.empty()) rep.reason = "no evaluable points";
  } else {
    rep.verdict = Verdict::pass;
  }
}

}  // namespace

std::vector<AffineVariation> class_variations(const HamiltonianModel& model, const SampledMap& u, NodeIndex node,
                                              const HessianTensor& X, const CheckConfig& cfg,
                                              std::mt19937_64& rng) {
  std::vector<AffineVariation> out;
  const int N = u.N();
  for (int a = 0; a < N; ++a) {
    const Vector e = Vector::Unit(N, a);
    out.push_back(make_parallel_variation(model, u, node, e, X));
    out.push_back(make_parallel_variation(model, u, node, -e, X));
  }
  for (std::size_t r = 0; r < cfg.random_directions; ++r)
    out.push_back(make_parallel_variation(model, u, node, random_normal(rng, N), X));

  const int null_dim = N * u.n() - 1;
  const std::size_t draws = null_dim > 0 ? cfg.null_samples : 1;
  for (int k = 0;; ++k) {
    bool any = false;
    for (std::size_t s = 0; s < draws; ++s) {
      const Vector coeffs = s == 0 ? Vector::Zero(null_dim) : random_normal(rng, null_dim);
      auto A = make_perpendicular_variation(model, u, node, k, coeffs, X, cfg.rank_tol);
      if (!A) break;
      any = true;
      out.push_back(A->scaled(-1.0));
      out.push_back(std::move(*A));
    }
    if (!any) break;
  }
  return out;
}

// ---------------------------------------------------------------------------

CheckReport dsolution_residual(const HamiltonianModel& model, const SampledMap& u, const CheckConfig& cfg) {
  cfg.validate();
  CheckReport rep;
  rep.direction = CheckDirection::dsolution_residual;
  rep.residual_tol = cfg.residual_tol;
  rep.energy_tol = cfg.energy_tol;

  const auto nodes = resolve_points(u, cfg, stencil_steps(u, cfg.hessian) + 1);
  if (nodes.empty()) rep.reason = "no interior node leaves room for the difference-quotient stencil";
  rep.records.resize(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t k) {
    PointRecord rec = residual_at(model, u, nodes[k], cfg).rec;
    if (rec.rank_ambiguous && cfg.exclude_rank_ambiguous) {
      rec.exclusion = "rank-ambiguous";
      rec.status = "excluded";
    } else if (rec.trivially_satisfied) {
      rec.status = "trivially-satisfied";
    } else {
      rec.violates = rec.residual > cfg.residual_tol;
      rec.status = rec.violates ? "residual-exceeds-tol" : "ok";
    }
    rep.records[k] = std::move(rec);
  });
  finalize(rep);
  return rep;
}

CheckReport check_min_to_pde(const HamiltonianModel& model, const SampledMap& u, const CheckConfig& cfg) {
  cfg.validate();
  CheckReport rep;
  rep.direction = CheckDirection::min_to_pde;
  rep.residual_tol = cfg.residual_tol;
  rep.energy_tol = cfg.energy_tol;

  const BoxDomain& d = u.domain();
  std::vector<double> eps;
  for (double f : cfg.epsilon_fractions) eps.push_back(f * d.min_width());
  std::sort(eps.begin(), eps.end(), std::greater<>());
  const int eps_margin = static_cast<int>(std::floor(eps.back() / d.spacing())) + 1;
  const int margin = std::max(eps_margin, stencil_steps(u, cfg.hessian) + 1);

  const EnergyContext ctx(model, u);
  const auto ladder = cfg.lambda_ladder();
  const auto nodes = resolve_points(u, cfg, margin);
  if (nodes.empty()) rep.reason = "no interior node is far enough from the boundary for the stencil and eps ladder";
  rep.records.resize(nodes.size());

  parallel_for(nodes.size(), [&](std::size_t k) {
    const NodeIndex node = nodes[k];
    PointResidual pr = residual_at(model, u, node, cfg);
    PointRecord& rec = pr.rec;
    auto finish = [&] { rep.records[k] = std::move(rec); };

    if (rec.rank_ambiguous && cfg.exclude_rank_ambiguous) {
      rec.exclusion = "rank-ambiguous";
      rec.status = "excluded";
      return finish();
    }

    auto rng = point_rng(cfg.seed ^ kSaltForward, node);
    std::vector<AffineVariation> variations;
    for (const auto& X : pr.atoms) {
      auto v = class_variations(model, u, node, X, cfg, rng);
      std::move(v.begin(), v.end(), std::back_inserter(variations));
    }

    const double dist = d.steps_to_boundary(node) * d.spacing();
    bool any_neighborhood = false;
    for (double e : eps) {
      if (e >= dist) continue;
      NodeMask mask = sublevel_neighborhood(ctx, node, e);
      if (mask_count(mask) == 0) {
        rec.notes.push_back("empty neighbourhood at eps=" + std::to_string(e));
        continue;
      }
      any_neighborhood = true;
      // The anchor lies in the closure of the neighbourhood, where the supremum is attained.
      mask[node] = true;
      const double before = sup_energy(ctx, mask).energy;
      rec.epsilons.push_back(e);
      if (!variations.empty()) rec.bound_trend.push_back(first_variation_bound(ctx, variations.front(), mask));

      for (const auto& A : variations) {
        if (rec.witness) break;
        ++rec.variations_tested;
        for (double t : ladder) {
          const double after = ctx.perturbed_sup(mask, A, t);
          if (before - after > cfg.energy_tol) {
            rec.witness = Witness{e, t, before, after, before - after, A};
            break;
          }
        }
      }
      if (rec.witness) break;
    }

    for (std::size_t i = 1; i < rec.bound_trend.size(); ++i)
      if (rec.bound_trend[i] > rec.bound_trend[i - 1] + 1e-12 * (1.0 + std::abs(rec.bound_trend[i - 1])))
        rec.trend_nonincreasing = false;

    if (!any_neighborhood) {
      rec.exclusion = "assm-screen";
      rec.status = "excluded";
    } else if (rec.witness) {
      rec.energy_gap = rec.witness->drop;
      rec.violates = true;
      rec.status = "non-minimal";
    } else if (rec.trivially_satisfied) {
      rec.status = "trivially-satisfied";
    } else if (rec.residual > cfg.residual_tol) {
      rec.violates = true;
      rec.status = "implication-violated";
    } else {
      rec.status = "minimal-and-solves";
    }
    finish();
  });
  finalize(rep);
  return rep;
}

CheckReport check_pde_to_min(const HamiltonianModel& model, const SampledMap& u, const CheckConfig& cfg,
                             const CheckReport* pde_report) {
  cfg.validate();
  CheckReport rep;
  rep.direction = CheckDirection::pde_to_min;
  rep.residual_tol = cfg.residual_tol;
  rep.energy_tol = cfg.energy_tol;
  if (!model.convex()) {
    rep.verdict = Verdict::inconclusive;
    rep.reason = "convexity hypothesis unmet";
    return rep;
  }
  std::optional<CheckReport> own;
  if (!pde_report) own = dsolution_residual(model, u, cfg);
  const CheckReport& pde = pde_report ? *pde_report : *own;
  if (pde.verdict != Verdict::pass) {
    rep.verdict = Verdict::inconclusive;
    rep.reason = "PDE residual check did not pass";
    return rep;
  }

  const BoxDomain& d = u.domain();
  const int margin = stencil_steps(u, cfg.hessian) + 1;
  const EnergyContext ctx(model, u);
  const auto ladder = cfg.lambda_ladder();

  struct Anchor {
    NodeIndex node;
    std::size_t subdomain;
  };
  std::vector<NodeMask> masks;
  std::vector<double> energies;
  std::vector<Anchor> anchors;
  std::vector<std::string> skipped;
  for (std::size_t s = 0; s < cfg.subdomains; ++s) {
    auto rng = point_rng(cfg.seed ^ kSaltConverse, s);
    std::vector<int> lo(d.dim()), hi(d.dim());
    bool room = true;
    for (int a = 0; a < d.dim(); ++a) {
      const int first = margin;
      const int last = d.counts()[a] - 1 - margin;
      const int span = last - first + 1;
      if (span < 3) {
        room = false;
        break;
      }
      const int longest = std::min(span, std::max(3, d.counts()[a] / 4));
      const int len = std::uniform_int_distribution<int>(3, longest)(rng);
      lo[a] = std::uniform_int_distribution<int>(first, last - len + 1)(rng);
      hi[a] = lo[a] + len - 1;
    }
    if (!room) {
      rep.reason = "grid too small for sub-box sampling";
      break;
    }
    NodeMask mask = box_mask(u, lo, hi);
    const EnergyReport E = sup_energy(ctx, mask);
    std::vector<NodeIndex> chosen;
    if (E.argmax_nodes.size() <= cfg.anchors_per_subdomain) {
      chosen = E.argmax_nodes;
    } else {
      std::sample(E.argmax_nodes.begin(), E.argmax_nodes.end(), std::back_inserter(chosen),
                  cfg.anchors_per_subdomain, rng);
    }
    for (NodeIndex a : chosen) anchors.push_back({a, masks.size()});
    masks.push_back(std::move(mask));
    energies.push_back(E.energy);
  }

  rep.records.resize(anchors.size());
  parallel_for(anchors.size(), [&](std::size_t k) {
    const Anchor& an = anchors[k];
    const NodeMask& mask = masks[an.subdomain];
    const double before = energies[an.subdomain];
    PointRecord rec;
    rec.node = an.node;
    rec.x = d.point(an.node);
    rec.notes.push_back("subdomain " + std::to_string(an.subdomain));
    const AtomSet atoms = hessian_atoms(u, an.node, cfg.hessian);
    rec.atoms = atoms.atoms.size();
    rec.escaped_fraction = atoms.escaped_fraction;
    rec.trivially_satisfied = atoms.atoms.empty();

    auto rng = point_rng(cfg.seed ^ kSaltConverse, an.node + 0x9e3779b9ULL * (an.subdomain + 1));
    std::vector<AffineVariation> variations;
    variations.push_back(AffineVariation::constant(rec.x, random_normal(rng, u.N())));
    for (const auto& X : atoms.atoms) {
      auto v = class_variations(model, u, an.node, X, cfg, rng);
      std::move(v.begin(), v.end(), std::back_inserter(variations));
    }

    rec.energy_gap = std::numeric_limits<double>::infinity();
    for (const auto& A : variations) {
      ++rec.variations_tested;
      for (double t : ladder) {
        const double after = ctx.perturbed_sup(mask, A, t);
        const double r = after - before;
        rec.energy_gap = std::min(rec.energy_gap, r);
        if (r < -cfg.energy_tol && !rec.witness) rec.witness = Witness{0.0, t, before, after, -r, A};
      }
    }
    rec.violates = rec.witness.has_value();
    rec.status = rec.violates ? "energy-decrease" : "minimal";
    rep.records[k] = std::move(rec);
  });
  finalize(rep);
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

double fd_step_for(double coord) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(coord));
}

FirstOrderJet jet_along(const HamiltonianModel& model, const SampledMap& u, const Vector& z) {
  const auto& an = u.analytic();
  return eval_first_order(model, z, an.u(z), an.Du(z));
}

}  // namespace

Vector fd_divergence(const HamiltonianModel& model, const SampledMap& u, NodeIndex node) {
  require(u.analytic().u && u.has_analytic_gradient(), "fd_divergence: map needs analytic u and Du");
  const Vector x = u.domain().point(node);
  Vector div = Vector::Zero(u.N());
  for (int i = 0; i < u.n(); ++i) {
    const double s = fd_step_for(x(i));
    Vector xp = x, xm = x;
    xp(i) += s;
    xm(i) -= s;
    div += (jet_along(model, u, xp).h_P.col(i) - jet_along(model, u, xm).h_P.col(i)) / (2.0 * s);
  }
  return div;
}

Vector fd_energy_gradient(const HamiltonianModel& model, const SampledMap& u, NodeIndex node) {
  require(u.analytic().u && u.has_analytic_gradient(), "fd_energy_gradient: map needs analytic u and Du");
  const Vector x = u.domain().point(node);
  Vector g(u.n());
  for (int i = 0; i < u.n(); ++i) {
    const double s = fd_step_for(x(i));
    Vector xp = x, xm = x;
    xp(i) += s;
    xm(i) -= s;
    g(i) = (jet_along(model, u, xp).h - jet_along(model, u, xm).h) / (2.0 * s);
  }
  return g;
}

double divergence_identity_residual(const HamiltonianModel& model, const SampledMap& u, NodeIndex node,
                                    const AffineVariation& A) {
  const Vector x = u.domain().point(node);
  const FirstOrderJet j = jet_along(model, u, x);
  return std::abs(frobenius(A.matrix, j.h_P) + A(x).dot(fd_divergence(model, u, node)));
}

CheckReport check_c2_corollary(const HamiltonianModel& model, const SampledMap& u, const CheckConfig& cfg) {
  cfg.validate();
  require(u.has_analytic_hessian() && u.has_analytic_gradient() && u.analytic().u,
          "check_c2_corollary: map needs analytic u, Du and D2u");
  CheckReport rep;
  rep.direction = CheckDirection::c2_corollary;
  rep.residual_tol = cfg.c2_tol;
  rep.energy_tol = cfg.energy_tol;

  const auto nodes = resolve_points(u, cfg, 1);
  rep.records.resize(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t k) {
    const NodeIndex node = nodes[k];
    PointRecord rec;
    rec.node = node;
    rec.x = u.domain().point(node);
    const HessianTensor X = u.analytic().D2u(rec.x).symmetrized();
    rec.atoms = 1;
    const SecondOrderJet jet = jet_at(u, node, X);
    const HamiltonianJet hj = eval_jet(model, jet.x, jet.eta, jet.P);
    const OperatorValue op = f_infinity(hj, jet, cfg.rank_tol);
    const double scale = op.scale;

    const Vector div = fd_divergence(model, u, node);
    rec.residual = (div - op.f_perp).norm();
    bool bad = rec.residual > cfg.c2_tol * scale;
    if (bad) rec.notes.push_back("divergence differs from the perpendicular contraction");

    const Vector grad_h = fd_energy_gradient(model, u, node);
    auto rng = point_rng(cfg.seed ^ kSaltCorollary, node);
    for (const auto& A : class_variations(model, u, node, X, cfg, rng)) {
      ++rec.variations_tested;
      double res = 0.0;
      double allowed = cfg.c2_tol * scale;
      if (A.class_tag == VariationClass::parallel) {
        res = (A.matrix - A.provenance.direction * grad_h.transpose()).norm();
        allowed *= 1.0 + A.provenance.direction.norm();
      } else {
        res = divergence_identity_residual(model, u, node, A);
        allowed *= 1.0 + A.offset.norm() + A.matrix.norm();
      }
      rec.identity_residual = std::max(rec.identity_residual, res);
      if (res > allowed) {
        bad = true;
        rec.notes.push_back(std::string(to_string(A.class_tag)) + " identity violated");
      }
    }
    rec.violates = bad;
    rec.status = bad ? "identity-violated" : "ok";
    rep.records[k] = std::move(rec);
  });
  finalize(rep);
  return rep;
}

// ---------------------------------------------------------------------------

CombinedReport run_all_checks(const HamiltonianModel& model, const SampledMap& u, const CheckConfig& cfg) {
  CombinedReport out;
  CheckReport pde = dsolution_residual(model, u, cfg);
  CheckReport fwd = check_min_to_pde(model, u, cfg);
  CheckReport conv = check_pde_to_min(model, u, cfg, &pde);

  if (model.convex() && pde.verdict == Verdict::pass && fwd.verdict == Verdict::pass &&
      conv.verdict == Verdict::fail) {
    out.contradiction = true;
    out.diagnostics.push_back(
        "contradiction: residuals vanish and minimality holds on the forward direction, but the converse found an "
        "energy decrease for a convex Hamiltonian");
  }
  for (const auto& r : fwd.records)
    if (r.exclusion.empty() && !r.trend_nonincreasing)
      out.diagnostics.push_back("first-variation bound increased as eps shrank at node " + std::to_string(r.node));

  out.parts.push_back(std::move(pde));
  out.parts.push_back(std::move(fwd));
  out.parts.push_back(std::move(conv));
  if (u.has_analytic_hessian() && u.has_analytic_gradient() && u.analytic().u)
    out.parts.push_back(check_c2_corollary(model, u, cfg));

  bool any_fail = out.contradiction;
  bool any_inconclusive = false;
  for (const auto& p : out.parts) {
    any_fail = any_fail || p.verdict == Verdict::fail;
    any_inconclusive = any_inconclusive || p.verdict == Verdict::inconclusive;
  }
  out.verdict = any_fail ? Verdict::fail : any_inconclusive ? Verdict::inconclusive : Verdict::pass;
  return out;
}

}  // namespace linf
