#include "helpers.hpp"

#include "linf/checker.hpp"
#include "linf/report.hpp"

#include <doctest.h>

#include <cstdlib>
#include <set>

using namespace linf;
using namespace testing_support;

namespace {

CheckConfig quick(std::size_t points = 6) {
  CheckConfig cfg;
  cfg.points = points;
  cfg.subdomains = 2;
  return cfg;
}

void check_accounting(const CheckReport& r) {
  CHECK(r.evaluated + r.excluded == r.sampled);
  CHECK(r.records.size() == r.sampled);
  for (const auto& rec : r.records)
    if (rec.status == "excluded") CHECK_FALSE(rec.exclusion.empty());
}

int rank(Verdict v) { return v == Verdict::pass ? 0 : v == Verdict::inconclusive ? 1 : 2; }

}  // namespace

TEST_SUITE("checker") {

TEST_CASE("linear maps pass every check") {
  std::mt19937_64 rng(51);
  for (int N = 1; N <= 2; ++N) {
    const SampledMap u = test_map("linear", 2, N, {gaussian(rng, N, 2), gaussian_vector(rng, N), std::nullopt});
    const HamiltonianModel H = builtin_hamiltonian("sq_norm", 2, N);
    const CombinedReport rep = run_all_checks(H, u, quick());
    CHECK(rep.verdict == Verdict::pass);
    CHECK_FALSE(rep.contradiction);
    REQUIRE(rep.parts.size() == 4);
    CHECK(rep.parts[0].max_residual == 0.0);
    for (const auto& p : rep.parts) {
      CHECK(p.verdict == Verdict::pass);
      check_accounting(p);
    }
    CHECK(rep.parts[1].witnesses == 0);
  }
}

TEST_CASE("constant variations leave the energy unchanged") {
  const SampledMap u = test_map("linear", 2, 2);
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 2, 2);
  const CheckReport r = check_pde_to_min(H, u, quick());
  CHECK(r.verdict == Verdict::pass);
  for (const auto& rec : r.records) CHECK(rec.energy_gap >= -1e-12);
}

TEST_CASE("Aronsson function") {
  const SampledMap u = test_map("aronsson43", 2, 1);
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 2, 1);
  CheckConfig cfg = quick(8);
  cfg.energy_tol = 1e-6;
  const CheckReport pde = dsolution_residual(H, u, cfg);
  CHECK(pde.verdict == Verdict::pass);
  CHECK(pde.max_residual <= 1e-6);
  CHECK(pde.evaluated > 0);
  const CheckReport conv = check_pde_to_min(H, u, cfg, &pde);
  CHECK(conv.verdict == Verdict::pass);
  CHECK(conv.evaluated > 0);
  const CheckReport c2 = check_c2_corollary(H, u, cfg);
  CHECK(c2.verdict == Verdict::pass);
  check_accounting(c2);
}

TEST_CASE("quadratic bump is rejected") {
  const SampledMap u = test_map("quadratic_bump", 2, 1);
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 2, 1);
  CheckConfig cfg = quick(10);
  const CheckReport pde = dsolution_residual(H, u, cfg);
  CHECK(pde.verdict == Verdict::fail);
  CHECK(pde.max_residual >= 0.1);
  for (const auto& rec : pde.records)
    if (rec.x.norm() > 0.1) CHECK(rec.residual >= 0.1);

  const CheckReport fwd = check_min_to_pde(H, u, cfg);
  CHECK(fwd.verdict == Verdict::fail);
  check_accounting(fwd);
  std::size_t with_witness = 0;
  for (const auto& rec : fwd.records) {
    if (!rec.exclusion.empty()) continue;
    if (rec.witness) {
      ++with_witness;
      CHECK(rec.witness->drop > cfg.energy_tol);
      CHECK(rec.witness->energy_after < rec.witness->energy_before);
      CHECK(rec.status == "non-minimal");
    }
  }
  CHECK(static_cast<double>(with_witness) >= 0.9 * static_cast<double>(fwd.evaluated));

  const CheckReport conv = check_pde_to_min(H, u, cfg, &pde);
  CHECK(conv.verdict == Verdict::inconclusive);
  CHECK(conv.reason == "PDE residual check did not pass");
}

TEST_CASE("a witness really lowers the energy") {
  const SampledMap u = test_map("quadratic_bump", 2, 1);
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 2, 1);
  const CheckReport fwd = check_min_to_pde(H, u, quick(4));
  const EnergyContext ctx(H, u);
  bool seen = false;
  for (const auto& rec : fwd.records) {
    if (!rec.witness) continue;
    seen = true;
    const Witness& w = *rec.witness;
    NodeMask m = sublevel_neighborhood(ctx, rec.node, w.epsilon);
    m[rec.node] = true;
    const double before = sup_energy(ctx, m).energy;
    const double after = ctx.perturbed_sup(m, w.variation, w.t);
    CHECK(before == doctest::Approx(w.energy_before));
    CHECK(after == doctest::Approx(w.energy_after));
    CHECK(before - after > 1e-8);
  }
  CHECK(seen);
}

TEST_CASE("empty neighbourhoods are screened out") {
  const SampledMap u = test_map("quadratic_bump", 2, 1);
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 2, 1);
  CheckConfig cfg = quick();
  cfg.explicit_points = {Vector::Zero(2)};
  const CheckReport fwd = check_min_to_pde(H, u, cfg);
  REQUIRE(fwd.records.size() == 1);
  CHECK(fwd.records[0].exclusion == "assm-screen");
  CHECK(fwd.excluded_empty_neighborhood == 1);
  CHECK(fwd.evaluated == 0);
  CHECK(fwd.verdict == Verdict::inconclusive);
  check_accounting(fwd);

  // The residual at the origin vanishes since Du = 0 there.
  const CheckReport pde = dsolution_residual(H, u, cfg);
  CHECK(pde.records[0].residual == 0.0);
}

TEST_CASE("converse direction requires convexity") {
  HamiltonianModel::Closures c = builtin_hamiltonian("sq_norm", 2, 1).closures();
  const HamiltonianModel H(2, 1, c, HamiltonianModel::default_fd_step(), false, "declared-nonconvex");
  const CheckReport r = check_pde_to_min(H, test_map("linear", 2, 1), quick());
  CHECK(r.verdict == Verdict::inconclusive);
  CHECK(r.reason == "convexity hypothesis unmet");
}

TEST_CASE("divergence identity and its fault injection") {
  const SampledMap u = test_map("aronsson43", 2, 1);
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 2, 1);
  const NodeIndex x = u.domain().node_at(Vector::Constant(2, 0.75)).value();
  const HessianTensor X = u.analytic().D2u(u.domain().point(x));
  const SecondOrderJet jet = jet_at(u, x, X);
  const OperatorValue op = f_infinity(H, jet);

  // Div(2 Du) = 2 Laplacian u = F_perp at the analytic hessian.
  CHECK((fd_divergence(H, u, x) - op.f_perp).norm() <= 1e-8 * op.scale);
  const Vector p = u.domain().point(x);
  const Vector grad_h = fd_energy_gradient(H, u, x);
  // h = 16/9 (x^{2/3} + y^{2/3}); dh/dx = 32/27 x^{-1/3}.
  CHECK(grad_h(0) == doctest::Approx(32.0 / 27.0 / std::cbrt(p(0))).epsilon(1e-8));
  CHECK(grad_h(1) == doctest::Approx(32.0 / 27.0 / std::cbrt(p(1))).epsilon(1e-8));

  // N = 1 with nonzero h_P: use a hand-built variation in L with offset 1.
  AffineVariation A;
  A.base_point = p;
  A.offset = Vector::Ones(1);
  const HamiltonianJet hj = eval_jet(H, jet.x, jet.eta, jet.P);
  A.matrix = script_L(hj, jet, A.offset).particular;
  A.class_tag = VariationClass::perpendicular;
  CHECK(divergence_identity_residual(H, u, x, A) <= 1e-8 * op.scale);

  std::mt19937_64 rng(52);
  for (int t = 0; t < 10; ++t) {
    AffineVariation bad = A;
    const Matrix bump = gaussian(rng, 1, 2);
    bad.matrix += bump;
    const double expected = std::abs(frobenius(bump, hj.h_P));
    CHECK(divergence_identity_residual(H, u, x, bad) == doctest::Approx(expected).epsilon(1e-6));
    if (expected > 1e-3) CHECK(divergence_identity_residual(H, u, x, bad) > 1e-8 * op.scale);
  }
}

TEST_CASE("corollary check flags a corrupted map") {
  // Analytic hessian that does not match the map: the divergence no longer equals F_perp.
  SampledMap base = test_map("aronsson43", 2, 1);
  SampledMap::Analytic an = base.analytic();
  const auto true_hessian = an.D2u;
  an.D2u = [true_hessian](const Vector& x) {
    HessianTensor X = true_hessian(x);
    X(0, 0, 0) += 0.5;
    return X;
  };
  const SampledMap u(base.domain(), 1, base.values(), an, "corrupted");
  const CheckReport r = check_c2_corollary(builtin_hamiltonian("sq_norm", 2, 1), u, quick(4));
  CHECK(r.verdict == Verdict::fail);
  CHECK(r.violations == r.evaluated);
  CHECK_THROWS_AS(check_c2_corollary(builtin_hamiltonian("sq_norm", 2, 1), base.without_analytic(), quick()),
                  std::invalid_argument);
}

TEST_CASE("rank-ambiguous points are excluded on request") {
  const Matrix B = (Matrix(2, 2) << 1.0, 0.0, 0.0, 5e-12).finished();
  const SampledMap u = test_map("linear", 2, 2, {B, Vector::Zero(2), std::nullopt});
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 2, 2);
  CheckConfig cfg = quick(5);
  const CheckReport ex = dsolution_residual(H, u, cfg);
  CHECK(ex.excluded_rank_ambiguous == ex.sampled);
  CHECK(ex.evaluated == 0);
  CHECK(ex.verdict == Verdict::inconclusive);
  for (const auto& rec : ex.records) {
    CHECK(rec.rank_ambiguous);
    CHECK(rec.exclusion == "rank-ambiguous");
  }
  check_accounting(ex);

  cfg.exclude_rank_ambiguous = false;
  const CheckReport kept = dsolution_residual(H, u, cfg);
  CHECK(kept.evaluated == kept.sampled);
  CHECK(kept.verdict == Verdict::pass);
}

TEST_CASE("reports are deterministic in the seed and thread count") {
  const SampledMap u = test_map("quadratic_bump", 2, 2);
  const HamiltonianModel H = builtin_hamiltonian("sq_norm_plus_potential", 2, 2);
  CheckConfig cfg = quick(5);
  cfg.seed = 1234;
  ::setenv("LINF_VARCALC_THREADS", "1", 1);
  const std::string one = to_json(run_all_checks(H, u, cfg)).dump();
  ::setenv("LINF_VARCALC_THREADS", "4", 1);
  const std::string four = to_json(run_all_checks(H, u, cfg)).dump();
  const std::string again = to_json(run_all_checks(H, u, cfg)).dump();
  ::unsetenv("LINF_VARCALC_THREADS");
  CHECK(one == four);
  CHECK(four == again);

  cfg.seed = 99;
  CHECK(to_json(dsolution_residual(H, u, cfg)).dump() != to_json(dsolution_residual(H, u, quick(5))).dump());
}

TEST_CASE("loosening tolerances never turns pass into fail") {
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 2, 1);
  const SampledMap aron = test_map("aronsson43", 2, 1).without_analytic();
  const SampledMap bump = test_map("quadratic_bump", 2, 1);
  for (const SampledMap* u : {&aron, &bump}) {
    CheckConfig cfg = quick(5);
    cfg.hessian.scale_levels = 2;
    int prev_pde = 3, prev_fwd = 3;
    for (double tol : {1e-8, 1e-6, 1e-3, 1.0, 100.0}) {
      cfg.residual_tol = tol;
      cfg.energy_tol = tol;
      const int pde = rank(dsolution_residual(H, *u, cfg).verdict);
      const int fwd = rank(check_min_to_pde(H, *u, cfg).verdict);
      CHECK(pde <= prev_pde);
      CHECK(fwd <= prev_fwd);
      prev_pde = pde;
      prev_fwd = fwd;
    }
  }
}

TEST_CASE("node sampling") {
  const SampledMap u = test_map("quadratic_bump", 2, 1);
  const auto a = sample_nodes(u, 5, 10, 7);
  CHECK(a == sample_nodes(u, 5, 10, 7));
  CHECK(a.size() == 10);
  CHECK(std::set<NodeIndex>(a.begin(), a.end()).size() == 10);
  for (NodeIndex k : a) CHECK(u.domain().steps_to_boundary(k) >= 5);
  CHECK(a != sample_nodes(u, 5, 10, 8));
  // Asking for more nodes than exist returns them all.
  CHECK(sample_nodes(u, 15, 1000, 1).size() == 9);
  CHECK(sample_nodes(u, 17, 10, 1).empty());
  CHECK(point_rng(1, 2)() == point_rng(1, 2)());
  CHECK(point_rng(1, 2)() != point_rng(1, 3)());
}

TEST_CASE("class variations cover both classes") {
  const SampledMap u = test_map("quadratic_bump", 2, 3);
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 2, 3);
  const NodeIndex x = u.domain().node_at(Vector::Constant(2, 0.5)).value();
  CheckConfig cfg;
  auto rng = point_rng(0, x);
  const auto vars = class_variations(H, u, x, hessian_atoms(u, x, {}).atoms.front(), cfg, rng);
  std::size_t par = 0, perp = 0;
  for (const auto& A : vars) {
    if (A.class_tag == VariationClass::parallel) ++par;
    if (A.class_tag == VariationClass::perpendicular) ++perp;
  }
  // +-e_alpha plus the random xi; two normal directions, two coefficient draws, two signs.
  CHECK(par == 2 * 3 + cfg.random_directions);
  CHECK(perp == 2 * cfg.null_samples * 2);
}

TEST_CASE("configuration validation") {
  CheckConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.residual_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = CheckConfig{};
  cfg.epsilon_fractions.clear();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = CheckConfig{};
  cfg.lambda_levels = 2;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = CheckConfig{};
  CHECK(cfg.lambda_ladder().size() == 9);
  CHECK(cfg.lambda_ladder().back() == std::ldexp(1e-2, -8));
}

}  // TEST_SUITE
