#include "linf/selftest.hpp"

#include "linf/checker.hpp"
#include "linf/energy.hpp"
#include "linf/fields.hpp"
#include "linf/hamiltonian.hpp"
#include "linf/pde_operator.hpp"
#include "linf/projector.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

namespace linf {

namespace {

using Rng = std::mt19937_64;

std::string sci(const char* label, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s %.3e", label, v);
  return buf;
}

Matrix gaussian(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = g(rng);
  return m;
}

Matrix mixed_rank(Rng& rng, int N, int n) {
  const int k = std::uniform_int_distribution<int>(0, std::min(N, n))(rng);
  if (k == 0) return Matrix::Zero(N, n);
  return gaussian(rng, N, k) * gaussian(rng, k, n);
}

HessianTensor random_hessian(Rng& rng, int N, int n) {
  HessianTensor X(N, n);
  for (int b = 0; b < N; ++b) {
    const Matrix S = gaussian(rng, n, n);
    X.set_slice(b, S + S.transpose());
  }
  return X;
}

SecondOrderJet random_jet(Rng& rng, int N, int n) {
  return SecondOrderJet::make(gaussian(rng, n, 1), gaussian(rng, N, 1), mixed_rank(rng, N, n),
                              random_hessian(rng, N, n));
}

SelftestItem projector_algebra(Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const int N = std::uniform_int_distribution<int>(1, 6)(rng);
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    const Matrix A = mixed_rank(rng, N, n);
    const OrthProjector p = orth_complement_projector(A);
    const Matrix U = range_basis(A);
    const Matrix& P = p.matrix;
    worst = std::max({worst, (P * P - P).norm(), (P - P.transpose()).norm(), (P * A).norm(),
                      (P + U * U.transpose() - Matrix::Identity(N, N)).norm()});
  }
  return {"projector-algebra", worst <= 1e-10, sci("max defect", worst)};
}

SelftestItem decoupling(Rng& rng) {
  double worst_orth = 0.0, worst_pyth = 0.0;
  for (const auto& name : builtin_hamiltonian_names()) {
    for (int t = 0; t < 200; ++t) {
      const int N = std::uniform_int_distribution<int>(1, 3)(rng);
      const int n = std::uniform_int_distribution<int>(1, 3)(rng);
      const HamiltonianModel H = builtin_hamiltonian(name, n, N);
      const OperatorValue op = f_infinity(H, random_jet(rng, N, n));
      const double tn = op.tangential.norm() * op.normal.norm();
      worst_orth = std::max(worst_orth, std::abs(op.tangential.dot(op.normal)) / std::max(tn, 1e-300));
      const double lhs = op.full.squaredNorm();
      const double rhs = op.tangential.squaredNorm() + op.normal.squaredNorm();
      worst_pyth = std::max(worst_pyth, std::abs(lhs - rhs) / std::max(1.0, lhs));
    }
  }
  const bool ok = worst_orth <= 1e-9 && worst_pyth <= 1e-8;
  return {"decoupling", ok, sci("orthogonality", worst_orth) + ", " + sci("pythagoras", worst_pyth)};
}

SelftestItem infinity_laplacian_case(Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int N = std::uniform_int_distribution<int>(1, 3)(rng);
    const int n = std::uniform_int_distribution<int>(1, 3)(rng);
    const SecondOrderJet jet = random_jet(rng, N, n);
    const OperatorValue op = f_infinity(builtin_hamiltonian("sq_norm", n, N), jet);
    const Vector reference = infinity_laplacian(jet.P, jet.X);
    // tangential = 4 (P (x) P) : X, normal = 2 |P|^2 [[P]]^perp trace(X)
    Vector first = Vector::Zero(N), trace = Vector::Zero(N);
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) first(a) += jet.P(a, i) * jet.P(b, j) * jet.X(b, i, j);
    for (int b = 0; b < N; ++b)
      for (int i = 0; i < n; ++i) trace(b) += jet.X(b, i, i);
    const Vector second = jet.P.squaredNorm() * (orth_complement_projector(jet.P).matrix * trace);
    const double scale = 1.0 + reference.norm() + first.norm() + second.norm();
    worst = std::max({worst, (op.tangential - 4.0 * first).norm() / scale,
                      (op.normal - 2.0 * second).norm() / scale, (reference - first - second).norm() / scale});
  }
  return {"infinity-laplacian", worst <= 1e-10, sci("max deviation", worst)};
}

SelftestItem jet_consistency(Rng& rng) {
  double worst = 0.0;
  bool ok = true;
  for (const auto& name : builtin_hamiltonian_names()) {
    const HamiltonianModel H = builtin_hamiltonian(name, 2, 2);
    std::vector<JetSample> samples;
    for (int t = 0; t < 10; ++t) samples.push_back({gaussian(rng, 2, 1), gaussian(rng, 2, 1), gaussian(rng, 2, 2)});
    const JetConsistencyReport rep = check_jet_consistency(H, samples, 1e-5);
    ok = ok && rep.pass;
    for (const auto& [block, dev] : rep.max_deviation) worst = std::max(worst, dev);
  }
  return {"jet-consistency", ok, sci("max analytic vs difference", worst)};
}

SelftestItem script_l_identities(Rng& rng) {
  double homog = 0.0, ident = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int N = std::uniform_int_distribution<int>(1, 3)(rng);
    const int n = std::uniform_int_distribution<int>(1, 3)(rng);
    const HamiltonianModel H = builtin_hamiltonian("sq_norm", n, N);
    SecondOrderJet jet = random_jet(rng, N, n);
    const HamiltonianJet hj = eval_jet(H, jet.x, jet.eta, jet.P);
    const Vector eta = gaussian(rng, N, 1);
    const double s = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
    const ScriptLSpace L = script_L(hj, jet, eta);
    const ScriptLSpace Ls = script_L(hj, jet, s * eta);
    homog = std::max(homog, (Ls.particular - s * L.particular).norm() / (1.0 + L.particular.norm()));
    for (std::size_t k = 0; k < L.null_basis.size(); ++k)
      homog = std::max(homog, (L.null_basis[k] - Ls.null_basis[k]).norm());
    if (!L.degenerate) {
      const OperatorValue op = f_infinity(hj, jet);
      const Matrix Q = L.member(gaussian(rng, static_cast<int>(L.null_basis.size()), 1));
      ident = std::max(ident, std::abs(frobenius(hj.h_P, Q) + eta.dot(op.f_perp)) / op.scale);
    }
  }
  return {"affine-space", homog <= 1e-12 && ident <= 1e-9,
          sci("homogeneity", homog) + ", " + sci("constraint", ident)};
}

SelftestItem quotient_clustering(Rng& rng) {
  double worst = 0.0;
  bool single = true;
  for (int t = 0; t < 10; ++t) {
    const Matrix S0 = gaussian(rng, 2, 2);
    const Matrix S = S0 + S0.transpose();
    const Vector b = gaussian(rng, 2, 1);
    BoxDomain box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0), 1.0 / 16.0);
    SampledMap::Analytic an;
    an.u = [S, b](const Vector& x) { return Vector::Constant(1, 0.5 * x.dot(S * x) + b.dot(x)); };
    const SampledMap u = SampledMap::from_function(box, 1, an, "quadratic").without_analytic();
    const NodeIndex node = box.node_at(Vector::Zero(2)).value();
    const auto d = diffuse_hessian_support(u, node, default_scale_ladder(box.spacing()));
    single = single && d.support_atoms.size() == 1 && d.escaped_fraction == 0.0;
    if (!d.support_atoms.empty()) worst = std::max(worst, (d.support_atoms.front().slice(0) - S).norm());
  }
  return {"quotient-clustering", single && worst <= 1e-6, sci("max atom error", worst)};
}

SelftestItem known_solution() {
  const SampledMap u = test_map("linear", 2, 2, {std::nullopt, std::nullopt, BoxDomain(Vector::Zero(2), Vector::Ones(2), 1.0 / 16.0)});
  CheckConfig cfg;
  cfg.points = 6;
  cfg.subdomains = 2;
  const CombinedReport rep = run_all_checks(builtin_hamiltonian("sq_norm", 2, 2), u, cfg);
  return {"linear-solution", rep.verdict == Verdict::pass, std::string("verdict ") + to_string(rep.verdict)};
}

SelftestItem negative_case() {
  const SampledMap u = test_map("quadratic_bump", 2, 1);
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 2, 1);
  CheckConfig cfg;
  cfg.points = 6;
  const CheckReport pde = dsolution_residual(H, u, cfg);
  const CheckReport fwd = check_min_to_pde(H, u, cfg);
  const bool ok = pde.verdict == Verdict::fail && fwd.witnesses > 0;
  return {"quadratic-bump-negative", ok,
          sci("max residual", pde.max_residual) + ", witnesses " + std::to_string(fwd.witnesses)};
}

SelftestItem lemma_bounds(Rng& rng) {
  double worst = 0.0;
  const SampledMap u = test_map("quadratic_bump", 2, 2);
  for (const auto& name : {"sq_norm", "sq_norm_plus_potential"}) {
    const HamiltonianModel H = builtin_hamiltonian(name, 2, 2);
    const EnergyContext ctx(H, u);
    for (int t = 0; t < 10; ++t) {
      std::uniform_int_distribution<int> lo(0, 20);
      std::vector<int> a{lo(rng), lo(rng)};
      const NodeMask mask = box_mask(u, a, {a[0] + 8, a[1] + 8});
      AffineVariation A;
      A.base_point = gaussian(rng, 2, 1);
      A.offset = gaussian(rng, 2, 1);
      A.matrix = gaussian(rng, 2, 2);
      const DiniResult d = dini_lower(rate_function(ctx, A, mask));
      double fv = -1e300;
      for (NodeIndex k : sup_energy(ctx, mask).argmax_nodes) {
        const FirstOrderJet& j = ctx.first_order(k);
        fv = std::max(fv, frobenius(j.h_P, A.matrix) + j.h_eta.dot(A(ctx.point(k))));
      }
      worst = std::max(worst, fv - d.value);
    }
  }
  return {"dini-bound", worst <= 1e-7, sci("max bound defect", worst)};
}

}  // namespace

std::vector<SelftestItem> run_selftest(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SelftestItem> out;
  out.push_back(projector_algebra(rng));
  out.push_back(decoupling(rng));
  out.push_back(infinity_laplacian_case(rng));
  out.push_back(jet_consistency(rng));
  out.push_back(script_l_identities(rng));
  out.push_back(quotient_clustering(rng));
  out.push_back(known_solution());
  out.push_back(negative_case());
  out.push_back(lemma_bounds(rng));
  return out;
}

}  // namespace linf
