#include "helpers.hpp"

#include "linf/pde_operator.hpp"

#include <doctest.h>

using namespace linf;
using namespace testing_support;

namespace {

// Components of the infinity-Laplacian written with matrix algebra and a
// pseudo-inverse projector, independent of the library loops.
struct LaplacianTerms {
  Vector first;
  Vector second;
};

LaplacianTerms laplacian_oracle(const Matrix& P, const HessianTensor& X) {
  const int N = static_cast<int>(P.rows());
  const int n = static_cast<int>(P.cols());
  Vector v = Vector::Zero(n);
  Vector trace(N);
  for (int b = 0; b < N; ++b) {
    v += X.slice(b) * P.row(b).transpose();
    trace(b) = X.slice(b).trace();
  }
  const Matrix pinv = P.completeOrthogonalDecomposition().pseudoInverse();
  const Matrix proj = Matrix::Identity(N, N) - P * pinv;
  return {P * v, P.squaredNorm() * (proj * trace)};
}

SecondOrderJet random_jet(std::mt19937_64& rng, int N, int n, int rank) {
  return SecondOrderJet::make(gaussian_vector(rng, n), gaussian_vector(rng, N), rank_k(rng, N, n, rank),
                              symmetric_tensor(rng, N, n));
}

}  // namespace

TEST_SUITE("operator") {

TEST_CASE("parallel contraction for sq_norm") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 50; ++t) {
    const int N = 1 + t % 3, n = 1 + (t / 3) % 3;
    const SecondOrderJet jet = random_jet(rng, N, n, std::min(N, n));
    const HamiltonianModel H = builtin_hamiltonian("sq_norm", n, N);
    // 2 X_b P_b summed over b, as matrix-vector products.
    Vector expected = Vector::Zero(n);
    for (int b = 0; b < N; ++b) expected += 2.0 * jet.X.slice(b) * jet.P.row(b).transpose();
    CHECK((f_parallel(H, jet) - expected).norm() <= 1e-12 * (1.0 + expected.norm()));

    SecondOrderJet flat = jet;
    flat.X = HessianTensor(N, n);
    CHECK(f_parallel(H, flat).norm() == 0.0);
    CHECK(f_perp(H, flat).norm() == 0.0);
  }
}

TEST_CASE("scalar arithmetic") {
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 1, 1);
  HessianTensor X(1, 1);
  X(0, 0, 0) = -1.75;
  const SecondOrderJet jet = SecondOrderJet::make(Vector::Constant(1, 0.2), Vector::Constant(1, 3.0),
                                                  Matrix::Constant(1, 1, 1.5), X);
  CHECK(f_parallel(H, jet)(0) == doctest::Approx(2.0 * 1.5 * -1.75));
  CHECK(f_perp(H, jet)(0) == doctest::Approx(2.0 * -1.75));
  // N = 1 with p != 0: the projector vanishes, only the tangential part remains.
  const OperatorValue op = f_infinity(H, jet);
  CHECK(op.normal(0) == 0.0);
  CHECK(op.full(0) == doctest::Approx(2.0 * 1.5 * 2.0 * 1.5 * -1.75));
}

TEST_CASE("perpendicular contraction is twice the laplacian") {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 50; ++t) {
    const int N = 1 + t % 3, n = 1 + (t / 3) % 3;
    const SecondOrderJet jet = random_jet(rng, N, n, std::min(N, n));
    Vector lap(N);
    for (int b = 0; b < N; ++b) lap(b) = jet.X.slice(b).trace();
    const Vector fp = f_perp(builtin_hamiltonian("sq_norm", n, N), jet);
    CHECK((fp - 2.0 * lap).norm() <= 1e-12 * (1.0 + lap.norm()));
    const Vector fs = f_perp(builtin_hamiltonian("shifted_sq_norm", n, N), jet);
    CHECK((fs - fp).norm() <= 1e-12 * (1.0 + lap.norm()));
  }
}

TEST_CASE("linear jets and vanishing h_P give zero") {
  std::mt19937_64 rng(23);
  for (const auto& name : builtin_hamiltonian_names()) {
    const HamiltonianModel H = builtin_hamiltonian(name, 2, 2);
    const SecondOrderJet jet{gaussian_vector(rng, 2), gaussian_vector(rng, 2), gaussian(rng, 2, 2), HessianTensor(2, 2)};
    if (name != std::string("sq_norm_plus_potential")) CHECK(f_infinity(H, jet).full.norm() == 0.0);
  }
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 2, 2);
  const SecondOrderJet zero_p = SecondOrderJet::make(gaussian_vector(rng, 2), gaussian_vector(rng, 2),
                                                     Matrix::Zero(2, 2), symmetric_tensor(rng, 2, 2));
  const OperatorValue op = f_infinity(H, zero_p);
  CHECK(op.tangential.norm() == 0.0);
  CHECK(op.normal.norm() == 0.0);
  CHECK(op.full.norm() == 0.0);
}

TEST_CASE("sq_norm reproduces the infinity-Laplacian with factors 4 and 2") {
  std::mt19937_64 rng(24);
  for (int t = 0; t < 500; ++t) {
    const int N = std::uniform_int_distribution<int>(1, 3)(rng);
    const int n = std::uniform_int_distribution<int>(1, 3)(rng);
    const int k = std::uniform_int_distribution<int>(0, std::min(N, n))(rng);
    const SecondOrderJet jet = random_jet(rng, N, n, k);
    const OperatorValue op = f_infinity(builtin_hamiltonian("sq_norm", n, N), jet);
    const LaplacianTerms ref = laplacian_oracle(jet.P, jet.X);
    const double scale = 1.0 + ref.first.norm() + ref.second.norm();
    CHECK((op.tangential - 4.0 * ref.first).norm() <= 1e-10 * scale);
    CHECK((op.normal - 2.0 * ref.second).norm() <= 1e-10 * scale);
    CHECK((infinity_laplacian(jet.P, jet.X) - ref.first - ref.second).norm() <= 1e-10 * scale);
  }
}

TEST_CASE("infinity-Laplacian examples") {
  CHECK(infinity_laplacian(Matrix::Zero(2, 3), HessianTensor(2, 3)).norm() == 0.0);

  HessianTensor X1(1, 1);
  CHECK(infinity_laplacian(Matrix::Constant(1, 1, 1.0), X1).norm() == 0.0);

  // x^{4/3} - y^{4/3}: u_x = 4/3 x^{1/3}, u_xx = 4/9 x^{-2/3}.
  for (double x : {0.3, 0.7, 1.1})
    for (double y : {0.4, 0.9, 1.2}) {
      Matrix P(1, 2);
      P << 4.0 / 3.0 * std::cbrt(x), -4.0 / 3.0 * std::cbrt(y);
      HessianTensor X(1, 2);
      X(0, 0, 0) = 4.0 / 9.0 / std::cbrt(x * x);
      X(0, 1, 1) = -4.0 / 9.0 / std::cbrt(y * y);
      CHECK(std::abs(infinity_laplacian(P, X)(0)) <= 1e-8);
    }

  Matrix bad = Matrix::Ones(1, 1);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(infinity_laplacian(bad, X1), std::domain_error);
  CHECK_THROWS_AS(infinity_laplacian(Matrix::Ones(2, 1), X1), std::invalid_argument);
}

TEST_CASE("orthogonal decomposition on random jets") {
  std::mt19937_64 rng(25);
  for (const auto& name : builtin_hamiltonian_names()) {
    for (int t = 0; t < 300; ++t) {
      const int N = std::uniform_int_distribution<int>(1, 3)(rng);
      const int n = std::uniform_int_distribution<int>(1, 3)(rng);
      const int k = std::uniform_int_distribution<int>(0, std::min(N, n))(rng);
      const OperatorValue op = f_infinity(builtin_hamiltonian(name, n, N), random_jet(rng, N, n, k));
      CHECK((op.full - op.tangential - op.normal).norm() <= 1e-10 * op.scale);
      CHECK(std::abs(op.tangential.dot(op.normal)) <= 1e-9 * op.tangential.norm() * op.normal.norm() + 1e-300);
      if (!op.rank_ambiguous) {
        const double lhs = op.full.squaredNorm();
        CHECK(std::abs(lhs - op.tangential.squaredNorm() - op.normal.squaredNorm()) <= 1e-8 * std::max(1.0, lhs));
      }
    }
  }
}

TEST_CASE("zero set splits into the two components") {
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 1, 2);
  const double tol = 1e-9;
  auto agrees = [tol](const OperatorValue& op) {
    const bool full_zero = op.full.norm() <= tol;
    return full_zero == (op.tangential.norm() <= tol && op.normal.norm() <= tol);
  };

  // Tangential part zero, normal part nonzero.
  HessianTensor X(2, 1);
  X(1, 0, 0) = 1.0;
  const SecondOrderJet only_normal{Vector::Zero(1), Vector::Zero(2), (Matrix(2, 1) << 1.0, 0.0).finished(), X};
  const OperatorValue a = f_infinity(H, only_normal);
  CHECK(a.tangential.norm() == 0.0);
  CHECK((a.normal - Vector((Vector(2) << 0.0, 2.0).finished())).norm() <= 1e-14);
  CHECK(agrees(a));

  // Normal part zero (N = 1 and P != 0), tangential nonzero.
  const HamiltonianModel H1 = builtin_hamiltonian("sq_norm", 2, 1);
  HessianTensor Y(1, 2);
  Y(0, 0, 0) = 1.0;
  const SecondOrderJet only_tangential{Vector::Zero(2), Vector::Zero(1), (Matrix(1, 2) << 1.0, 0.0).finished(), Y};
  const OperatorValue b = f_infinity(H1, only_tangential);
  CHECK(b.normal.norm() == 0.0);
  CHECK(b.tangential.norm() > 1.0);
  CHECK(agrees(b));

  std::mt19937_64 rng(26);
  for (int t = 0; t < 300; ++t) CHECK(agrees(f_infinity(H, random_jet(rng, 2, 1, t % 2))));
}

TEST_CASE("zero set matches the infinity-Laplacian") {
  std::mt19937_64 rng(27);
  const double tol = 1e-9;
  std::vector<SecondOrderJet> jets;
  for (int t = 0; t < 200; ++t) jets.push_back(random_jet(rng, 2, 2, t % 3));
  // Constructed zeros: P = e_1 (x) e_1 with X_1 = [[0, a], [a, b]] and trace-free X_2 supported off P.
  for (int t = 0; t < 20; ++t) {
    std::normal_distribution<double> g;
    HessianTensor X(2, 2);
    X(0, 0, 1) = X(0, 1, 0) = g(rng);
    X(0, 1, 1) = g(rng);
    const double s = g(rng);
    X(1, 0, 0) = s;
    X(1, 1, 1) = -s;
    X(1, 0, 1) = X(1, 1, 0) = g(rng);
    Matrix P = Matrix::Zero(2, 2);
    P(0, 0) = 1.0 + std::abs(g(rng));
    jets.push_back({Vector::Zero(2), Vector::Zero(2), P, X});
  }
  std::size_t zeros = 0;
  for (const auto& jet : jets) {
    const bool a = f_infinity(builtin_hamiltonian("sq_norm", 2, 2), jet).full.norm() <= tol;
    const bool b = infinity_laplacian(jet.P, jet.X).norm() <= tol;
    CHECK(a == b);
    zeros += a ? 1 : 0;
  }
  CHECK(zeros >= 20);
}

TEST_CASE("asymmetric raw tensors are symmetrized") {
  std::mt19937_64 rng(28);
  const HamiltonianModel H = builtin_hamiltonian("sq_norm_plus_potential", 3, 2);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> raw(2 * 3 * 3);
    std::normal_distribution<double> g;
    for (double& v : raw) v = g(rng);
    HessianTensor asym(2, 3);
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) asym(b, i, j) = raw[static_cast<std::size_t>((b * 3 + i) * 3 + j)];
    const Vector x = gaussian_vector(rng, 3), eta = gaussian_vector(rng, 2);
    const Matrix P = gaussian(rng, 2, 3);
    const OperatorValue a = f_infinity(H, SecondOrderJet::make(x, eta, P, asym));
    const OperatorValue b = f_infinity(H, SecondOrderJet{x, eta, P, HessianTensor::from_raw_symmetrized(2, 3, raw)});
    CHECK((a.full - b.full).norm() == 0.0);
    CHECK(SecondOrderJet::make(x, eta, P, asym).X.is_symmetric());
  }
}

TEST_CASE("shape errors") {
  const HamiltonianModel H = builtin_hamiltonian("sq_norm", 2, 1);
  const SecondOrderJet jet{Vector::Zero(2), Vector::Zero(1), Matrix::Zero(1, 2), HessianTensor(1, 3)};
  CHECK_THROWS_AS(f_infinity(H, jet), std::invalid_argument);
}

}  // TEST_SUITE
