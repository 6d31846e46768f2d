#include "helpers.hpp"

#include "linf/projector.hpp"

#include <doctest.h>

#include <limits>

using namespace linf;
using namespace testing_support;

namespace {

Matrix unit(int size, int k) {
  Matrix e = Matrix::Zero(size, 1);
  e(k, 0) = 1.0;
  return e;
}

}  // namespace

TEST_SUITE("projector") {

TEST_CASE("rank-one input in three dimensions") {
  const Matrix A = unit(3, 0) * unit(2, 0).transpose();
  const OrthProjector p = orth_complement_projector(A);
  CHECK(p.rank_of_range == 1);
  const Matrix expected = Vector((Vector(3) << 0.0, 1.0, 1.0).finished()).asDiagonal();
  CHECK((p.matrix - expected).norm() <= 1e-15);
  CHECK_FALSE(p.rank_ambiguous);
}

TEST_CASE("zero input gives the identity") {
  const OrthProjector p = orth_complement_projector(Matrix::Zero(3, 2));
  CHECK(p.rank_of_range == 0);
  CHECK((p.matrix - Matrix::Identity(3, 3)).norm() == 0.0);
  CHECK(range_complement_basis(Matrix::Zero(2, 4)).size() == 2);
}

TEST_CASE("full row rank gives zero") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    // Orthonormal rows scaled by singular values in [0.2, 2].
    const Eigen::HouseholderQR<Matrix> qr(gaussian(rng, 3, 3));
    const Matrix frame = Matrix(qr.householderQ()).topRows(2);
    std::uniform_real_distribution<double> sv(0.2, 2.0);
    const Matrix S = Vector((Vector(2) << sv(rng), sv(rng)).finished()).asDiagonal();
    const Eigen::HouseholderQR<Matrix> qr2(gaussian(rng, 2, 2));
    const Matrix A = Matrix(qr2.householderQ()) * S * frame;
    const OrthProjector p = orth_complement_projector(A);
    CHECK(p.rank_of_range == 2);
    CHECK(p.matrix.norm() <= 1e-10);
    CHECK(range_complement_basis(A).empty());
  }
}

TEST_CASE("complement basis examples") {
  const Matrix A = unit(2, 0) * unit(2, 0).transpose();
  const auto basis = range_complement_basis(A);
  REQUIRE(basis.size() == 1);
  CHECK(std::abs(std::abs(basis[0](1)) - 1.0) <= 1e-15);
  CHECK(std::abs(basis[0](0)) <= 1e-15);

  std::mt19937_64 rng(12);
  for (int t = 0; t < 50; ++t) {
    const Vector u = gaussian_vector(rng, 3).normalized();
    const Vector v = gaussian_vector(rng, 4).normalized();
    const Matrix B = 2.5 * u * v.transpose();
    const auto b = range_complement_basis(B);
    REQUIRE(b.size() == 2);
    CHECK(std::abs(b[0].norm() - 1.0) <= 1e-12);
    CHECK(std::abs(b[1].norm() - 1.0) <= 1e-12);
    CHECK(std::abs(b[0].dot(b[1])) <= 1e-12);
    for (const auto& w : b) CHECK((w.transpose() * B).norm() <= 1e-10 * B.norm());
  }
}

TEST_CASE("algebraic invariants on mixed ranks") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 2000; ++t) {
    const int N = std::uniform_int_distribution<int>(1, 8)(rng);
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    const int k = std::uniform_int_distribution<int>(0, std::min(N, n))(rng);
    const Matrix A = rank_k(rng, N, n, k);
    const OrthProjector p = orth_complement_projector(A);
    const Matrix& P = p.matrix;
    const Matrix U = range_basis(A);
    REQUIRE(p.rank_of_range == k);
    CHECK((P * P - P).norm() <= 1e-10);
    CHECK((P - P.transpose()).norm() <= 1e-12 * std::max(1.0, P.norm()));
    CHECK((P * A).norm() <= 1e-10 * std::max(1.0, A.norm()));
    CHECK((P + U * U.transpose() - Matrix::Identity(N, N)).norm() <= 1e-10);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(P);
    for (int i = 0; i < N; ++i) {
      const double ev = es.eigenvalues()(i);
      CHECK(std::min(std::abs(ev), std::abs(ev - 1.0)) <= 1e-10);
    }
    CHECK(static_cast<int>(std::lround(P.trace())) == N - k);
    CHECK(static_cast<int>(range_complement_basis(A).size()) == N - k);
  }
}

TEST_CASE("invariance under right multiplication") {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 200; ++t) {
    const int N = std::uniform_int_distribution<int>(1, 5)(rng);
    const int n = std::uniform_int_distribution<int>(1, 5)(rng);
    const int k = std::uniform_int_distribution<int>(0, std::min(N, n))(rng);
    const Matrix A = rank_k(rng, N, n, k);
    Matrix G = gaussian(rng, n, n);
    while (Eigen::JacobiSVD<Matrix>(G).singularValues().minCoeff() < 0.3) G = gaussian(rng, n, n);
    CHECK((orth_complement_projector(A).matrix - orth_complement_projector(A * G).matrix).norm() <= 1e-8);
  }
}

TEST_CASE("invariance under positive scaling") {
  // Powers of two scale every singular value exactly, so the result is bitwise equal.
  std::mt19937_64 rng(15);
  for (int t = 0; t < 200; ++t) {
    const int N = std::uniform_int_distribution<int>(1, 5)(rng);
    const int n = std::uniform_int_distribution<int>(1, 5)(rng);
    const Matrix A = rank_k(rng, N, n, std::uniform_int_distribution<int>(0, std::min(N, n))(rng));
    const Matrix P = orth_complement_projector(A).matrix;
    for (double s : {0.25, 8.0, 1024.0}) CHECK((orth_complement_projector(s * A).matrix - P).norm() == 0.0);
    // Generic positive factors agree to roundoff.
    CHECK((orth_complement_projector(3.7 * A).matrix - P).norm() <= 1e-12);
  }
}

TEST_CASE("rank cut bookkeeping") {
  SUBCASE("threshold") {
    const Matrix A = (Matrix(2, 2) << 1.0, 0.0, 0.0, 1e-20).finished();
    const OrthProjector p = orth_complement_projector(A);
    CHECK(p.rank_of_range == 1);
    CHECK(p.sv_threshold == doctest::Approx(2e-12));
    CHECK_FALSE(p.rank_ambiguous);
  }
  SUBCASE("near the cut is flagged") {
    const Matrix A = (Matrix(2, 2) << 1.0, 0.0, 0.0, 5e-12).finished();
    const OrthProjector p = orth_complement_projector(A);
    CHECK(p.rank_ambiguous);
    CHECK(p.rank_of_range == 2);
  }
  SUBCASE("rel_tol is configurable") {
    const Matrix A = (Matrix(2, 2) << 1.0, 0.0, 0.0, 1e-3).finished();
    CHECK(orth_complement_projector(A).rank_of_range == 2);
    CHECK(orth_complement_projector(A, 1e-2).rank_of_range == 1);
  }
}

TEST_CASE("input errors") {
  Matrix A = Matrix::Ones(2, 2);
  A(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(orth_complement_projector(A), std::domain_error);
  CHECK_THROWS_AS(range_complement_basis(A), std::domain_error);
  CHECK_THROWS_AS(orth_complement_projector(Matrix::Ones(2, 2), 0.0), std::invalid_argument);
}

}  // TEST_SUITE
