// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ddrom/linalg.hpp"

using namespace ddrom;

namespace {

SpMat sparse_from(const Matrix& a) {
  SpMat s(a.rows(), a.cols());
  std::vector<Triplet> trip;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0.0) trip.emplace_back(i, j, a(i, j));
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

// dense Gaussian elimination with partial pivoting, the oracle for the
// sparse factorization
Vector dense_solve_oracle(Matrix a, Vector b) {
  const int n = static_cast<int>(a.rows());
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    a.row(k).swap(a.row(piv));
    std::swap(b[k], b[piv]);
    for (int i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      a.row(i).tail(n - k) -= f * a.row(k).tail(n - k);
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (int i = n - 1; i >= 0; --i)
    x[i] = (b[i] - a.row(i).tail(n - 1 - i).dot(x.tail(n - 1 - i))) / a(i, i);
  return x;
}

}  // namespace

TEST_CASE("sparse LU: identity and a 2x2 symmetric system") {
  SpMat eye = sparse_from(Matrix::Identity(5, 5));
  SparseFactorization lu(eye);
  Vector b(5);
  b << 1, 2, 3, 4, 5;
  CHECK((lu.solve(b) - b).norm() == 0.0);

  Matrix a(2, 2);
  a << 2, 1, 1, 2;
  SparseFactorization lu2(sparse_from(a));
  Vector rhs(2);
  rhs << 3, 3;
  Vector x = lu2.solve(rhs);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("sparse LU matches the dense elimination oracle on a random system") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const int n = 50;
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 6; ++k) a(i, std::uniform_int_distribution<>(0, n - 1)(rng)) = dist(rng);
    a(i, i) = 10.0 + std::abs(dist(rng));  // diagonally dominant
  }
  Vector b(n);
  for (int i = 0; i < n; ++i) b[i] = dist(rng);

  SparseFactorization lu(sparse_from(a));
  const Vector x = lu.solve(b);
  const Vector x_oracle = dense_solve_oracle(a, b);
  CHECK((x - x_oracle).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((a * x - b).lpNorm<Eigen::Infinity>() / b.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("sparse LU rejects singular matrices") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;  // last row/column empty: structurally singular
  CHECK_THROWS_AS(SparseFactorization(sparse_from(a)), SingularMatrixError);
}

TEST_CASE("gmres: identity converges in one iteration") {
  LinearOperator op = LinearOperator::from_dense(Matrix::Identity(7, 7));
  Vector b = Vector::LinSpaced(7, 1.0, 7.0);
  GmresResult r = gmres(op, b, 1e-12, 20);
  CHECK(r.iterations == 1);
  CHECK((r.x - b).norm() < 1e-12);
}

TEST_CASE("gmres: zero rhs returns zero in zero iterations") {
  LinearOperator op = LinearOperator::from_dense(Matrix::Identity(4, 4));
  GmresResult r = gmres(op, Vector::Zero(4), 1e-10, 10);
  CHECK(r.iterations == 0);
  CHECK(r.x.norm() == 0.0);
}

TEST_CASE("gmres: k distinct eigenvalues converge in at most k iterations") {
  Matrix d = Matrix::Zero(12, 12);
  for (int i = 0; i < 12; ++i) d(i, i) = (i % 3 == 0) ? 1.0 : (i % 3 == 1 ? 2.5 : 7.0);
  std::mt19937_64 rng(5);
  Vector b(12);
  for (int i = 0; i < 12; ++i) b[i] = std::uniform_real_distribution<>(-1, 1)(rng);
  GmresResult r = gmres(LinearOperator::from_dense(d), b, 1e-12, 12);
  CHECK(r.iterations <= 3);
  CHECK((d * r.x - b).norm() / b.norm() < 1e-11);
}

TEST_CASE("gmres: residual history is monotonically non-increasing") {
  std::mt19937_64 rng(9);
  const int n = 40;
  Matrix a = Matrix::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) += 0.3 * std::uniform_real_distribution<>(-1, 1)(rng);
  Vector b(n);
  for (int i = 0; i < n; ++i) b[i] = std::uniform_real_distribution<>(-1, 1)(rng);
  GmresResult r = gmres(LinearOperator::from_dense(a), b, 1e-10, n);
  for (size_t k = 1; k < r.residual_history.size(); ++k)
    CHECK(r.residual_history[k] <= r.residual_history[k - 1] * (1 + 1e-12));
  CHECK((a * r.x - b).norm() / b.norm() <= 1e-10);
}

TEST_CASE("gmres matches a direct solve on an SPD matrix") {
  std::mt19937_64 rng(17);
  Matrix m(10, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) m(i, j) = std::uniform_real_distribution<>(-1, 1)(rng);
  Matrix a = m * m.transpose() + 10.0 * Matrix::Identity(10, 10);
  Vector b(10);
  for (int i = 0; i < 10; ++i) b[i] = std::uniform_real_distribution<>(-1, 1)(rng);
  GmresResult r = gmres(LinearOperator::from_dense(a), b, 1e-12, 10);
  const Vector x_direct = a.llt().solve(b);
  CHECK((r.x - x_direct).norm() < 1e-8);
}

TEST_CASE("gmres: exhausted iterations raise with the best iterate attached") {
  Matrix a = Matrix::Identity(6, 6);
  for (int i = 0; i < 6; ++i) a(i, i) = i + 1.0;
  Vector b = Vector::Ones(6);
  try {
    gmres(LinearOperator::from_dense(a), b, 1e-14, 2);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual_history.size() == 2);
    CHECK(e.best_iterate.size() == 6);
    CHECK((a * e.best_iterate - b).norm() / b.norm() ==
          doctest::Approx(e.residual_history.back()).epsilon(1e-6));
  }
}

TEST_CASE("linearity probe") {
  Matrix a = Matrix::Random(9, 9);
  CHECK(linearity_defect(LinearOperator::from_dense(a)) < 1e-12);
  LinearOperator affine;
  affine.rows = affine.cols = 9;
  affine.apply = [](const Vector& x) { return Vector(x.array() + 1.0); };
  CHECK(linearity_defect(affine) > 1e-3);
}
