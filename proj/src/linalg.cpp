// SPDX-License-Identifier: Apache-2.0

#include "ddrom/linalg.hpp"

#include <cmath>
#include <random>

namespace ddrom {

LinearOperator LinearOperator::from_dense(const Matrix& a) {
  LinearOperator op;
  op.rows = static_cast<int>(a.rows());
  op.cols = static_cast<int>(a.cols());
  op.apply = [a](const Vector& x) { return Vector(a * x); };
  return op;
}

LinearOperator LinearOperator::from_sparse(const SpMat& a) {
  LinearOperator op;
  op.rows = static_cast<int>(a.rows());
  op.cols = static_cast<int>(a.cols());
  op.apply = [a](const Vector& x) { return Vector(a * x); };
  return op;
}

double linearity_defect(const LinearOperator& op, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector x(op.cols), y(op.cols);
  for (int i = 0; i < op.cols; ++i) {
    x[i] = dist(rng);
    y[i] = dist(rng);
  }
  const double alpha = 0.37, beta = -1.21;
  const Vector lhs = op.apply(alpha * x + beta * y);
  const Vector rhs = alpha * op.apply(x) + beta * op.apply(y);
  const double scale = std::max(lhs.norm(), rhs.norm());
  return scale > 0 ? (lhs - rhs).norm() / scale : 0.0;
}

GmresResult gmres(const LinearOperator& op, const Vector& rhs, double rel_tol, int max_iter) {
  GmresResult res;
  const int n = static_cast<int>(rhs.size());
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    res.x = Vector::Zero(n);
    return res;
  }
  if (max_iter <= 0) max_iter = n;

  std::vector<Vector> basis;
  basis.reserve(static_cast<size_t>(max_iter) + 1);
  basis.push_back(rhs / bnorm);

  Matrix h = Matrix::Zero(max_iter + 1, max_iter);
  std::vector<double> cs(max_iter), sn(max_iter);
  Vector g = Vector::Zero(max_iter + 1);
  g[0] = bnorm;

  auto solution_at = [&](int k) {
    Vector y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    Vector x = Vector::Zero(n);
    for (int i = 0; i < k; ++i) x += y[i] * basis[static_cast<size_t>(i)];
    return x;
  };

  for (int k = 0; k < max_iter; ++k) {
    Vector w = op.apply(basis.back());
    const double wnorm0 = w.norm();
    // modified Gram-Schmidt
    for (int i = 0; i <= k; ++i) {
      const double hik = basis[static_cast<size_t>(i)].dot(w);
      h(i, k) = hik;
      w -= hik * basis[static_cast<size_t>(i)];
    }
    // one reorthogonalization pass when orthogonality degrades
    if (w.norm() < 1e-8 * std::max(1.0, wnorm0)) {
      for (int i = 0; i <= k; ++i) {
        const double corr = basis[static_cast<size_t>(i)].dot(w);
        h(i, k) += corr;
        w -= corr * basis[static_cast<size_t>(i)];
      }
    }
    const double wnorm = w.norm();
    h(k + 1, k) = wnorm;

    // Givens rotations keep the least-squares problem triangular
    for (int i = 0; i < k; ++i) {
      const double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
      h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
      h(i, k) = t;
    }
    const double denom = std::hypot(h(k, k), h(k + 1, k));
    if (denom == 0.0) throw SingularMatrixError("gmres: Hessenberg breakdown");
    cs[k] = h(k, k) / denom;
    sn[k] = h(k + 1, k) / denom;
    h(k, k) = denom;
    h(k + 1, k) = 0.0;
    g[k + 1] = -sn[k] * g[k];
    g[k] = cs[k] * g[k];

    const double rel = std::abs(g[k + 1]) / bnorm;
    res.residual_history.push_back(rel);

    if (rel <= rel_tol) {
      res.iterations = k + 1;
      res.x = solution_at(k + 1);
      return res;
    }
    if (wnorm == 0.0) {
      // lucky breakdown: Krylov space is invariant, solution is exact
      res.iterations = k + 1;
      res.x = solution_at(k + 1);
      return res;
    }
    basis.push_back(w / wnorm);
  }

  throw ConvergenceError("gmres: no convergence within " + std::to_string(max_iter) + " iterations",
                         solution_at(max_iter), res.residual_history);
}

SparseFactorization::SparseFactorization(const SpMat& a) {
  if (a.rows() != a.cols()) throw ShapeError("lu_factorize: matrix must be square");
  n_ = static_cast<int>(a.rows());
  lu_ = std::make_shared<Eigen::SparseLU<SpMat>>();
  SpMat compressed = a;
  compressed.makeCompressed();
  lu_->analyzePattern(compressed);
  lu_->factorize(compressed);
  if (lu_->info() != Eigen::Success)
    throw SingularMatrixError("lu_factorize: structurally or numerically singular matrix");
}

Vector SparseFactorization::solve(const Vector& b) const {
  if (b.size() != n_) throw ShapeError("solve: right-hand side length mismatch");
  Vector x = lu_->solve(b);
  if (lu_->info() != Eigen::Success) throw SingularMatrixError("solve failed");
  return x;
}

}  // namespace ddrom
