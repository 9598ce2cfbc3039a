// SPDX-License-Identifier: Apache-2.0

#ifndef DDROM_LINALG_HPP
#define DDROM_LINALG_HPP

#include <Eigen/SparseLU>
#include <functional>
#include <memory>
#include <vector>

#include "ddrom/core.hpp"

namespace ddrom {

// Matrix-free operator contract: apply must be deterministic and linear.
struct LinearOperator {
  int rows = 0;
  int cols = 0;
  std::function<Vector(const Vector&)> apply;

  static LinearOperator from_dense(const Matrix& a);
  static LinearOperator from_sparse(const SpMat& a);
};

// Checks apply(alpha x + beta y) against the linear combination of applies.
double linearity_defect(const LinearOperator& op, unsigned seed = 7);

struct GmresResult {
  Vector x;
  int iterations = 0;
  std::vector<double> residual_history;  // relative residuals, one per iteration
};

// Full (non-restarted) GMRES with modified Gram-Schmidt and one selective
// reorthogonalization pass. Zero rhs returns zero in 0 iterations. Throws
// ConvergenceError with the best iterate when max_iter is exhausted.
GmresResult gmres(const LinearOperator& op, const Vector& rhs, double rel_tol, int max_iter);

// Sparse LU behind the solver contract for the local full-order problems.
class SparseFactorization {
public:
  explicit SparseFactorization(const SpMat& a);
  Vector solve(const Vector& b) const;
  int size() const { return n_; }

private:
  int n_ = 0;
  std::shared_ptr<Eigen::SparseLU<SpMat>> lu_;  // immutable after construction
};

}  // namespace ddrom

#endif
