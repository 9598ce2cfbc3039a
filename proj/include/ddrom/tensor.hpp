// SPDX-License-Identifier: Apache-2.0

#ifndef DDROM_TENSOR_HPP
#define DDROM_TENSOR_HPP

#include <vector>

#include "ddrom/core.hpp"
#include "ddrom/grid.hpp"

namespace ddrom {

// One rank-one term: a spatial vector times one tabulated mode per parametric
// dimension. The spatial mode carries the amplitude; parametric modes are
// kept at unit max-norm by the solvers.
struct Mode {
  Vector spatial;
  std::vector<Vector> factors;
};

// Rank-R separated representation over (space x parametric grid).
// Rank 0 represents the zero function.
struct SeparatedTensor {
  int spatial_dim = 0;
  GridPtr grid;
  std::vector<Mode> terms;

  int rank() const { return static_cast<int>(terms.size()); }

  static SeparatedTensor zero(int spatial_dim, GridPtr grid) {
    SeparatedTensor t;
    t.spatial_dim = spatial_dim;
    t.grid = std::move(grid);
    return t;
  }
};

// Product over dimensions of the interpolated parametric modes of one term.
double parametric_weight(const SeparatedTensor& t, const Mode& m, const std::vector<double>& mu);

// evaluate(t, mu) = sum_m U^m * prod_k phi^{m,k}(mu_k).
Vector evaluate(const SeparatedTensor& t, const std::vector<double>& mu);

// Term-list concatenation / scalar multiplication of amplitudes.
SeparatedTensor add(const SeparatedTensor& a, const SeparatedTensor& b);
SeparatedTensor scale(const SeparatedTensor& a, double c);

// Weighted-l2 norm over (space x grid): ||t||^2 computed from Gram matrices,
// without dense tabulation.
double tensor_norm(const SeparatedTensor& t);
double tensor_diff_norm(const SeparatedTensor& a, const SeparatedTensor& b);

}  // namespace ddrom

#endif
