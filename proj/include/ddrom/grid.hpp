// SPDX-License-Identifier: Apache-2.0

#ifndef DDROM_GRID_HPP
#define DDROM_GRID_HPP

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ddrom/core.hpp"

namespace ddrom {

// One parametric dimension discretized by uniform pointwise collocation.
struct GridDim {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  int n = 2;  // number of collocation points

  double spacing() const { return (hi - lo) / static_cast<double>(n - 1); }
  double point(int i) const { return lo + spacing() * static_cast<double>(i); }
  Vector points() const {
    Vector p(n);
    for (int i = 0; i < n; ++i) p[i] = point(i);
    return p;
  }
  bool contains(double mu, double tol = 1e-12) const {
    const double pad = tol * std::max(1.0, hi - lo);
    return mu >= lo - pad && mu <= hi + pad;
  }
};

struct ParametricGrid {
  std::vector<GridDim> dims;

  int ndims() const { return static_cast<int>(dims.size()); }

  // Tabulates a scalar function of one parameter on its collocation grid.
  template <typename F>
  static Vector tabulate(const GridDim& d, F&& f) {
    Vector v(d.n);
    for (int i = 0; i < d.n; ++i) v[i] = f(d.point(i));
    return v;
  }
};

using GridPtr = std::shared_ptr<const ParametricGrid>;

// Piecewise-linear interpolation of a tabulated parametric factor. Exact
// lookup at collocation points; throws ParameterError outside the interval.
double interp_mode(const GridDim& dim, const Vector& factor, double mu);

inline bool same_grid(const GridPtr& a, const GridPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->dims.size() != b->dims.size()) return false;
  for (size_t k = 0; k < a->dims.size(); ++k) {
    const auto& da = a->dims[k];
    const auto& db = b->dims[k];
    if (da.n != db.n || da.lo != db.lo || da.hi != db.hi) return false;
  }
  return true;
}

}  // namespace ddrom

#endif
