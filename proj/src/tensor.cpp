// SPDX-License-Identifier: Apache-2.0

#include "ddrom/tensor.hpp"

#include <cmath>
#include <string>

namespace ddrom {

double interp_mode(const GridDim& dim, const Vector& factor, double mu) {
  if (!dim.contains(mu))
    throw ParameterError("parameter '" + dim.name + "' = " + std::to_string(mu) +
                         " outside [" + std::to_string(dim.lo) + ", " + std::to_string(dim.hi) + "]");
  const double h = dim.spacing();
  double s = (mu - dim.lo) / h;
  int i = static_cast<int>(std::floor(s));
  if (i < 0) i = 0;
  if (i > dim.n - 2) i = dim.n - 2;
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * factor[i] + w * factor[i + 1];
}

double parametric_weight(const SeparatedTensor& t, const Mode& m, const std::vector<double>& mu) {
  double w = 1.0;
  for (int k = 0; k < t.grid->ndims(); ++k) w *= interp_mode(t.grid->dims[k], m.factors[k], mu[k]);
  return w;
}

Vector evaluate(const SeparatedTensor& t, const std::vector<double>& mu) {
  if (t.grid && static_cast<int>(mu.size()) != t.grid->ndims())
    throw ParameterError("evaluate: expected " + std::to_string(t.grid->ndims()) +
                         " parameter values, got " + std::to_string(mu.size()));
  Vector out = Vector::Zero(t.spatial_dim);
  for (const Mode& m : t.terms) out += parametric_weight(t, m, mu) * m.spatial;
  return out;
}

SeparatedTensor add(const SeparatedTensor& a, const SeparatedTensor& b) {
  if (a.rank() == 0) return b.rank() == 0 ? a : b;
  if (b.rank() == 0) return a;
  if (a.spatial_dim != b.spatial_dim || !same_grid(a.grid, b.grid))
    throw ShapeError("add: mismatched spatial dimension or parametric grid");
  SeparatedTensor out = a;
  out.terms.insert(out.terms.end(), b.terms.begin(), b.terms.end());
  return out;
}

SeparatedTensor scale(const SeparatedTensor& a, double c) {
  SeparatedTensor out = a;
  for (Mode& m : out.terms) m.spatial *= c;
  return out;
}

namespace {

// ||sum_t s_t U_t (x) phi_t||^2 via Gram accumulation over term pairs.
double gram_norm_sq(const std::vector<const Mode*>& terms, const std::vector<double>& signs) {
  const size_t r = terms.size();
  double acc = 0.0;
  for (size_t i = 0; i < r; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double g = terms[i]->spatial.dot(terms[j]->spatial);
      for (size_t k = 0; k < terms[i]->factors.size(); ++k)
        g *= terms[i]->factors[k].dot(terms[j]->factors[k]);
      g *= signs[i] * signs[j];
      acc += (i == j) ? g : 2.0 * g;
    }
  }
  return acc;
}

}  // namespace

double tensor_norm(const SeparatedTensor& t) {
  std::vector<const Mode*> terms;
  std::vector<double> signs;
  for (const Mode& m : t.terms) {
    terms.push_back(&m);
    signs.push_back(1.0);
  }
  return std::sqrt(std::max(0.0, gram_norm_sq(terms, signs)));
}

double tensor_diff_norm(const SeparatedTensor& a, const SeparatedTensor& b) {
  if (a.rank() > 0 && b.rank() > 0 &&
      (a.spatial_dim != b.spatial_dim || !same_grid(a.grid, b.grid)))
    throw ShapeError("tensor_diff_norm: mismatched tensors");
  std::vector<const Mode*> terms;
  std::vector<double> signs;
  for (const Mode& m : a.terms) {
    terms.push_back(&m);
    signs.push_back(1.0);
  }
  for (const Mode& m : b.terms) {
    terms.push_back(&m);
    signs.push_back(-1.0);
  }
  return std::sqrt(std::max(0.0, gram_norm_sq(terms, signs)));
}

}  // namespace ddrom
