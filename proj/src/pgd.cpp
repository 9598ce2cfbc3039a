// SPDX-License-Identifier: Apache-2.0

#include "ddrom/pgd.hpp"

#include <cmath>
#include <random>

#include "ddrom/linalg.hpp"

namespace ddrom {

namespace {

double product_norm(const Vector& u, const std::vector<Vector>& factors) {
  double a = u.norm();
  for (const Vector& f : factors) a *= f.norm();
  return a;
}

// Pushes parametric amplitudes into the spatial mode (unit max-norm factors).
void normalize_mode(Vector& u, std::vector<Vector>& factors) {
  for (Vector& f : factors) {
    const double m = f.lpNorm<Eigen::Infinity>();
    if (m > 0) {
      f /= m;
      u *= m;
    }
  }
}

}  // namespace

std::pair<SeparatedTensor, EnrichmentReport> greedy_solve(const AffineOperator& op,
                                                          const SeparatedLoad& load,
                                                          const GreedyOptions& options) {
  if (!same_grid(op.grid, load.grid))
    throw ShapeError("greedy_solve: operator and load use different grids");
  for (const auto& term : load.terms)
    if (term.f.size() != op.n_free) throw ShapeError("greedy_solve: load length mismatch");

  const int n_dims = op.grid->ndims();
  const int n_ops = static_cast<int>(op.terms.size());
  const int n_loads = static_cast<int>(load.terms.size());

  SeparatedTensor u = SeparatedTensor::zero(op.n_free, op.grid);
  EnrichmentReport report;
  report.seed = options.seed;

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  // cached K_l * U_t for accepted modes
  std::vector<std::vector<Vector>> op_times_mode(n_ops);

  double first_amp = 0.0;
  for (int m = 0; m < options.max_modes; ++m) {
    Vector U(op.n_free);
    for (int i = 0; i < op.n_free; ++i) U[i] = dist(rng);
    // ones plus seeded jitter: a plain ones start cancels exactly against
    // odd-symmetric load factors (the clustered interface coordinates)
    std::vector<Vector> phi(n_dims);
    for (int k = 0; k < n_dims; ++k) {
      phi[k] = Vector::Ones(op.grid->dims[k].n);
      for (int p = 0; p < phi[k].size(); ++p) phi[k][p] += 0.1 * dist(rng);
    }

    double amp = 0.0, amp_prev = 0.0;
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
      ++report.total_sweeps;

      // --- spatial direction ---
      SpMat lhs(op.n_free, op.n_free);
      Vector rhs = Vector::Zero(op.n_free);
      for (int l = 0; l < n_ops; ++l) {
        double w = 1.0;
        for (int k = 0; k < n_dims; ++k) {
          const Vector& xi = op.terms[l].factors[k];
          w *= (xi.array() * phi[k].array() * phi[k].array()).sum();
        }
        lhs += w * op.terms[l].ff;
        for (int t = 0; t < u.rank(); ++t) {
          double c = 1.0;
          for (int k = 0; k < n_dims; ++k)
            c *= (op.terms[l].factors[k].array() * u.terms[t].factors[k].array() *
                  phi[k].array())
                     .sum();
          rhs -= c * op_times_mode[l][static_cast<size_t>(t)];
        }
      }
      for (int r = 0; r < n_loads; ++r) {
        double c = 1.0;
        for (int k = 0; k < n_dims; ++k) c *= load.terms[r].factors[k].dot(phi[k]);
        rhs += c * load.terms[r].f;
      }
      try {
        SparseFactorization lu(lhs);
        U = lu.solve(rhs);
      } catch (const NumericalError& e) {
        throw EnrichmentError(std::string("enrichment spatial solve failed: ") + e.what(), u);
      }
      if (!U.allFinite()) throw EnrichmentError("enrichment diverged (non-finite spatial mode)", u);

      // --- parametric directions ---
      std::vector<Vector> KU(n_ops);
      for (int l = 0; l < n_ops; ++l) KU[l] = op.terms[l].ff * U;
      for (int k = 0; k < n_dims; ++k) {
        const int nk = op.grid->dims[k].n;
        Vector num = Vector::Zero(nk), den = Vector::Zero(nk);
        for (int l = 0; l < n_ops; ++l) {
          double w = U.dot(KU[l]);
          for (int k2 = 0; k2 < n_dims; ++k2) {
            if (k2 == k) continue;
            w *= (op.terms[l].factors[k2].array() * phi[k2].array() * phi[k2].array()).sum();
          }
          den += w * op.terms[l].factors[k];
          for (int t = 0; t < u.rank(); ++t) {
            double c = U.dot(op_times_mode[l][static_cast<size_t>(t)]);
            for (int k2 = 0; k2 < n_dims; ++k2) {
              if (k2 == k) continue;
              c *= (op.terms[l].factors[k2].array() * u.terms[t].factors[k2].array() *
                    phi[k2].array())
                       .sum();
            }
            num -= c * (op.terms[l].factors[k].array() * u.terms[t].factors[k].array()).matrix();
          }
        }
        for (int r = 0; r < n_loads; ++r) {
          double c = load.terms[r].f.dot(U);
          for (int k2 = 0; k2 < n_dims; ++k2) {
            if (k2 == k) continue;
            c *= load.terms[r].factors[k2].dot(phi[k2]);
          }
          num += c * load.terms[r].factors[k];
        }
        for (int p = 0; p < nk; ++p) phi[k][p] = den[p] != 0.0 ? num[p] / den[p] : 0.0;
        if (!phi[k].allFinite())
          throw EnrichmentError("enrichment diverged (non-finite parametric mode)", u);
      }

      normalize_mode(U, phi);
      amp = product_norm(U, phi);
      if (!std::isfinite(amp)) throw EnrichmentError("enrichment diverged (non-finite amplitude)", u);
      if (sweep > 0 && std::abs(amp - amp_prev) <= options.sweep_tol * std::max(amp, 1e-300)) break;
      amp_prev = amp;
    }

    if (m == 0) {
      first_amp = amp;
      if (amp == 0.0) {
        report.termination = "zero_rhs";
        break;
      }
    } else if (amp <= options.enrich_tol * first_amp) {
      // sub-tolerance mode is discarded
      report.termination = "amplitude_tol";
      break;
    }

    Mode mode;
    mode.spatial = U;
    mode.factors = phi;
    u.terms.push_back(std::move(mode));
    report.amplitudes.push_back(amp);
    for (int l = 0; l < n_ops; ++l) op_times_mode[l].push_back(op.terms[l].ff * U);
    if (u.rank() == options.max_modes) report.termination = "max_modes";
  }

  report.modes_before_compression = u.rank();
  report.modes_after = u.rank();
  if (report.termination.empty()) report.termination = "max_modes";
  return {std::move(u), std::move(report)};
}

SeparatedTensor compress(const SeparatedTensor& t, double comp_tol, int max_sweeps) {
  if (t.rank() <= 1) return t;
  const double target_norm = tensor_norm(t);
  SeparatedTensor s = SeparatedTensor::zero(t.spatial_dim, t.grid);
  if (target_norm == 0.0) return s;

  const int n_dims = t.grid->ndims();
  while (s.rank() < t.rank()) {
    Vector U = Vector::Zero(t.spatial_dim);
    std::vector<Vector> phi(n_dims);
    for (int k = 0; k < n_dims; ++k) phi[k] = Vector::Ones(t.grid->dims[k].n);

    double amp_prev = 0.0;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      // spatial direction: identity operator least squares against the target
      double denom = 1.0;
      for (int k = 0; k < n_dims; ++k) denom *= phi[k].squaredNorm();
      U.setZero();
      for (const Mode& mt : t.terms) {
        double c = 1.0;
        for (int k = 0; k < n_dims; ++k) c *= mt.factors[k].dot(phi[k]);
        U += c * mt.spatial;
      }
      for (const Mode& ms : s.terms) {
        double c = 1.0;
        for (int k = 0; k < n_dims; ++k) c *= ms.factors[k].dot(phi[k]);
        U -= c * ms.spatial;
      }
      U /= denom;

      for (int k = 0; k < n_dims; ++k) {
        double dk = U.squaredNorm();
        for (int k2 = 0; k2 < n_dims; ++k2)
          if (k2 != k) dk *= phi[k2].squaredNorm();
        Vector num = Vector::Zero(t.grid->dims[k].n);
        for (const Mode& mt : t.terms) {
          double c = mt.spatial.dot(U);
          for (int k2 = 0; k2 < n_dims; ++k2)
            if (k2 != k) c *= mt.factors[k2].dot(phi[k2]);
          num += c * mt.factors[k];
        }
        for (const Mode& ms : s.terms) {
          double c = ms.spatial.dot(U);
          for (int k2 = 0; k2 < n_dims; ++k2)
            if (k2 != k) c *= ms.factors[k2].dot(phi[k2]);
          num -= c * ms.factors[k];
        }
        phi[k] = dk != 0.0 ? Vector(num / dk) : Vector::Zero(t.grid->dims[k].n);
      }

      normalize_mode(U, phi);
      const double amp = product_norm(U, phi);
      if (sweep > 0 && std::abs(amp - amp_prev) <= 1e-8 * std::max(amp, 1e-300)) break;
      amp_prev = amp;
    }

    Mode mode;
    mode.spatial = U;
    mode.factors = phi;
    s.terms.push_back(std::move(mode));

    if (tensor_diff_norm(t, s) <= comp_tol * target_norm) return s;
  }
  // rank budget exhausted without hitting the tolerance: the original listing
  // already satisfies it exactly
  return t;
}

}  // namespace ddrom
