// SPDX-License-Identifier: Apache-2.0

#ifndef DDROM_PGD_HPP
#define DDROM_PGD_HPP

#include <cstdint>
#include <string>

#include "ddrom/fem.hpp"
#include "ddrom/tensor.hpp"

namespace ddrom {

struct EnrichmentReport {
  int modes_before_compression = 0;
  int modes_after = 0;
  std::vector<double> amplitudes;  // per accepted mode
  std::string termination;         // amplitude_tol | max_modes | zero_rhs
  std::uint64_t seed = 0;
  int total_sweeps = 0;
};

class EnrichmentError : public NumericalError {
public:
  EnrichmentError(const std::string& msg, SeparatedTensor partial)
      : NumericalError(msg), partial_result(std::move(partial)) {}
  SeparatedTensor partial_result;
};

struct GreedyOptions {
  double enrich_tol = 1e-4;  // relative amplitude stop for new modes
  int max_modes = 80;
  int max_sweeps = 30;        // alternating-direction sweeps per mode
  double sweep_tol = 1e-6;    // relative amplitude change between sweeps
  std::uint64_t seed = 0;
};

// Greedy rank-one enrichment of the separated solution of
//   A(u, v; mu) = F(v; mu)  for all v and all mu on the collocation grid,
// with each mode computed by alternating directions (space first, then each
// parametric dimension) on the Galerkin residual of the current expansion.
std::pair<SeparatedTensor, EnrichmentReport> greedy_solve(const AffineOperator& op,
                                                          const SeparatedLoad& load,
                                                          const GreedyOptions& options = {});

// Rank reduction by alternating-least-squares re-approximation of the tensor
// against itself, stopping when the weighted-l2 discrepancy falls below
// comp_tol relative to ||t||. Never increases rank; idempotent up to
// tolerance.
SeparatedTensor compress(const SeparatedTensor& t, double comp_tol = 1e-3, int max_sweeps = 30);

}  // namespace ddrom

#endif
