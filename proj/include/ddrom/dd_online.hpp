// SPDX-License-Identifier: Apache-2.0

#ifndef DDROM_DD_ONLINE_HPP
#define DDROM_DD_ONLINE_HPP

#include "ddrom/dd_offline.hpp"
#include "ddrom/fullorder.hpp"

namespace ddrom {

// All mu-dependence of one instance resolved at the queried parameters. For
// the reduced-dimensionality strategy the interface expansions collapse to a
// column per interface dof; the clustered strategy keeps its interface
// parameter dimensions unevaluated.
struct EvaluatedSurrogate {
  int instance = 0;
  Vector u0f_full;      // data-part field over all nodes
  Vector lift_full;     // Dirichlet lift plus fixed interface values
  Matrix columns_full;  // nodes x (stacked interface dofs); reduced only
  std::vector<SeparatedTensor> sliced;  // clustered: per cluster, lambda dims only
  std::vector<std::vector<int>> clusters;
  std::pair<double, double> aip_interval{0.0, 0.0};
};

std::vector<EvaluatedSurrogate> pre_evaluate(const Problem& problem, const SurrogateLibrary& lib,
                                             const std::vector<double>& query);

// Local surrogate operator: columns * Lambda + nodal extension of Lambda
// (reduced), or the sum of cluster tensors evaluated at the Lambda slices plus
// the extension (clustered). `lambda` stacks all own interface dofs.
Vector apply_local_operator(const SubdomainTopology& topo, const EvaluatedSurrogate& ev,
                            const Vector& lambda, bool clamp_aip = false);

struct InterfaceBlock {
  int instance;
  int slot;
  int offset;
  int size;
};

struct InterfaceSystem {
  std::vector<InterfaceBlock> blocks;
  int dim = 0;
  LinearOperator op;
  Vector rhs;
  bool clamp_aip = false;
};

InterfaceSystem build_interface_system(const Problem& problem,
                                       const std::vector<EvaluatedSurrogate>& evs,
                                       bool clamp_aip = false);

struct CouplingSolution {
  std::vector<Vector> lambda;  // per instance, stacked own interface dofs (fixed slots included)
  int iterations = 0;
  std::vector<double> residual_history;
  int interface_dim = 0;
  std::vector<Vector> instance_fields;
  GlobalField global;
  double online_seconds = 0.0;
};

CouplingSolution solve_online(const Problem& problem, const SurrogateLibrary& lib,
                              const std::vector<double>& query, double rel_tol = 1e-6,
                              bool clamp_aip = false);

void write_solution_csv(const CouplingSolution& sol, const std::string& path);

}  // namespace ddrom

#endif
