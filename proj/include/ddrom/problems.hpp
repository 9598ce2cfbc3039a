// SPDX-License-Identifier: Apache-2.0

#ifndef DDROM_PROBLEMS_HPP
#define DDROM_PROBLEMS_HPP

#include <functional>
#include <string>
#include <vector>

#include "ddrom/fem.hpp"
#include "ddrom/tensor.hpp"

namespace ddrom {

// Everything attached to one subdomain on which surrogates are built: the
// reference topology, the separated operator and data, and a direct
// quadrature assembler used as the full-order / oracle path.
struct BuildDomain {
  std::string name;
  SubdomainTopology topo;
  GridPtr grid;
  AffineOperator op;
  SeparatedLoad load;            // may have zero terms
  SeparatedTensor lift;          // Dirichlet lift over all mesh nodes (rank 0 when zero)
  std::function<AssembledBlocks(const std::vector<double>&)> direct_assemble;
};

// Physical placement of a build domain, with the wiring of its interface
// slots to other instances (or to fixed a-priori interface values).
struct Instance {
  int domain = 0;
  GeometryMap map;
  std::vector<int> mu_slots;        // query indices feeding the domain grid dims
  std::vector<NeighborLink> links;  // parallel to topo.interfaces
};

struct MonolithicProblem {
  QuadMesh mesh;
  DofPartition dofs;  // only external Dirichlet constrained
  SpMat ff;
  SpMat fc;
  Vector load_free;
  Vector lift;  // all nodes
};

struct Problem {
  std::string id;
  int n_query = 0;
  std::vector<double> default_query;
  std::vector<BuildDomain> domains;
  std::vector<Instance> instances;
  std::function<MonolithicProblem(const std::vector<double>&)> monolithic;
  std::function<double(double, double, const std::vector<double>&)> exact;  // may be null

  const BuildDomain& domain_of(int instance) const { return domains[instances[instance].domain]; }
  std::vector<double> local_mu(int instance, const std::vector<double>& query) const;
  QuadMesh instance_mesh(int instance, const std::vector<double>& query) const;
  void check_query(const std::vector<double>& query) const;
};

struct ProblemOptions {
  // two-domain parametric Poisson
  double poisson_h = 5e-2;
  GridDim poisson_mu{"mu", 1.0, 50.0, 49001};

  // channel convection-diffusion with geometric parameter
  int graetz_y_rows = 20;          // wall-graded rows across the channel height
  double graetz_y_first = 1e-2;    // first cell height at each wall
  int graetz_inlet_cols = 25;      // columns in [0,1] of the inlet subdomain
  int graetz_channel_cols = 78;    // columns in (hbar,1] of the reference channel
  int graetz_overlap_cols = 2;     // columns across the overlap strip
  double graetz_hbar = 5e-2;
  GridDim graetz_mu1{"mu1", 1e4, 2e4, 100001};
  GridDim graetz_mu2{"mu2", 0.5, 4.0, 3501};

  // multi-domain thermal problem on crosses
  CrossSpec cross;
  GridDim cross_mu{"mu_hat", 5e-2, 10.0, 9951};
};

Problem make_poisson_2d(const ProblemOptions& opts = {});
Problem make_graetz(const ProblemOptions& opts = {});
Problem make_thermal_cross(const ProblemOptions& opts = {});
// Degenerate single-domain decomposition of the Poisson benchmark (no interfaces).
Problem make_poisson_single_domain(const ProblemOptions& opts = {});

Problem make_problem(const std::string& id, const ProblemOptions& opts = {});

// Node index map from `nodes` of one instance mesh onto another instance mesh,
// both taken at their physical placement.
std::vector<int> match_nodes_across(const QuadMesh& from_mesh, const GeometryMap& from_map,
                                    const std::vector<int>& nodes, const QuadMesh& to_mesh,
                                    const GeometryMap& to_map, const std::vector<double>& mu);

}  // namespace ddrom

#endif
