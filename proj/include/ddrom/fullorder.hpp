// SPDX-License-Identifier: Apache-2.0

#ifndef DDROM_FULLORDER_HPP
#define DDROM_FULLORDER_HPP

#include "ddrom/linalg.hpp"
#include "ddrom/problems.hpp"

namespace ddrom {

// A nodal field on the composed global mesh, with per-node owning instance.
struct GlobalField {
  QuadMesh mesh;
  Vector values;
  std::vector<int> owner;
};

// Union of the instance meshes at the queried parameters (first-listed
// instance owns a shared node).
GlobalField compose_global(const Problem& problem, const std::vector<double>& query,
                           const std::vector<Vector>& instance_fields);

struct FullOrderSolution {
  QuadMesh mesh;
  Vector values;
  std::vector<Vector> instance_fields;  // dd-fem only
  int iterations = 0;
  std::vector<double> residual_history;
  int interface_dim = 0;
  double wall_seconds = 0.0;
};

// Monolithic Galerkin solve of the benchmark at the queried parameters.
FullOrderSolution solve_monolithic(const Problem& problem, const std::vector<double>& query);

struct DdfemOptions {
  double rel_tol = 1e-6;
  int max_iter = 0;  // 0: interface dimension
  // Re-assemble and re-factorize the local problem at every application, the
  // cost profile of a non-intrusive black-box local solver. Results are
  // identical; only the wall time changes.
  bool blackbox = false;
};

// Full-order overlapping Schwarz coupling: GMRES on the interface system with
// exact (sparse LU) local solves, then global reconstruction.
FullOrderSolution solve_ddfem(const Problem& problem, const std::vector<double>& query,
                              const DdfemOptions& options = {});

// Relative L2(Omega) error by 2x2 element quadrature against a nodal or
// analytic reference on the same mesh.
double error_l2(const QuadMesh& mesh, const Vector& u, const Vector& ref);
double error_l2_analytic(const QuadMesh& mesh, const Vector& u,
                         const std::function<double(double, double)>& ref);

// Relative max-norm over nodes, and per-node scaled errors |u-ref|/max|ref|.
double error_linf(const Vector& u, const Vector& ref);
Vector error_map(const Vector& u, const Vector& ref);
void write_error_map_csv(const QuadMesh& mesh, const Vector& scaled, const std::string& path);

// Values of `from` at the nodes of `to_mesh` (coordinate matching; every node
// of to_mesh must exist in from_mesh).
Vector remap_field(const QuadMesh& from_mesh, const Vector& from_values, const QuadMesh& to_mesh);

}  // namespace ddrom

#endif
