// SPDX-License-Identifier: Apache-2.0

#ifndef DDROM_FEM_HPP
#define DDROM_FEM_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ddrom/grid.hpp"
#include "ddrom/mesh.hpp"

namespace ddrom {

// Spatial coefficient factor b(x) of one affine term.
struct CoefficientField {
  enum class Kind { Constant, Nodal, Region, Analytic };
  Kind kind = Kind::Constant;
  double value = 1.0;                          // Constant
  Vector nodal;                                // Nodal: one value per mesh node
  std::vector<int> element_region;             // Region: per-element region id
  std::map<int, double> region_values;         // Region: id -> value
  std::function<double(double, double)> fn;    // Analytic

  static CoefficientField constant(double v);
  static CoefficientField nodal_field(Vector v);
  static CoefficientField region_field(std::vector<int> regions, std::map<int, double> values);
  static CoefficientField analytic(std::function<double(double, double)> f);
};

// One term of the separated bilinear form: sparse blocks over the free dofs
// and the free x constrained coupling, plus one tabulated parametric factor
// vector per grid dimension.
struct AffineTerm {
  SpMat ff;
  SpMat fc;
  std::vector<Vector> factors;
  std::string label;
};

struct AffineOperator {
  GridPtr grid;
  std::vector<AffineTerm> terms;
  int n_free = 0;
  int n_constrained = 0;

  // Coefficient of each term at a parameter point (product of its factors).
  std::vector<double> coefficients(const std::vector<double>& mu) const;
  // Dense-parameter evaluation: sum of coefficient-weighted ff blocks.
  SpMat evaluate_ff(const std::vector<double>& mu) const;
  SpMat evaluate_fc(const std::vector<double>& mu) const;
};

struct LoadTerm {
  Vector f;  // over free dofs
  std::vector<Vector> factors;
};

struct SeparatedLoad {
  GridPtr grid;
  std::vector<LoadTerm> terms;

  Vector evaluate_at(const std::vector<double>& mu) const;
};

struct AssembledBlocks {
  SpMat ff;
  SpMat fc;
};

// Q1 continuous Galerkin diffusion: integral of b grad(u).grad(v), 2x2 Gauss.
AssembledBlocks assemble_diffusion(const QuadMesh& mesh, const CoefficientField& b,
                                   const DofPartition& dofs);

// Mass-type term: integral of b u v (used by tests and manufactured cases).
AssembledBlocks assemble_mass(const QuadMesh& mesh, const CoefficientField& b,
                              const DofPartition& dofs);

// Single-direction stiffness: integral of b du/dx_axis dv/dx_axis. Carries the
// directional blocks of geometrically mapped operators.
AssembledBlocks assemble_diffusion_axis(const QuadMesh& mesh, const CoefficientField& b, int axis,
                                        const DofPartition& dofs);

using VelocityField = std::function<Eigen::Vector2d(double, double)>;

// Stabilization parameter rule for the streamline term.
struct SupgRule {
  enum class Kind { Zero, UpwindLimit, Coth };
  Kind kind = Kind::UpwindLimit;
  double nu = 1.0;  // diffusion used by the Coth Peclet formula

  static SupgRule zero() { return {Kind::Zero, 0.0}; }
  static SupgRule upwind_limit() { return {Kind::UpwindLimit, 0.0}; }
  static SupgRule coth(double nu) { return {Kind::Coth, nu}; }
};

// Galerkin convection integral of (a.grad u) v plus the SUPG streamline term
// integral of tau (a.grad u)(a.grad v), emitted as separate blocks in this
// order. tau is elementwise h_a/(2|a|) times the upwind function of the rule.
std::vector<AssembledBlocks> assemble_convection_supg(const QuadMesh& mesh,
                                                      const VelocityField& velocity,
                                                      const SupgRule& rule,
                                                      const DofPartition& dofs);

// Volume load for f plus boundary-flux contributions on tagged Neumann edges,
// over free dofs. `flux` maps TagKind::NeumannInflow edges to the flux value.
Vector assemble_load(const QuadMesh& mesh, const CoefficientField& f, const DofPartition& dofs,
                     const std::map<TagKind, double>& flux = {});

// Nodal Dirichlet lift: boundary values at Dirichlet nodes, zero elsewhere.
Vector build_dirichlet_lift(const QuadMesh& mesh,
                            const std::function<double(double, double)>& boundary_values);

}  // namespace ddrom

#endif
