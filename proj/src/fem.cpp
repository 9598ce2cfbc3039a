// SPDX-License-Identifier: Apache-2.0

#include "ddrom/fem.hpp"

#include <cmath>

namespace ddrom {

CoefficientField CoefficientField::constant(double v) {
  CoefficientField c;
  c.kind = Kind::Constant;
  c.value = v;
  return c;
}

CoefficientField CoefficientField::nodal_field(Vector v) {
  CoefficientField c;
  c.kind = Kind::Nodal;
  c.nodal = std::move(v);
  return c;
}

CoefficientField CoefficientField::region_field(std::vector<int> regions,
                                                std::map<int, double> values) {
  CoefficientField c;
  c.kind = Kind::Region;
  c.element_region = std::move(regions);
  c.region_values = std::move(values);
  return c;
}

CoefficientField CoefficientField::analytic(std::function<double(double, double)> f) {
  CoefficientField c;
  c.kind = Kind::Analytic;
  c.fn = std::move(f);
  return c;
}

namespace {

struct QuadPoint {
  double xi, eta, w;
};

// 2x2 Gauss-Legendre on [-1,1]^2
const QuadPoint kGauss[4] = {
    {-0.5773502691896257, -0.5773502691896257, 1.0},
    {+0.5773502691896257, -0.5773502691896257, 1.0},
    {+0.5773502691896257, +0.5773502691896257, 1.0},
    {-0.5773502691896257, +0.5773502691896257, 1.0},
};

void shape_q1(double xi, double eta, double N[4], double dN[4][2]) {
  N[0] = 0.25 * (1 - xi) * (1 - eta);
  N[1] = 0.25 * (1 + xi) * (1 - eta);
  N[2] = 0.25 * (1 + xi) * (1 + eta);
  N[3] = 0.25 * (1 - xi) * (1 + eta);
  dN[0][0] = -0.25 * (1 - eta); dN[0][1] = -0.25 * (1 - xi);
  dN[1][0] = +0.25 * (1 - eta); dN[1][1] = -0.25 * (1 + xi);
  dN[2][0] = +0.25 * (1 + eta); dN[2][1] = +0.25 * (1 + xi);
  dN[3][0] = -0.25 * (1 + eta); dN[3][1] = +0.25 * (1 - xi);
}

struct ElementGeometry {
  Eigen::Vector2d p[4];
  void load(const QuadMesh& mesh, int e) {
    for (int k = 0; k < 4; ++k) p[k] = mesh.nodes[mesh.elements[e][k]];
  }
  // Jacobian, inverse-transpose gradient map and |J| at a quadrature point.
  void mapping(const double dN[4][2], Eigen::Matrix2d& J, double& detJ) const {
    J.setZero();
    for (int k = 0; k < 4; ++k) {
      J(0, 0) += dN[k][0] * p[k].x();
      J(0, 1) += dN[k][0] * p[k].y();
      J(1, 0) += dN[k][1] * p[k].x();
      J(1, 1) += dN[k][1] * p[k].y();
    }
    detJ = J.determinant();
  }
};

double coeff_at(const CoefficientField& c, const QuadMesh& mesh, int e, const double N[4],
                double x, double y) {
  switch (c.kind) {
    case CoefficientField::Kind::Constant:
      return c.value;
    case CoefficientField::Kind::Nodal: {
      if (c.nodal.size() != mesh.num_nodes())
        throw ConfigError("nodal coefficient length mismatch");
      double v = 0;
      for (int k = 0; k < 4; ++k) v += N[k] * c.nodal[mesh.elements[e][k]];
      return v;
    }
    case CoefficientField::Kind::Region: {
      if (c.element_region.size() != static_cast<size_t>(mesh.num_elements()))
        throw ConfigError("region assignment length mismatch");
      auto it = c.region_values.find(c.element_region[e]);
      if (it == c.region_values.end()) throw ConfigError("element region without a value");
      return it->second;
    }
    case CoefficientField::Kind::Analytic:
      return c.fn(x, y);
  }
  return 0.0;
}

// Scatter a 4x4 element matrix into (ff, fc) triplet lists.
struct BlockAssembler {
  const DofPartition& dofs;
  std::vector<Triplet> ff, fc;

  explicit BlockAssembler(const DofPartition& d) : dofs(d) {}

  void add(const QuadMesh& mesh, int e, const Eigen::Matrix4d& ke) {
    const auto& el = mesh.elements[e];
    for (int i = 0; i < 4; ++i) {
      const int fi = dofs.node_to_free[el[i]];
      if (fi < 0) continue;
      for (int j = 0; j < 4; ++j) {
        const int fj = dofs.node_to_free[el[j]];
        if (fj >= 0)
          ff.emplace_back(fi, fj, ke(i, j));
        else
          fc.emplace_back(fi, dofs.node_to_constrained[el[j]], ke(i, j));
      }
    }
  }

  AssembledBlocks finish() const {
    AssembledBlocks out;
    out.ff.resize(dofs.n_free(), dofs.n_free());
    out.fc.resize(dofs.n_free(), dofs.n_constrained());
    out.ff.setFromTriplets(ff.begin(), ff.end());
    out.fc.setFromTriplets(fc.begin(), fc.end());
    out.ff.makeCompressed();
    out.fc.makeCompressed();
    return out;
  }
};

}  // namespace

AssembledBlocks assemble_diffusion(const QuadMesh& mesh, const CoefficientField& b,
                                   const DofPartition& dofs) {
  if (dofs.n_free() == 0) throw ConfigError("assembly with empty free-dof set");
  BlockAssembler acc(dofs);
  ElementGeometry geo;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    geo.load(mesh, e);
    Eigen::Matrix4d ke = Eigen::Matrix4d::Zero();
    for (const auto& q : kGauss) {
      double N[4], dN[4][2];
      shape_q1(q.xi, q.eta, N, dN);
      Eigen::Matrix2d J;
      double detJ;
      geo.mapping(dN, J, detJ);
      const Eigen::Matrix2d Jinv = J.inverse();
      Eigen::Vector2d grad[4];
      for (int k = 0; k < 4; ++k)
        grad[k] = Jinv.transpose() * Eigen::Vector2d(dN[k][0], dN[k][1]);
      double x = 0, y = 0;
      for (int k = 0; k < 4; ++k) {
        x += N[k] * geo.p[k].x();
        y += N[k] * geo.p[k].y();
      }
      const double bv = coeff_at(b, mesh, e, N, x, y);
      const double w = q.w * detJ * bv;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) ke(i, j) += w * grad[i].dot(grad[j]);
    }
    acc.add(mesh, e, ke);
  }
  return acc.finish();
}

AssembledBlocks assemble_mass(const QuadMesh& mesh, const CoefficientField& b,
                              const DofPartition& dofs) {
  if (dofs.n_free() == 0) throw ConfigError("assembly with empty free-dof set");
  BlockAssembler acc(dofs);
  ElementGeometry geo;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    geo.load(mesh, e);
    Eigen::Matrix4d ke = Eigen::Matrix4d::Zero();
    for (const auto& q : kGauss) {
      double N[4], dN[4][2];
      shape_q1(q.xi, q.eta, N, dN);
      Eigen::Matrix2d J;
      double detJ;
      geo.mapping(dN, J, detJ);
      double x = 0, y = 0;
      for (int k = 0; k < 4; ++k) {
        x += N[k] * geo.p[k].x();
        y += N[k] * geo.p[k].y();
      }
      const double w = q.w * detJ * coeff_at(b, mesh, e, N, x, y);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) ke(i, j) += w * N[i] * N[j];
    }
    acc.add(mesh, e, ke);
  }
  return acc.finish();
}

AssembledBlocks assemble_diffusion_axis(const QuadMesh& mesh, const CoefficientField& b, int axis,
                                        const DofPartition& dofs) {
  if (dofs.n_free() == 0) throw ConfigError("assembly with empty free-dof set");
  if (axis < 0 || axis > 1) throw ConfigError("axis must be 0 or 1");
  BlockAssembler acc(dofs);
  ElementGeometry geo;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    geo.load(mesh, e);
    Eigen::Matrix4d ke = Eigen::Matrix4d::Zero();
    for (const auto& q : kGauss) {
      double N[4], dN[4][2];
      shape_q1(q.xi, q.eta, N, dN);
      Eigen::Matrix2d J;
      double detJ;
      geo.mapping(dN, J, detJ);
      const Eigen::Matrix2d Jinv = J.inverse();
      Eigen::Vector2d grad[4];
      for (int k = 0; k < 4; ++k)
        grad[k] = Jinv.transpose() * Eigen::Vector2d(dN[k][0], dN[k][1]);
      double x = 0, y = 0;
      for (int k = 0; k < 4; ++k) {
        x += N[k] * geo.p[k].x();
        y += N[k] * geo.p[k].y();
      }
      const double w = q.w * detJ * coeff_at(b, mesh, e, N, x, y);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) ke(i, j) += w * grad[i][axis] * grad[j][axis];
    }
    acc.add(mesh, e, ke);
  }
  return acc.finish();
}

std::vector<AssembledBlocks> assemble_convection_supg(const QuadMesh& mesh,
                                                      const VelocityField& velocity,
                                                      const SupgRule& rule,
                                                      const DofPartition& dofs) {
  if (dofs.n_free() == 0) throw ConfigError("assembly with empty free-dof set");
  BlockAssembler conv(dofs), supg(dofs);
  ElementGeometry geo;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    geo.load(mesh, e);
    // element size in the streamline direction (projected widths for rectangles)
    const Eigen::Vector2d c = 0.25 * (geo.p[0] + geo.p[1] + geo.p[2] + geo.p[3]);
    const double hx = (geo.p[1] - geo.p[0]).norm();
    const double hy = (geo.p[3] - geo.p[0]).norm();
    if (hx <= 0 || hy <= 0) throw ConfigError("zero element size in SUPG assembly");
    const Eigen::Vector2d ac = velocity(c.x(), c.y());
    const double an = ac.norm();
    double tau = 0.0;
    if (an > 1e-14 && rule.kind != SupgRule::Kind::Zero) {
      const double ha = (std::abs(ac.x()) * hx + std::abs(ac.y()) * hy) / an;
      tau = ha / (2.0 * an);
      if (rule.kind == SupgRule::Kind::Coth) {
        const double pe = an * ha / (2.0 * rule.nu);
        tau *= 1.0 / std::tanh(pe) - 1.0 / pe;
      }
    }

    Eigen::Matrix4d kc = Eigen::Matrix4d::Zero(), ks = Eigen::Matrix4d::Zero();
    for (const auto& q : kGauss) {
      double N[4], dN[4][2];
      shape_q1(q.xi, q.eta, N, dN);
      Eigen::Matrix2d J;
      double detJ;
      geo.mapping(dN, J, detJ);
      const Eigen::Matrix2d Jinv = J.inverse();
      Eigen::Vector2d grad[4];
      for (int k = 0; k < 4; ++k)
        grad[k] = Jinv.transpose() * Eigen::Vector2d(dN[k][0], dN[k][1]);
      double x = 0, y = 0;
      for (int k = 0; k < 4; ++k) {
        x += N[k] * geo.p[k].x();
        y += N[k] * geo.p[k].y();
      }
      const Eigen::Vector2d a = velocity(x, y);
      double adg[4];
      for (int k = 0; k < 4; ++k) adg[k] = a.dot(grad[k]);
      const double w = q.w * detJ;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          kc(i, j) += w * adg[j] * N[i];
          ks(i, j) += w * tau * adg[j] * adg[i];
        }
    }
    conv.add(mesh, e, kc);
    supg.add(mesh, e, ks);
  }
  return {conv.finish(), supg.finish()};
}

Vector assemble_load(const QuadMesh& mesh, const CoefficientField& f, const DofPartition& dofs,
                     const std::map<TagKind, double>& flux) {
  Vector out = Vector::Zero(dofs.n_free());
  ElementGeometry geo;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    geo.load(mesh, e);
    for (const auto& q : kGauss) {
      double N[4], dN[4][2];
      shape_q1(q.xi, q.eta, N, dN);
      Eigen::Matrix2d J;
      double detJ;
      geo.mapping(dN, J, detJ);
      double x = 0, y = 0;
      for (int k = 0; k < 4; ++k) {
        x += N[k] * geo.p[k].x();
        y += N[k] * geo.p[k].y();
      }
      const double fv = coeff_at(f, mesh, e, N, x, y);
      for (int k = 0; k < 4; ++k) {
        const int fi = dofs.node_to_free[mesh.elements[e][k]];
        if (fi >= 0) out[fi] += q.w * detJ * fv * N[k];
      }
    }
  }

  if (!flux.empty()) {
    for (const auto& [kind, value] : flux)
      if (kind != TagKind::NeumannInflow)
        throw ConfigError("flux may only be assigned to inflow-tagged edges");
    bool any = false;
    for (const auto& edge : boundary_edges(mesh)) {
      auto t0 = mesh.boundary_tags.find(edge[0]);
      auto t1 = mesh.boundary_tags.find(edge[1]);
      if (t0 == mesh.boundary_tags.end() || t1 == mesh.boundary_tags.end()) continue;
      auto it = flux.find(TagKind::NeumannInflow);
      if (it == flux.end()) continue;
      if (t0->second.kind != TagKind::NeumannInflow || t1->second.kind != TagKind::NeumannInflow)
        continue;
      any = true;
      // exact trace integration of the constant flux against the Q1 edge basis
      const double len = (mesh.nodes[edge[1]] - mesh.nodes[edge[0]]).norm();
      for (int k = 0; k < 2; ++k) {
        const int fi = dofs.node_to_free[edge[k]];
        if (fi >= 0) out[fi] += 0.5 * len * it->second;
      }
    }
    if (!any) throw ConfigError("flux requested but no inflow-tagged edge exists");
  }
  return out;
}

Vector build_dirichlet_lift(const QuadMesh& mesh,
                            const std::function<double(double, double)>& boundary_values) {
  if (!boundary_values) throw ConfigError("missing Dirichlet boundary values");
  Vector lift = Vector::Zero(mesh.num_nodes());
  for (const auto& [node, tag] : mesh.boundary_tags)
    if (tag.kind == TagKind::DirichletExternal)
      lift[node] = boundary_values(mesh.nodes[node].x(), mesh.nodes[node].y());
  return lift;
}

std::vector<double> AffineOperator::coefficients(const std::vector<double>& mu) const {
  std::vector<double> c(terms.size(), 1.0);
  for (size_t t = 0; t < terms.size(); ++t)
    for (int k = 0; k < grid->ndims(); ++k)
      c[t] *= interp_mode(grid->dims[k], terms[t].factors[k], mu[k]);
  return c;
}

SpMat AffineOperator::evaluate_ff(const std::vector<double>& mu) const {
  auto c = coefficients(mu);
  SpMat out(n_free, n_free);
  for (size_t t = 0; t < terms.size(); ++t) out += c[t] * terms[t].ff;
  out.makeCompressed();
  return out;
}

SpMat AffineOperator::evaluate_fc(const std::vector<double>& mu) const {
  auto c = coefficients(mu);
  SpMat out(n_free, n_constrained);
  for (size_t t = 0; t < terms.size(); ++t) out += c[t] * terms[t].fc;
  out.makeCompressed();
  return out;
}

Vector SeparatedLoad::evaluate_at(const std::vector<double>& mu) const {
  Vector out;
  bool first = true;
  for (const auto& term : terms) {
    double c = 1.0;
    for (int k = 0; k < grid->ndims(); ++k)
      c *= interp_mode(grid->dims[k], term.factors[k], mu[k]);
    if (first) {
      out = c * term.f;
      first = false;
    } else {
      out += c * term.f;
    }
  }
  if (first) out = Vector();
  return out;
}

}  // namespace ddrom
