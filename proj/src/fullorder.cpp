// SPDX-License-Identifier: Apache-2.0

#include "ddrom/fullorder.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace ddrom {

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

// Constrained nodal values of one instance: Dirichlet lift plus fixed
// interface slots; coupled interface entries are zero here.
Vector constrained_values(const Problem& problem, int i, const std::vector<double>& mu,
                          const Vector& lift_full) {
  const BuildDomain& dom = problem.domain_of(i);
  const Instance& inst = problem.instances[static_cast<size_t>(i)];
  const DofPartition& part = dom.topo.partition;
  Vector c(part.n_constrained());
  for (int k = 0; k < part.n_constrained(); ++k)
    c[k] = lift_full[part.constrained_nodes[static_cast<size_t>(k)]];
  for (size_t s = 0; s < dom.topo.interfaces.size(); ++s) {
    if (!inst.links[s].fixed) continue;
    for (int node : dom.topo.interfaces[s].dof_indices)
      c[part.node_to_constrained[node]] = inst.links[s].fixed_value;
  }
  (void)mu;
  return c;
}

Vector full_field(const DofPartition& part, const Vector& free_vals, const Vector& con_vals) {
  Vector out = Vector::Zero(part.node_to_free.size());
  for (size_t i = 0; i < part.free_nodes.size(); ++i) out[part.free_nodes[i]] = free_vals[static_cast<int>(i)];
  for (size_t i = 0; i < part.constrained_nodes.size(); ++i)
    out[part.constrained_nodes[i]] = con_vals[static_cast<int>(i)];
  return out;
}

struct Block {
  int instance;
  int slot;
  int offset;
  int size;
};

std::vector<Block> coupled_blocks(const Problem& problem, int& dim) {
  std::vector<Block> blocks;
  dim = 0;
  for (size_t i = 0; i < problem.instances.size(); ++i) {
    const auto& topo = problem.domain_of(static_cast<int>(i)).topo;
    for (size_t s = 0; s < topo.interfaces.size(); ++s) {
      if (problem.instances[i].links[s].fixed) continue;
      blocks.push_back({static_cast<int>(i), static_cast<int>(s), dim, topo.interfaces[s].size()});
      dim += topo.interfaces[s].size();
    }
  }
  return blocks;
}

}  // namespace

GlobalField compose_global(const Problem& problem, const std::vector<double>& query,
                           const std::vector<Vector>& instance_fields) {
  std::vector<QuadMesh> meshes;
  meshes.reserve(problem.instances.size());
  for (size_t i = 0; i < problem.instances.size(); ++i)
    meshes.push_back(problem.instance_mesh(static_cast<int>(i), query));

  std::vector<const QuadMesh*> parts;
  for (const auto& m : meshes) parts.push_back(&m);

  GlobalField g;
  g.mesh = merge_meshes(parts);
  g.values = Vector::Zero(g.mesh.num_nodes());
  g.owner.assign(static_cast<size_t>(g.mesh.num_nodes()), -1);

  CoordIndex index(g.mesh);
  // first-listed instance wins inside overlaps
  for (size_t i = 0; i < meshes.size(); ++i) {
    for (int n = 0; n < meshes[i].num_nodes(); ++n) {
      const int gn = index.find(meshes[i].nodes[n].x(), meshes[i].nodes[n].y());
      if (gn < 0) throw TopologyError("instance node missing from the composed mesh");
      if (g.owner[static_cast<size_t>(gn)] < 0) {
        g.owner[static_cast<size_t>(gn)] = static_cast<int>(i);
        g.values[gn] = instance_fields[i][n];
      }
    }
  }
  return g;
}

FullOrderSolution solve_monolithic(const Problem& problem, const std::vector<double>& query) {
  problem.check_query(query);
  if (!problem.monolithic) throw ConfigError("benchmark has no monolithic formulation");
  Timer timer;
  MonolithicProblem mono = problem.monolithic(query);
  Vector lc(mono.dofs.n_constrained());
  for (int i = 0; i < mono.dofs.n_constrained(); ++i)
    lc[i] = mono.lift[mono.dofs.constrained_nodes[static_cast<size_t>(i)]];
  SparseFactorization lu(mono.ff);
  const Vector u_free = lu.solve(mono.load_free - mono.fc * lc);

  FullOrderSolution sol;
  sol.mesh = std::move(mono.mesh);
  sol.values = full_field(mono.dofs, u_free, lc);
  sol.wall_seconds = timer.seconds();
  return sol;
}

FullOrderSolution solve_ddfem(const Problem& problem, const std::vector<double>& query,
                              const DdfemOptions& options) {
  problem.check_query(query);
  Timer timer;
  const size_t ni = problem.instances.size();

  // per-instance operator blocks and data solves
  std::vector<SpMat> ff(ni), fc(ni);
  std::vector<std::unique_ptr<SparseFactorization>> lu(ni);
  std::vector<Vector> cfix(ni), load_free(ni), data_full(ni), lift_full(ni);
  std::vector<std::vector<double>> mu(ni);
  for (size_t i = 0; i < ni; ++i) {
    const BuildDomain& dom = problem.domain_of(static_cast<int>(i));
    mu[i] = problem.local_mu(static_cast<int>(i), query);
    AssembledBlocks blocks = dom.direct_assemble(mu[i]);
    ff[i] = std::move(blocks.ff);
    fc[i] = std::move(blocks.fc);
    if (!options.blackbox) lu[i] = std::make_unique<SparseFactorization>(ff[i]);

    lift_full[i] = dom.lift.rank() > 0 ? evaluate(dom.lift, mu[i])
                                       : Vector::Zero(dom.topo.mesh.num_nodes());
    cfix[i] = constrained_values(problem, static_cast<int>(i), mu[i], lift_full[i]);
    Vector lf = dom.load.terms.empty() ? Vector::Zero(dom.topo.partition.n_free())
                                       : dom.load.evaluate_at(mu[i]);
    load_free[i] = std::move(lf);
    const Vector rhs = load_free[i] - fc[i] * cfix[i];
    const Vector u0 = options.blackbox ? SparseFactorization(dom.direct_assemble(mu[i]).ff).solve(rhs)
                                       : lu[i]->solve(rhs);
    data_full[i] = full_field(dom.topo.partition, u0, cfix[i]);
  }

  int dim = 0;
  const std::vector<Block> blocks = coupled_blocks(problem, dim);

  FullOrderSolution sol;
  sol.interface_dim = dim;

  Vector lambda = Vector::Zero(dim);
  if (dim > 0) {
    // trace of the neighbor's homogeneous lambda-field on each coupled block
    auto lambda_fields = [&](const Vector& x) {
      std::vector<Vector> fields(ni);
      for (size_t j = 0; j < ni; ++j) {
        const BuildDomain& dom = problem.domain_of(static_cast<int>(j));
        const DofPartition& part = dom.topo.partition;
        Vector c = Vector::Zero(part.n_constrained());
        bool any = false;
        for (const Block& b : blocks) {
          if (b.instance != static_cast<int>(j)) continue;
          const auto& iface = dom.topo.interfaces[static_cast<size_t>(b.slot)];
          for (int k = 0; k < b.size; ++k)
            c[part.node_to_constrained[iface.dof_indices[static_cast<size_t>(k)]]] =
                x[b.offset + k];
          any = true;
        }
        if (!any) {
          fields[j] = Vector::Zero(dom.topo.mesh.num_nodes());
          continue;
        }
        const Vector rhs = -(fc[j] * c);
        const Vector v = options.blackbox
                             ? SparseFactorization(problem.domain_of(static_cast<int>(j))
                                                       .direct_assemble(mu[j])
                                                       .ff)
                                   .solve(rhs)
                             : lu[j]->solve(rhs);
        fields[j] = full_field(part, v, c);
      }
      return fields;
    };

    LinearOperator sigma;
    sigma.rows = sigma.cols = dim;
    sigma.apply = [&](const Vector& x) {
      const std::vector<Vector> fields = lambda_fields(x);
      Vector out = x;
      for (const Block& b : blocks) {
        const Instance& inst = problem.instances[static_cast<size_t>(b.instance)];
        const NeighborLink& link = inst.links[static_cast<size_t>(b.slot)];
        const Vector trace = restrict_to_nodes(fields[static_cast<size_t>(link.neighbor)],
                                               link.nodes_in_neighbor);
        out.segment(b.offset, b.size) -= trace;
      }
      return out;
    };

    Vector rhs = Vector::Zero(dim);
    for (const Block& b : blocks) {
      const Instance& inst = problem.instances[static_cast<size_t>(b.instance)];
      const NeighborLink& link = inst.links[static_cast<size_t>(b.slot)];
      const BuildDomain& dom = problem.domain_of(b.instance);
      const Vector trace = restrict_to_nodes(data_full[static_cast<size_t>(link.neighbor)],
                                             link.nodes_in_neighbor);
      // subtract this side's own prescribed values on the interface (zero for
      // interior interfaces away from the Dirichlet boundary)
      const auto& iface = dom.topo.interfaces[static_cast<size_t>(b.slot)];
      Vector own(b.size);
      for (int k = 0; k < b.size; ++k)
        own[k] = lift_full[static_cast<size_t>(b.instance)]
                          [iface.dof_indices[static_cast<size_t>(k)]];
      rhs.segment(b.offset, b.size) = trace - own;
    }

    const int max_iter = options.max_iter > 0 ? options.max_iter : dim;
    GmresResult res = gmres(sigma, rhs, options.rel_tol, max_iter);
    lambda = std::move(res.x);
    sol.iterations = res.iterations;
    sol.residual_history = std::move(res.residual_history);
  }

  // reconstruction with the converged interface values
  sol.instance_fields.resize(ni);
  for (size_t i = 0; i < ni; ++i) {
    const BuildDomain& dom = problem.domain_of(static_cast<int>(i));
    const DofPartition& part = dom.topo.partition;
    Vector c = cfix[i];
    for (const Block& b : blocks) {
      if (b.instance != static_cast<int>(i)) continue;
      const auto& iface = dom.topo.interfaces[static_cast<size_t>(b.slot)];
      for (int k = 0; k < b.size; ++k)
        c[part.node_to_constrained[iface.dof_indices[static_cast<size_t>(k)]]] =
            lambda[b.offset + k];
    }
    const Vector rhs = load_free[i] - fc[i] * c;
    const Vector u_free = options.blackbox
                              ? SparseFactorization(dom.direct_assemble(mu[i]).ff).solve(rhs)
                              : lu[i]->solve(rhs);
    sol.instance_fields[i] = full_field(part, u_free, c);
  }

  GlobalField g = compose_global(problem, query, sol.instance_fields);
  sol.mesh = std::move(g.mesh);
  sol.values = std::move(g.values);
  sol.wall_seconds = timer.seconds();
  return sol;
}

// ---------------------------------------------------------------------------
// Error norms
// ---------------------------------------------------------------------------

namespace {

const double kGaussPt = 0.5773502691896257;

template <typename RefAt>
double l2_pair(const QuadMesh& mesh, const Vector& u, RefAt&& ref_at) {
  double num = 0.0, den = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements[e];
    const Eigen::Vector2d p[4] = {mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]],
                                  mesh.nodes[el[3]]};
    for (int qx = 0; qx < 2; ++qx)
      for (int qy = 0; qy < 2; ++qy) {
        const double xi = qx == 0 ? -kGaussPt : kGaussPt;
        const double eta = qy == 0 ? -kGaussPt : kGaussPt;
        const double N[4] = {0.25 * (1 - xi) * (1 - eta), 0.25 * (1 + xi) * (1 - eta),
                             0.25 * (1 + xi) * (1 + eta), 0.25 * (1 - xi) * (1 + eta)};
        const double dN[4][2] = {{-0.25 * (1 - eta), -0.25 * (1 - xi)},
                                 {+0.25 * (1 - eta), -0.25 * (1 + xi)},
                                 {+0.25 * (1 + eta), +0.25 * (1 + xi)},
                                 {-0.25 * (1 + eta), +0.25 * (1 - xi)}};
        double j00 = 0, j01 = 0, j10 = 0, j11 = 0, x = 0, y = 0, uh = 0;
        for (int k = 0; k < 4; ++k) {
          j00 += dN[k][0] * p[k].x();
          j01 += dN[k][0] * p[k].y();
          j10 += dN[k][1] * p[k].x();
          j11 += dN[k][1] * p[k].y();
          x += N[k] * p[k].x();
          y += N[k] * p[k].y();
          uh += N[k] * u[el[k]];
        }
        const double detJ = j00 * j11 - j01 * j10;
        const double rv = ref_at(e, x, y, N);
        num += detJ * (uh - rv) * (uh - rv);
        den += detJ * rv * rv;
      }
  }
  if (den <= 0.0) throw ParameterError("error_l2: zero-norm reference");
  return std::sqrt(num / den);
}

}  // namespace

double error_l2(const QuadMesh& mesh, const Vector& u, const Vector& ref) {
  if (u.size() != mesh.num_nodes() || ref.size() != mesh.num_nodes())
    throw ShapeError("error_l2: field lengths must match the mesh");
  return l2_pair(mesh, u, [&](int e, double, double, const double N[4]) {
    double rv = 0;
    for (int k = 0; k < 4; ++k) rv += N[k] * ref[mesh.elements[e][k]];
    return rv;
  });
}

double error_l2_analytic(const QuadMesh& mesh, const Vector& u,
                         const std::function<double(double, double)>& ref) {
  return l2_pair(mesh, u, [&](int, double x, double y, const double[4]) { return ref(x, y); });
}

double error_linf(const Vector& u, const Vector& ref) {
  const double scale = ref.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) throw ParameterError("error_linf: zero reference");
  return (u - ref).lpNorm<Eigen::Infinity>() / scale;
}

Vector error_map(const Vector& u, const Vector& ref) {
  const double scale = ref.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) throw ParameterError("error_map: zero reference");
  return (u - ref).cwiseAbs() / scale;
}

void write_error_map_csv(const QuadMesh& mesh, const Vector& scaled, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  os.precision(17);
  os << "x,y,scaled_error\n";
  for (int i = 0; i < mesh.num_nodes(); ++i)
    os << mesh.nodes[i].x() << "," << mesh.nodes[i].y() << "," << scaled[i] << "\n";
}

Vector remap_field(const QuadMesh& from_mesh, const Vector& from_values, const QuadMesh& to_mesh) {
  CoordIndex index(from_mesh);
  Vector out(to_mesh.num_nodes());
  for (int i = 0; i < to_mesh.num_nodes(); ++i) {
    const int j = index.find(to_mesh.nodes[i].x(), to_mesh.nodes[i].y());
    if (j < 0) throw TopologyError("remap: node missing from the source mesh");
    out[i] = from_values[j];
  }
  return out;
}

}  // namespace ddrom
