// SPDX-License-Identifier: Apache-2.0

#include "ddrom/dd_online.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

namespace ddrom {

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

Vector eval_cluster(const SeparatedTensor& sliced, const Vector& lam, bool clamp) {
  std::vector<double> coords(static_cast<size_t>(lam.size()));
  for (int k = 0; k < lam.size(); ++k) {
    double v = lam[k];
    const GridDim& d = sliced.grid->dims[static_cast<size_t>(k)];
    if (!d.contains(v)) {
      if (!clamp)
        throw ParameterError(
            "clustered interface parameter fell outside its sampling box [" +
            std::to_string(d.lo) + ", " + std::to_string(d.hi) + "]; rerun with clamping enabled");
      v = std::clamp(v, d.lo, d.hi);
    }
    coords[static_cast<size_t>(k)] = v;
  }
  return evaluate(sliced, coords);
}

std::vector<InterfaceBlock> coupled_blocks(const Problem& problem, int& dim) {
  std::vector<InterfaceBlock> blocks;
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

// stacked interface vector of one instance: coupled entries pulled from the
// system unknowns, fixed entries at the given value (or zero)
Vector stacked_lambda(const Problem& problem, const std::vector<InterfaceBlock>& blocks,
                      int instance, const Vector& x, bool include_fixed) {
  const auto& topo = problem.domain_of(instance).topo;
  const auto& inst = problem.instances[static_cast<size_t>(instance)];
  Vector lam = Vector::Zero(topo.total_interface_dofs());
  int off = 0;
  for (size_t s = 0; s < topo.interfaces.size(); ++s) {
    const int sz = topo.interfaces[s].size();
    if (inst.links[s].fixed) {
      if (include_fixed) lam.segment(off, sz).setConstant(inst.links[s].fixed_value);
    } else if (x.size() > 0) {
      for (const auto& b : blocks)
        if (b.instance == instance && b.slot == static_cast<int>(s))
          lam.segment(off, sz) = x.segment(b.offset, b.size);
    }
    off += sz;
  }
  return lam;
}

}  // namespace

std::vector<EvaluatedSurrogate> pre_evaluate(const Problem& problem, const SurrogateLibrary& lib,
                                             const std::vector<double>& query) {
  if (lib.benchmark != problem.id)
    throw SchemaError("library built for benchmark '" + lib.benchmark +
                      "' does not match configured benchmark '" + problem.id + "'");
  if (lib.locals.size() != problem.domains.size())
    throw SchemaError("library domain count does not match the benchmark");
  problem.check_query(query);

  std::vector<EvaluatedSurrogate> evs;
  evs.reserve(problem.instances.size());
  for (size_t i = 0; i < problem.instances.size(); ++i) {
    const BuildDomain& dom = problem.domain_of(static_cast<int>(i));
    const LocalSurrogate& ls = lib.locals[static_cast<size_t>(problem.instances[i].domain)];
    const auto mu = problem.local_mu(static_cast<int>(i), query);
    const DofPartition& part = dom.topo.partition;

    EvaluatedSurrogate ev;
    ev.instance = static_cast<int>(i);
    ev.u0f_full = ls.data_part.rank() > 0 ? part.scatter(evaluate(ls.data_part, mu))
                                          : Vector::Zero(dom.topo.mesh.num_nodes());
    ev.lift_full = dom.lift.rank() > 0 ? evaluate(dom.lift, mu)
                                       : Vector::Zero(dom.topo.mesh.num_nodes());

    if (ls.strategy == "reduced_dim") {
      const int n_dofs = dom.topo.total_interface_dofs();
      if (static_cast<int>(ls.interface_parts.size()) != n_dofs)
        throw SchemaError("library interface part count does not match the topology");
      ev.columns_full.resize(dom.topo.mesh.num_nodes(), n_dofs);
      for (int j = 0; j < n_dofs; ++j) {
        const auto& t = ls.interface_parts[static_cast<size_t>(j)];
        ev.columns_full.col(j) =
            t.rank() > 0 ? part.scatter(evaluate(t, mu)) : Vector::Zero(dom.topo.mesh.num_nodes());
      }
    } else {
      ev.clusters = ls.clusters;
      ev.aip_interval = ls.aip_interval;
      for (const auto& t : ls.interface_parts) {
        // slice off the mu dimensions, keeping the interface parameter dims
        const int base = dom.grid->ndims();
        SeparatedTensor sliced;
        sliced.spatial_dim = dom.topo.mesh.num_nodes();
        auto grid = std::make_shared<ParametricGrid>();
        grid->dims.assign(t.grid->dims.begin() + base, t.grid->dims.end());
        sliced.grid = grid;
        for (const Mode& m : t.terms) {
          Mode sm;
          double w = 1.0;
          for (int k = 0; k < base; ++k)
            w *= interp_mode(t.grid->dims[static_cast<size_t>(k)], m.factors[static_cast<size_t>(k)],
                             mu[static_cast<size_t>(k)]);
          sm.spatial = part.scatter(Vector(w * m.spatial));
          sm.factors.assign(m.factors.begin() + base, m.factors.end());
          sliced.terms.push_back(std::move(sm));
        }
        ev.sliced.push_back(std::move(sliced));
      }
    }
    evs.push_back(std::move(ev));
  }
  return evs;
}

Vector apply_local_operator(const SubdomainTopology& topo, const EvaluatedSurrogate& ev,
                            const Vector& lambda, bool clamp_aip) {
  if (lambda.size() != topo.total_interface_dofs())
    throw ShapeError("apply_local_operator: interface coefficient count mismatch");
  Vector out = extend_all_interfaces(topo, lambda);
  if (ev.columns_full.size() > 0) {
    out += ev.columns_full * lambda;
  } else {
    for (size_t c = 0; c < ev.sliced.size(); ++c) {
      Vector lam(ev.clusters[c].size());
      for (size_t q = 0; q < ev.clusters[c].size(); ++q) lam[static_cast<int>(q)] = lambda[ev.clusters[c][q]];
      out += eval_cluster(ev.sliced[c], lam, clamp_aip);
    }
  }
  return out;
}

InterfaceSystem build_interface_system(const Problem& problem,
                                       const std::vector<EvaluatedSurrogate>& evs,
                                       bool clamp_aip) {
  for (size_t i = 0; i < problem.instances.size(); ++i)
    for (const auto& link : problem.instances[i].links)
      if (!link.fixed && (link.neighbor < 0 ||
                          link.neighbor >= static_cast<int>(problem.instances.size())))
        throw TopologyError("dangling interface in the coupling layout");

  InterfaceSystem sys;
  sys.clamp_aip = clamp_aip;
  sys.blocks = coupled_blocks(problem, sys.dim);
  const bool reduced = !evs.empty() && evs.front().columns_full.size() > 0;

  // constant part of the neighbor trace: data field, lift and fixed values
  std::vector<Vector> base_field(problem.instances.size());
  for (size_t j = 0; j < problem.instances.size(); ++j) {
    const auto& topo = problem.domain_of(static_cast<int>(j)).topo;
    const Vector lam_fixed = stacked_lambda(problem, sys.blocks, static_cast<int>(j), Vector(), true);
    base_field[j] = evs[j].u0f_full + evs[j].lift_full +
                    apply_local_operator(topo, evs[j], lam_fixed, clamp_aip);
  }

  sys.rhs = Vector::Zero(sys.dim);
  for (const auto& b : sys.blocks) {
    const auto& inst = problem.instances[static_cast<size_t>(b.instance)];
    const NeighborLink& link = inst.links[static_cast<size_t>(b.slot)];
    const auto& topo = problem.domain_of(b.instance).topo;
    const Vector trace =
        restrict_to_nodes(base_field[static_cast<size_t>(link.neighbor)], link.nodes_in_neighbor);
    Vector own(b.size);
    const auto& iface = topo.interfaces[static_cast<size_t>(b.slot)];
    for (int k = 0; k < b.size; ++k)
      own[k] = evs[static_cast<size_t>(b.instance)]
                   .lift_full[iface.dof_indices[static_cast<size_t>(k)]];
    sys.rhs.segment(b.offset, b.size) = trace - own;
  }

  if (reduced) {
    // the interface operator collapses to a dense matrix of gathered columns
    Matrix sigma = Matrix::Identity(sys.dim, sys.dim);
    for (const auto& rb : sys.blocks) {
      const auto& inst = problem.instances[static_cast<size_t>(rb.instance)];
      const NeighborLink& link = inst.links[static_cast<size_t>(rb.slot)];
      const int j = link.neighbor;
      const auto& topo_j = problem.domain_of(j).topo;
      const auto& ev_j = evs[static_cast<size_t>(j)];

      Matrix gathered(rb.size, topo_j.total_interface_dofs());
      for (int r = 0; r < rb.size; ++r)
        gathered.row(r) = ev_j.columns_full.row(link.nodes_in_neighbor[static_cast<size_t>(r)]);
      for (int q = 0; q < topo_j.total_interface_dofs(); ++q) {
        const int node = topo_j.interface_node(q);
        for (int r = 0; r < rb.size; ++r)
          if (link.nodes_in_neighbor[static_cast<size_t>(r)] == node) gathered(r, q) += 1.0;
      }
      for (const auto& cb : sys.blocks) {
        if (cb.instance != j) continue;
        int local_off = 0;
        for (int s = 0; s < cb.slot; ++s) local_off += topo_j.interfaces[static_cast<size_t>(s)].size();
        sigma.block(rb.offset, cb.offset, rb.size, cb.size) -=
            gathered.middleCols(local_off, cb.size);
      }
    }
    sys.op.rows = sys.op.cols = sys.dim;
    sys.op.apply = [sigma](const Vector& x) { return Vector(sigma * x); };
  } else {
    // clustered: each application evaluates the cluster tensors at the iterate
    const Problem* prob = &problem;
    const auto blocks = sys.blocks;
    const auto evs_copy = evs;  // slices are cheap views of the library modes
    sys.op.rows = sys.op.cols = sys.dim;
    sys.op.apply = [prob, blocks, evs_copy, clamp_aip](const Vector& x) {
      std::vector<Vector> fields(prob->instances.size());
      for (size_t j = 0; j < prob->instances.size(); ++j) {
        const auto& topo = prob->domain_of(static_cast<int>(j)).topo;
        const Vector lam = stacked_lambda(*prob, blocks, static_cast<int>(j), x, false);
        fields[j] = apply_local_operator(topo, evs_copy[j], lam, clamp_aip);
      }
      Vector out = x;
      for (const auto& b : blocks) {
        const auto& link = prob->instances[static_cast<size_t>(b.instance)].links[static_cast<size_t>(b.slot)];
        out.segment(b.offset, b.size) -=
            restrict_to_nodes(fields[static_cast<size_t>(link.neighbor)], link.nodes_in_neighbor);
      }
      return out;
    };
  }
  return sys;
}

CouplingSolution solve_online(const Problem& problem, const SurrogateLibrary& lib,
                              const std::vector<double>& query, double rel_tol, bool clamp_aip) {
  Timer timer;
  const auto evs = pre_evaluate(problem, lib, query);
  InterfaceSystem sys = build_interface_system(problem, evs, clamp_aip);

  CouplingSolution sol;
  sol.interface_dim = sys.dim;
  Vector x = Vector::Zero(sys.dim);
  if (sys.dim > 0) {
    GmresResult res = gmres(sys.op, sys.rhs, rel_tol, sys.dim);
    x = std::move(res.x);
    sol.iterations = res.iterations;
    sol.residual_history = std::move(res.residual_history);
  }

  sol.lambda.resize(problem.instances.size());
  sol.instance_fields.resize(problem.instances.size());
  for (size_t i = 0; i < problem.instances.size(); ++i) {
    const auto& topo = problem.domain_of(static_cast<int>(i)).topo;
    Vector lam = stacked_lambda(problem, sys.blocks, static_cast<int>(i), x, true);
    sol.instance_fields[i] = apply_local_operator(topo, evs[i], lam, clamp_aip) +
                             evs[i].u0f_full + evs[i].lift_full;
    sol.lambda[i] = std::move(lam);
  }
  sol.global = compose_global(problem, query, sol.instance_fields);
  sol.online_seconds = timer.seconds();
  return sol;
}

void write_solution_csv(const CouplingSolution& sol, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  os.precision(17);
  os << "node,x,y,value,subdomain\n";
  for (int i = 0; i < sol.global.mesh.num_nodes(); ++i)
    os << i << "," << sol.global.mesh.nodes[i].x() << "," << sol.global.mesh.nodes[i].y() << ","
       << sol.global.values[i] << "," << sol.global.owner[static_cast<size_t>(i)] << "\n";
}

}  // namespace ddrom
