// SPDX-License-Identifier: Apache-2.0

#include "ddrom/problems.hpp"

#include <cmath>

namespace ddrom {

namespace {

constexpr double kGeomEps = 1e-9;

bool near(double a, double b) { return std::abs(a - b) <= kGeomEps; }

Vector ones(int n) { return Vector::Ones(n); }

std::vector<Vector> ones_factors(const GridPtr& grid) {
  std::vector<Vector> f;
  for (const auto& d : grid->dims) f.push_back(ones(d.n));
  return f;
}

// Wall-graded channel heights: geometric growth from both walls, meeting at
// the mid-plane. The ratio is solved so the half-channel fills exactly.
std::vector<double> graded_channel_y(int rows, double first) {
  if (rows < 2 || rows % 2 != 0) throw ConfigError("channel rows must be even and >= 2");
  const int nh = rows / 2;
  auto filled = [&](double r) {
    if (std::abs(r - 1.0) < 1e-13) return first * nh;
    return first * (std::pow(r, nh) - 1.0) / (r - 1.0);
  };
  double lo = 1e-3, hi = 1e3;
  if (filled(lo) > 0.5 || filled(hi) < 0.5)
    throw ConfigError("channel grading: first cell height out of range");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (filled(mid) < 0.5 ? lo : hi) = mid;
  }
  const double r = 0.5 * (lo + hi);

  std::vector<double> y(static_cast<size_t>(rows) + 1);
  y[0] = 0.0;
  double hstep = first;
  for (int i = 1; i <= nh; ++i) {
    y[static_cast<size_t>(i)] = y[static_cast<size_t>(i - 1)] + hstep;
    hstep *= r;
  }
  y[static_cast<size_t>(nh)] = 0.5;
  for (int i = 0; i < nh; ++i) y[static_cast<size_t>(rows - i)] = 1.0 - y[static_cast<size_t>(i)];
  return y;
}

AssembledBlocks sum_blocks(std::vector<AssembledBlocks> parts) {
  AssembledBlocks total = std::move(parts.front());
  for (size_t i = 1; i < parts.size(); ++i) {
    total.ff += parts[i].ff;
    total.fc += parts[i].fc;
  }
  total.ff.makeCompressed();
  total.fc.makeCompressed();
  return total;
}

}  // namespace

std::vector<double> Problem::local_mu(int instance, const std::vector<double>& query) const {
  const Instance& inst = instances[static_cast<size_t>(instance)];
  std::vector<double> mu;
  mu.reserve(inst.mu_slots.size());
  for (int slot : inst.mu_slots) mu.push_back(query[static_cast<size_t>(slot)]);
  return mu;
}

QuadMesh Problem::instance_mesh(int instance, const std::vector<double>& query) const {
  const Instance& inst = instances[static_cast<size_t>(instance)];
  return apply_geometry_map(inst.map, domains[static_cast<size_t>(inst.domain)].topo.mesh,
                            local_mu(instance, query));
}

void Problem::check_query(const std::vector<double>& query) const {
  if (static_cast<int>(query.size()) != n_query)
    throw ParameterError("query expects " + std::to_string(n_query) + " parameter values, got " +
                         std::to_string(query.size()));
  for (size_t i = 0; i < instances.size(); ++i) {
    const auto mu = local_mu(static_cast<int>(i), query);
    const auto& grid = domains[static_cast<size_t>(instances[i].domain)].grid;
    for (int k = 0; k < grid->ndims(); ++k)
      if (!grid->dims[k].contains(mu[static_cast<size_t>(k)]))
        throw ParameterError("parameter '" + grid->dims[k].name + "' outside its interval");
  }
}

std::vector<int> match_nodes_across(const QuadMesh& from_mesh, const GeometryMap& from_map,
                                    const std::vector<int>& nodes, const QuadMesh& to_mesh,
                                    const GeometryMap& to_map, const std::vector<double>& mu) {
  QuadMesh to_phys = apply_geometry_map(to_map, to_mesh, mu);
  CoordIndex index(to_phys);
  std::vector<int> out;
  out.reserve(nodes.size());
  for (int n : nodes) {
    const Eigen::Vector2d p = from_map.apply_point(from_mesh.nodes[n], mu);
    const int hit = index.find(p.x(), p.y());
    if (hit < 0) throw TopologyError("interface node has no counterpart in the neighbor mesh");
    out.push_back(hit);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-domain parametric Poisson: nu(mu) = 1 + mu x on (0,2)x(0,1), overlap of
// width 2h around x = 1, manufactured force with exact solution.
// ---------------------------------------------------------------------------

namespace {

double poisson_exact(double x, double y, double mu) {
  return std::sin(2 * M_PI * x) * std::sin(2 * M_PI * y) + 0.5 * mu * x * y * (y - 1) * (x - 2);
}

double poisson_f0(double x, double y) {
  return 8 * M_PI * M_PI * std::sin(2 * M_PI * x) * std::sin(2 * M_PI * y);
}

double poisson_f1(double x, double y) {
  return 2 * M_PI * (4 * M_PI * x * std::sin(2 * M_PI * x) - std::cos(2 * M_PI * x)) *
             std::sin(2 * M_PI * y) -
         x * (x - 2) - y * (y - 1);
}

double poisson_f2(double x, double y) { return y * (y - 1) * (1 - 2 * x) - x * x * (x - 2); }

BuildDomain poisson_domain(const std::string& name, const std::vector<double>& xs,
                           const std::vector<double>& ys, double iface_x,
                           const std::string& iface_name, const GridPtr& grid) {
  TagRule rule = [iface_x, iface_name](double x, double y) -> std::optional<BoundaryTag> {
    if (near(x, iface_x) && !near(y, 0.0) && !near(y, 1.0))
      return BoundaryTag{TagKind::Interface, iface_name};
    return BoundaryTag{TagKind::DirichletExternal, ""};
  };
  QuadMesh mesh = build_rect_mesh(xs, ys, rule);
  InterfaceDofSet iface =
      extract_interface(mesh, {{iface_x, 0.0}, {iface_x, 1.0}}, EndpointRule::Auto, iface_name);

  BuildDomain d;
  d.name = name;
  d.topo = SubdomainTopology::build(0, std::move(mesh), {std::move(iface)});
  d.grid = grid;

  Vector xcoord(d.topo.mesh.num_nodes());
  for (int i = 0; i < d.topo.mesh.num_nodes(); ++i) xcoord[i] = d.topo.mesh.nodes[i].x();

  const GridDim& mu = grid->dims[0];
  auto b0 = assemble_diffusion(d.topo.mesh, CoefficientField::constant(1.0), d.topo.partition);
  auto b1 =
      assemble_diffusion(d.topo.mesh, CoefficientField::nodal_field(xcoord), d.topo.partition);
  d.op.grid = grid;
  d.op.n_free = d.topo.partition.n_free();
  d.op.n_constrained = d.topo.partition.n_constrained();
  d.op.terms.push_back({b0.ff, b0.fc, {ones(mu.n)}, "diffusion_const"});
  d.op.terms.push_back({b1.ff, b1.fc, {mu.points()}, "diffusion_x"});

  d.load.grid = grid;
  d.load.terms.push_back(
      {assemble_load(d.topo.mesh, CoefficientField::analytic(poisson_f0), d.topo.partition),
       {ones(mu.n)}});
  d.load.terms.push_back(
      {assemble_load(d.topo.mesh, CoefficientField::analytic(poisson_f1), d.topo.partition),
       {mu.points()}});
  d.load.terms.push_back(
      {assemble_load(d.topo.mesh, CoefficientField::analytic(poisson_f2), d.topo.partition),
       {ParametricGrid::tabulate(mu, [](double m) { return m * m; })}});

  d.lift = SeparatedTensor::zero(d.topo.mesh.num_nodes(), grid);

  const QuadMesh mesh_copy = d.topo.mesh;
  const DofPartition part_copy = d.topo.partition;
  d.direct_assemble = [mesh_copy, part_copy, xcoord](const std::vector<double>& mu_local) {
    Vector nu = Vector::Ones(xcoord.size()) + mu_local[0] * xcoord;
    return assemble_diffusion(mesh_copy, CoefficientField::nodal_field(std::move(nu)), part_copy);
  };
  return d;
}

MonolithicProblem poisson_monolithic(const std::vector<double>& xs, const std::vector<double>& ys,
                                     const std::vector<double>& mu) {
  TagRule all_dirichlet = [](double, double) -> std::optional<BoundaryTag> {
    return BoundaryTag{TagKind::DirichletExternal, ""};
  };
  MonolithicProblem m;
  m.mesh = build_rect_mesh(xs, ys, all_dirichlet);
  m.dofs = DofPartition::build(m.mesh, {});
  Vector nu(m.mesh.num_nodes());
  for (int i = 0; i < m.mesh.num_nodes(); ++i) nu[i] = 1.0 + mu[0] * m.mesh.nodes[i].x();
  auto blocks = assemble_diffusion(m.mesh, CoefficientField::nodal_field(std::move(nu)), m.dofs);
  m.ff = std::move(blocks.ff);
  m.fc = std::move(blocks.fc);
  const double mv = mu[0];
  m.load_free = assemble_load(
      m.mesh,
      CoefficientField::analytic([mv](double x, double y) {
        return poisson_f0(x, y) + mv * poisson_f1(x, y) + mv * mv * poisson_f2(x, y);
      }),
      m.dofs);
  m.lift = Vector::Zero(m.mesh.num_nodes());
  return m;
}

}  // namespace

Problem make_poisson_2d(const ProblemOptions& opts) {
  const double h = opts.poisson_h;
  auto grid = std::make_shared<ParametricGrid>();
  grid->dims = {opts.poisson_mu};

  Problem p;
  p.id = "poisson_2d";
  p.n_query = 1;
  p.default_query = {3.0};

  const auto xs1 = uniform_spacing(0.0, 1.0 + h, h);
  const auto xs2 = uniform_spacing(1.0 - h, 2.0, h);
  const auto ys = uniform_spacing(0.0, 1.0, h);
  p.domains.push_back(poisson_domain("omega1", xs1, ys, 1.0 + h, "gamma1", grid));
  p.domains.push_back(poisson_domain("omega2", xs2, ys, 1.0 - h, "gamma2", grid));

  p.instances.resize(2);
  for (int i = 0; i < 2; ++i) {
    p.instances[static_cast<size_t>(i)].domain = i;
    p.instances[static_cast<size_t>(i)].map = GeometryMap::identity();
    p.instances[static_cast<size_t>(i)].mu_slots = {0};
  }
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    NeighborLink link;
    link.neighbor = j;
    link.nodes_in_neighbor = match_nodes_across(
        p.domains[static_cast<size_t>(i)].topo.mesh, GeometryMap::identity(),
        p.domains[static_cast<size_t>(i)].topo.interfaces[0].dof_indices,
        p.domains[static_cast<size_t>(j)].topo.mesh, GeometryMap::identity(), p.default_query);
    p.instances[static_cast<size_t>(i)].links = {std::move(link)};
  }

  const auto xs_global = uniform_spacing(0.0, 2.0, h);
  p.monolithic = [xs_global, ys](const std::vector<double>& mu) {
    return poisson_monolithic(xs_global, ys, mu);
  };
  p.exact = [](double x, double y, const std::vector<double>& mu) {
    return poisson_exact(x, y, mu[0]);
  };
  return p;
}

Problem make_poisson_single_domain(const ProblemOptions& opts) {
  const double h = opts.poisson_h;
  auto grid = std::make_shared<ParametricGrid>();
  grid->dims = {opts.poisson_mu};

  Problem p;
  p.id = "poisson_single";
  p.n_query = 1;
  p.default_query = {3.0};

  const auto xs = uniform_spacing(0.0, 2.0, h);
  const auto ys = uniform_spacing(0.0, 1.0, h);

  TagRule all_dirichlet = [](double, double) -> std::optional<BoundaryTag> {
    return BoundaryTag{TagKind::DirichletExternal, ""};
  };
  QuadMesh mesh = build_rect_mesh(xs, ys, all_dirichlet);

  BuildDomain d;
  d.name = "omega";
  d.topo = SubdomainTopology::build(0, std::move(mesh), {});
  d.grid = grid;
  Vector xcoord(d.topo.mesh.num_nodes());
  for (int i = 0; i < d.topo.mesh.num_nodes(); ++i) xcoord[i] = d.topo.mesh.nodes[i].x();
  const GridDim& mu = grid->dims[0];
  auto b0 = assemble_diffusion(d.topo.mesh, CoefficientField::constant(1.0), d.topo.partition);
  auto b1 = assemble_diffusion(d.topo.mesh, CoefficientField::nodal_field(xcoord), d.topo.partition);
  d.op.grid = grid;
  d.op.n_free = d.topo.partition.n_free();
  d.op.n_constrained = d.topo.partition.n_constrained();
  d.op.terms.push_back({b0.ff, b0.fc, {ones(mu.n)}, "diffusion_const"});
  d.op.terms.push_back({b1.ff, b1.fc, {mu.points()}, "diffusion_x"});
  d.load.grid = grid;
  d.load.terms.push_back(
      {assemble_load(d.topo.mesh, CoefficientField::analytic(poisson_f0), d.topo.partition),
       {ones(mu.n)}});
  d.load.terms.push_back(
      {assemble_load(d.topo.mesh, CoefficientField::analytic(poisson_f1), d.topo.partition),
       {mu.points()}});
  d.load.terms.push_back(
      {assemble_load(d.topo.mesh, CoefficientField::analytic(poisson_f2), d.topo.partition),
       {ParametricGrid::tabulate(mu, [](double m) { return m * m; })}});
  d.lift = SeparatedTensor::zero(d.topo.mesh.num_nodes(), grid);
  const QuadMesh mesh_copy = d.topo.mesh;
  const DofPartition part_copy = d.topo.partition;
  d.direct_assemble = [mesh_copy, part_copy, xcoord](const std::vector<double>& mu_local) {
    Vector nu = Vector::Ones(xcoord.size()) + mu_local[0] * xcoord;
    return assemble_diffusion(mesh_copy, CoefficientField::nodal_field(std::move(nu)), part_copy);
  };
  p.domains.push_back(std::move(d));

  Instance inst;
  inst.domain = 0;
  inst.map = GeometryMap::identity();
  inst.mu_slots = {0};
  p.instances.push_back(std::move(inst));

  p.monolithic = [xs, ys](const std::vector<double>& mu) { return poisson_monolithic(xs, ys, mu); };
  p.exact = [](double x, double y, const std::vector<double>& mu) {
    return poisson_exact(x, y, mu[0]);
  };
  return p;
}

// ---------------------------------------------------------------------------
// Poiseuille-Graetz convection-diffusion in a channel whose heated section has
// parametric length: fixed inlet subdomain plus a reference channel mapped by
// the piecewise stretch with break at x_hat = hbar.
// ---------------------------------------------------------------------------

namespace {

Eigen::Vector2d graetz_velocity(double, double y) { return {4.0 * y * (1.0 - y), 0.0}; }

double graetz_wall_value(double x, double) { return x >= 1.0 - kGeomEps ? 1.0 : 0.0; }

}  // namespace

Problem make_graetz(const ProblemOptions& opts) {
  const double hb = opts.graetz_hbar;
  auto grid1 = std::make_shared<ParametricGrid>();
  grid1->dims = {opts.graetz_mu1};
  auto grid2 = std::make_shared<ParametricGrid>();
  grid2->dims = {opts.graetz_mu1, opts.graetz_mu2};

  const std::vector<double> ys = graded_channel_y(opts.graetz_y_rows, opts.graetz_y_first);

  // inlet subdomain (0, 1+hbar) x (0,1), physical coordinates
  std::vector<double> xs1 = uniform_spacing(0.0, 1.0, 1.0 / opts.graetz_inlet_cols);
  {
    auto overlap = uniform_spacing(1.0, 1.0 + hb, hb / opts.graetz_overlap_cols);
    xs1.insert(xs1.end(), overlap.begin() + 1, overlap.end());
  }
  // reference channel (0,1) x (0,1) with the unstretched strip [0, hbar]
  std::vector<double> xs2 = uniform_spacing(0.0, hb, hb / opts.graetz_overlap_cols);
  {
    auto rest = uniform_spacing(hb, 1.0, (1.0 - hb) / opts.graetz_channel_cols);
    xs2.insert(xs2.end(), rest.begin() + 1, rest.end());
  }

  Problem p;
  p.id = "graetz";
  p.n_query = 2;
  p.default_query = {1.25e4, 3.0};

  // --- inlet subdomain ---
  {
    TagRule rule = [hb](double x, double y) -> std::optional<BoundaryTag> {
      if (near(y, 0.0) || near(y, 1.0) || near(x, 0.0))
        return BoundaryTag{TagKind::DirichletExternal, ""};
      if (near(x, 1.0 + hb)) return BoundaryTag{TagKind::Interface, "gamma1"};
      return BoundaryTag{TagKind::NeumannHomogeneous, ""};
    };
    QuadMesh mesh = build_rect_mesh(xs1, ys, rule);
    InterfaceDofSet iface =
        extract_interface(mesh, {{1.0 + hb, 0.0}, {1.0 + hb, 1.0}}, EndpointRule::Auto, "gamma1");

    BuildDomain d;
    d.name = "omega1";
    d.topo = SubdomainTopology::build(0, std::move(mesh), {std::move(iface)});
    d.grid = grid1;
    const GridDim& mu1 = grid1->dims[0];

    auto diff = assemble_diffusion(d.topo.mesh, CoefficientField::constant(1.0), d.topo.partition);
    auto conv = assemble_convection_supg(d.topo.mesh, graetz_velocity, SupgRule::upwind_limit(),
                                         d.topo.partition);
    d.op.grid = grid1;
    d.op.n_free = d.topo.partition.n_free();
    d.op.n_constrained = d.topo.partition.n_constrained();
    d.op.terms.push_back(
        {diff.ff, diff.fc, {ParametricGrid::tabulate(mu1, [](double m) { return 1.0 / m; })},
         "diffusion"});
    d.op.terms.push_back({conv[0].ff, conv[0].fc, {ones(mu1.n)}, "convection"});
    d.op.terms.push_back({conv[1].ff, conv[1].fc, {ones(mu1.n)}, "supg"});

    d.load.grid = grid1;  // no volume force

    Mode lift_mode;
    lift_mode.spatial = build_dirichlet_lift(d.topo.mesh, graetz_wall_value);
    lift_mode.factors = ones_factors(grid1);
    d.lift = SeparatedTensor::zero(d.topo.mesh.num_nodes(), grid1);
    d.lift.terms.push_back(std::move(lift_mode));

    const QuadMesh mesh_copy = d.topo.mesh;
    const DofPartition part_copy = d.topo.partition;
    d.direct_assemble = [mesh_copy, part_copy](const std::vector<double>& mu_local) {
      auto blocks = assemble_convection_supg(mesh_copy, graetz_velocity, SupgRule::upwind_limit(),
                                             part_copy);
      blocks.push_back(assemble_diffusion(mesh_copy, CoefficientField::constant(1.0 / mu_local[0]),
                                          part_copy));
      return sum_blocks(std::move(blocks));
    };
    p.domains.push_back(std::move(d));
  }

  // --- reference channel subdomain ---
  {
    TagRule rule = [](double x, double y) -> std::optional<BoundaryTag> {
      if (near(y, 0.0) || near(y, 1.0)) return BoundaryTag{TagKind::DirichletExternal, ""};
      if (near(x, 0.0)) return BoundaryTag{TagKind::Interface, "gamma2"};
      return BoundaryTag{TagKind::NeumannHomogeneous, ""};
    };
    QuadMesh mesh = build_rect_mesh(xs2, ys, rule);
    InterfaceDofSet iface =
        extract_interface(mesh, {{0.0, 0.0}, {0.0, 1.0}}, EndpointRule::Auto, "gamma2");

    BuildDomain d;
    d.name = "omega2_ref";
    d.topo = SubdomainTopology::build(1, std::move(mesh), {std::move(iface)});
    d.grid = grid2;
    const GridDim& mu1 = grid2->dims[0];
    const GridDim& mu2 = grid2->dims[1];

    // strip regions: 0 for x_hat <= hbar (unstretched), 1 beyond
    std::vector<int> region(static_cast<size_t>(d.topo.mesh.num_elements()));
    for (int e = 0; e < d.topo.mesh.num_elements(); ++e) {
      double cx = 0;
      for (int k = 0; k < 4; ++k) cx += 0.25 * d.topo.mesh.nodes[d.topo.mesh.elements[e][k]].x();
      region[static_cast<size_t>(e)] = cx < hb ? 0 : 1;
    }
    auto strip1 = CoefficientField::region_field(region, {{0, 1.0}, {1, 0.0}});
    auto strip2 = CoefficientField::region_field(region, {{0, 0.0}, {1, 1.0}});

    auto k_s1 = assemble_diffusion(d.topo.mesh, strip1, d.topo.partition);
    auto k_x = assemble_diffusion_axis(d.topo.mesh, strip2, 0, d.topo.partition);
    auto k_y = assemble_diffusion_axis(d.topo.mesh, strip2, 1, d.topo.partition);
    auto conv = assemble_convection_supg(d.topo.mesh, graetz_velocity, SupgRule::upwind_limit(),
                                         d.topo.partition);

    const Vector inv_mu1 = ParametricGrid::tabulate(mu1, [](double m) { return 1.0 / m; });
    const auto jac = [hb](double m2) { return (m2 - hb) / (1.0 - hb); };
    d.op.grid = grid2;
    d.op.n_free = d.topo.partition.n_free();
    d.op.n_constrained = d.topo.partition.n_constrained();
    d.op.terms.push_back({k_s1.ff, k_s1.fc, {inv_mu1, ones(mu2.n)}, "diffusion_overlap"});
    d.op.terms.push_back(
        {k_x.ff, k_x.fc,
         {inv_mu1, ParametricGrid::tabulate(mu2, [jac](double m) { return 1.0 / jac(m); })},
         "diffusion_x"});
    d.op.terms.push_back(
        {k_y.ff, k_y.fc, {inv_mu1, ParametricGrid::tabulate(mu2, jac)}, "diffusion_y"});
    d.op.terms.push_back({conv[0].ff, conv[0].fc, {ones(mu1.n), ones(mu2.n)}, "convection"});
    d.op.terms.push_back({conv[1].ff, conv[1].fc, {ones(mu1.n), ones(mu2.n)}, "supg"});

    d.load.grid = grid2;

    Mode lift_mode;
    lift_mode.spatial = build_dirichlet_lift(d.topo.mesh, [](double, double) { return 1.0; });
    lift_mode.factors = ones_factors(grid2);
    d.lift = SeparatedTensor::zero(d.topo.mesh.num_nodes(), grid2);
    d.lift.terms.push_back(std::move(lift_mode));

    const QuadMesh mesh_copy = d.topo.mesh;
    const DofPartition part_copy = d.topo.partition;
    const GeometryMap gmap = GeometryMap::graetz(hb, 1);
    d.direct_assemble = [mesh_copy, part_copy, gmap](const std::vector<double>& mu_local) {
      QuadMesh phys = apply_geometry_map(gmap, mesh_copy, mu_local);
      auto blocks =
          assemble_convection_supg(phys, graetz_velocity, SupgRule::upwind_limit(), part_copy);
      blocks.push_back(
          assemble_diffusion(phys, CoefficientField::constant(1.0 / mu_local[0]), part_copy));
      return sum_blocks(std::move(blocks));
    };
    p.domains.push_back(std::move(d));
  }

  p.instances.resize(2);
  p.instances[0].domain = 0;
  p.instances[0].map = GeometryMap::identity();
  p.instances[0].mu_slots = {0};
  p.instances[1].domain = 1;
  p.instances[1].map = GeometryMap::graetz(hb, 1);
  p.instances[1].mu_slots = {0, 1};

  {
    NeighborLink l1;  // gamma1 at x = 1+hbar lives in the unstretched strip of omega2
    l1.neighbor = 1;
    l1.nodes_in_neighbor = match_nodes_across(
        p.domains[0].topo.mesh, GeometryMap::identity(), p.domains[0].topo.interfaces[0].dof_indices,
        p.domains[1].topo.mesh, p.instances[1].map, p.default_query);
    p.instances[0].links = {std::move(l1)};

    NeighborLink l2;  // gamma2 at x = 1 is a fixed physical position for every mu2
    l2.neighbor = 0;
    l2.nodes_in_neighbor = match_nodes_across(
        p.domains[1].topo.mesh, p.instances[1].map, p.domains[1].topo.interfaces[0].dof_indices,
        p.domains[0].topo.mesh, GeometryMap::identity(), p.default_query);
    p.instances[1].links = {std::move(l2)};
  }

  const GeometryMap gmap = GeometryMap::graetz(hb, 1);
  const QuadMesh mesh1 = p.domains[0].topo.mesh;
  const QuadMesh mesh2 = p.domains[1].topo.mesh;
  p.monolithic = [gmap, mesh1, mesh2](const std::vector<double>& mu) {
    QuadMesh phys2 = apply_geometry_map(gmap, mesh2, mu);
    TagRule rule = [](double x, double y) -> std::optional<BoundaryTag> {
      if (near(y, 0.0) || near(y, 1.0) || near(x, 0.0))
        return BoundaryTag{TagKind::DirichletExternal, ""};
      return BoundaryTag{TagKind::NeumannHomogeneous, ""};
    };
    MonolithicProblem m;
    m.mesh = merge_meshes({&mesh1, &phys2}, rule);
    m.mesh.validate();
    m.dofs = DofPartition::build(m.mesh, {});
    auto blocks = assemble_convection_supg(m.mesh, graetz_velocity, SupgRule::upwind_limit(), m.dofs);
    blocks.push_back(assemble_diffusion(m.mesh, CoefficientField::constant(1.0 / mu[0]), m.dofs));
    auto total = sum_blocks(std::move(blocks));
    m.ff = std::move(total.ff);
    m.fc = std::move(total.fc);
    m.load_free = Vector::Zero(m.dofs.n_free());
    m.lift = build_dirichlet_lift(m.mesh, graetz_wall_value);
    return m;
  };
  return p;
}

// ---------------------------------------------------------------------------
// Multi-domain thermal problem: 3x3 grid of cross-shaped subdomains with
// parametrized conductivity in each central block, built from four reference
// subdomains placed by rigid motions.
// ---------------------------------------------------------------------------

namespace {

struct CrossSide {
  const char* name;
  Eigen::Vector2d dir;
  Segment segment;
};

std::vector<CrossSide> cross_sides(double d) {
  return {
      {"L", {-1, 0}, {{-d, 0.0}, {-d, 1.0}}},
      {"B", {0, -1}, {{0.0, -d}, {1.0, -d}}},
      {"R", {1, 0}, {{1.0 + d, 0.0}, {1.0 + d, 1.0}}},
      {"T", {0, 1}, {{0.0, 1.0 + d}, {1.0, 1.0 + d}}},
  };
}

bool on_segment(const Segment& s, double x, double y) {
  if (near(s.a.x(), s.b.x()))
    return near(x, s.a.x()) && y >= s.a.y() - kGeomEps && y <= s.b.y() + kGeomEps;
  return near(y, s.a.y()) && x >= s.a.x() - kGeomEps && x <= s.b.x() + kGeomEps;
}

BuildDomain cross_domain(const std::string& name, const CrossSpec& spec,
                         const std::vector<int>& iface_sides, bool inflow_top,
                         const GridPtr& grid) {
  const auto sides = cross_sides(spec.wing_depth);
  TagRule rule = [sides, iface_sides, inflow_top](double x, double y) -> std::optional<BoundaryTag> {
    for (int s : iface_sides)
      if (on_segment(sides[static_cast<size_t>(s)].segment, x, y))
        return BoundaryTag{TagKind::Interface, sides[static_cast<size_t>(s)].name};
    if (inflow_top && on_segment(sides[3].segment, x, y))
      return BoundaryTag{TagKind::NeumannInflow, ""};
    return BoundaryTag{TagKind::NeumannHomogeneous, ""};
  };
  QuadMesh mesh = build_cross_mesh(spec, rule);

  std::vector<InterfaceDofSet> ifaces;
  for (int s : iface_sides)
    ifaces.push_back(extract_interface(mesh, sides[static_cast<size_t>(s)].segment,
                                       EndpointRule::Auto, sides[static_cast<size_t>(s)].name));

  BuildDomain d;
  d.name = name;
  d.topo = SubdomainTopology::build(0, std::move(mesh), std::move(ifaces));
  d.grid = grid;

  std::vector<int> region(static_cast<size_t>(d.topo.mesh.num_elements()));
  for (int e = 0; e < d.topo.mesh.num_elements(); ++e) {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (int k = 0; k < 4; ++k) c += 0.25 * d.topo.mesh.nodes[d.topo.mesh.elements[e][k]];
    const bool center = c.x() > 0 && c.x() < 1 && c.y() > 0 && c.y() < 1;
    region[static_cast<size_t>(e)] = center ? 1 : 0;
  }
  auto center_field = CoefficientField::region_field(region, {{1, 1.0}, {0, 0.0}});
  auto wing_field = CoefficientField::region_field(region, {{1, 0.0}, {0, 1.0}});

  const GridDim& mu = grid->dims[0];
  auto kc = assemble_diffusion(d.topo.mesh, center_field, d.topo.partition);
  auto kw = assemble_diffusion(d.topo.mesh, wing_field, d.topo.partition);
  d.op.grid = grid;
  d.op.n_free = d.topo.partition.n_free();
  d.op.n_constrained = d.topo.partition.n_constrained();
  d.op.terms.push_back({kc.ff, kc.fc, {mu.points()}, "diffusion_center"});
  d.op.terms.push_back({kw.ff, kw.fc, {ones(mu.n)}, "diffusion_wings"});

  d.load.grid = grid;
  if (inflow_top) {
    d.load.terms.push_back({assemble_load(d.topo.mesh, CoefficientField::constant(0.0),
                                          d.topo.partition, {{TagKind::NeumannInflow, 1.0}}),
                            {ones(mu.n)}});
  }
  d.lift = SeparatedTensor::zero(d.topo.mesh.num_nodes(), grid);

  const QuadMesh mesh_copy = d.topo.mesh;
  const DofPartition part_copy = d.topo.partition;
  const std::vector<int> region_copy = region;
  d.direct_assemble = [mesh_copy, part_copy, region_copy](const std::vector<double>& mu_local) {
    auto nu = CoefficientField::region_field(region_copy, {{1, mu_local[0]}, {0, 1.0}});
    return assemble_diffusion(mesh_copy, nu, part_copy);
  };
  return d;
}

}  // namespace

Problem make_thermal_cross(const ProblemOptions& opts) {
  auto grid = std::make_shared<ParametricGrid>();
  grid->dims = {opts.cross_mu};
  const double d = opts.cross.wing_depth;

  Problem p;
  p.id = "thermal_cross";
  p.n_query = 9;
  p.default_query = {0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4, 0.1, 0.2};

  // reference subdomains: interface sides L/B, L/B/R, L/B/R/T, B/R (+ inflow top)
  p.domains.push_back(cross_domain("ref1", opts.cross, {0, 1}, false, grid));
  p.domains.push_back(cross_domain("ref2", opts.cross, {0, 1, 2}, false, grid));
  p.domains.push_back(cross_domain("ref3", opts.cross, {0, 1, 2, 3}, false, grid));
  p.domains.push_back(cross_domain("ref4", opts.cross, {1, 2}, true, grid));

  const int ref_of[9] = {0, 1, 1, 1, 2, 1, 3, 1, 0};
  const int turns_of[9] = {2, 2, 3, 1, 0, 3, 0, 0, 0};
  const int cell_of[9][2] = {{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}, {0, 2}, {1, 2}, {2, 2}};

  for (int i = 0; i < 9; ++i) {
    Instance inst;
    inst.domain = ref_of[i];
    inst.map = GeometryMap::rigid(turns_of[i] * M_PI / 2.0, {0.5, 0.5},
                                  {1.5 * cell_of[i][0], 1.5 * cell_of[i][1]});
    inst.mu_slots = {i};
    p.instances.push_back(std::move(inst));
  }

  const auto sides = cross_sides(d);
  auto cell_index = [&](int cx, int cy) -> int {
    if (cx < 0 || cx > 2 || cy < 0 || cy > 2) return -1;
    for (int i = 0; i < 9; ++i)
      if (cell_of[i][0] == cx && cell_of[i][1] == cy) return i;
    return -1;
  };

  for (int i = 0; i < 9; ++i) {
    Instance& inst = p.instances[static_cast<size_t>(i)];
    const BuildDomain& dom = p.domains[static_cast<size_t>(inst.domain)];
    for (size_t k = 0; k < dom.topo.interfaces.size(); ++k) {
      // physical direction of this interface slot after the rigid motion
      Eigen::Vector2d dir = Eigen::Vector2d::Zero();
      for (const auto& side : sides)
        if (dom.topo.interfaces[k].name == side.name) dir = side.dir;
      if (dir.isZero()) throw TopologyError("interface slot with unknown compass direction");
      Eigen::Vector2d rotated = dir;
      for (int t = 0; t < turns_of[i]; ++t) rotated = Eigen::Vector2d(-rotated.y(), rotated.x());
      const int j = cell_index(cell_of[i][0] + static_cast<int>(std::lround(rotated.x())),
                               cell_of[i][1] + static_cast<int>(std::lround(rotated.y())));
      NeighborLink link;
      if (j >= 0) {
        link.neighbor = j;
        link.nodes_in_neighbor = match_nodes_across(
            dom.topo.mesh, inst.map, dom.topo.interfaces[k].dof_indices,
            p.domains[static_cast<size_t>(p.instances[static_cast<size_t>(j)].domain)].topo.mesh,
            p.instances[static_cast<size_t>(j)].map, p.default_query);
      } else {
        // the only dangling tip is the outflow edge, fixed to zero a priori
        if (i != 2) throw TopologyError("unexpected dangling interface in cross layout");
        link.fixed = true;
        link.fixed_value = 0.0;
      }
      inst.links.push_back(std::move(link));
    }
  }

  std::vector<QuadMesh> phys;
  phys.reserve(9);
  for (int i = 0; i < 9; ++i)
    phys.push_back(apply_geometry_map(p.instances[static_cast<size_t>(i)].map,
                                      p.domains[static_cast<size_t>(ref_of[i])].topo.mesh,
                                      p.default_query));
  const double out_y = -d;         // bottom tip of the bottom-right subdomain
  const double in_y = 3.0 + 1.0 + d;  // top tip of the top-left subdomain
  p.monolithic = [phys, out_y, in_y](const std::vector<double>& mu) {
    TagRule rule = [out_y, in_y](double x, double y) -> std::optional<BoundaryTag> {
      if (near(y, out_y) && x >= 3.0 - kGeomEps && x <= 4.0 + kGeomEps)
        return BoundaryTag{TagKind::DirichletExternal, ""};
      if (near(y, in_y) && x >= -kGeomEps && x <= 1.0 + kGeomEps)
        return BoundaryTag{TagKind::NeumannInflow, ""};
      return BoundaryTag{TagKind::NeumannHomogeneous, ""};
    };
    std::vector<const QuadMesh*> parts;
    for (const auto& m : phys) parts.push_back(&m);
    MonolithicProblem m;
    m.mesh = merge_meshes(parts, rule);
    m.mesh.validate();
    m.dofs = DofPartition::build(m.mesh, {});

    std::vector<int> region(static_cast<size_t>(m.mesh.num_elements()), -1);
    for (int e = 0; e < m.mesh.num_elements(); ++e) {
      Eigen::Vector2d c = Eigen::Vector2d::Zero();
      for (int k = 0; k < 4; ++k) c += 0.25 * m.mesh.nodes[m.mesh.elements[e][k]];
      for (int i = 0; i < 9; ++i) {
        const double x0 = 1.5 * (i % 3), y0 = 1.5 * (i / 3);
        if (c.x() > x0 && c.x() < x0 + 1 && c.y() > y0 && c.y() < y0 + 1) {
          region[static_cast<size_t>(e)] = i;
          break;
        }
      }
    }
    std::map<int, double> values{{-1, 1.0}};
    for (int i = 0; i < 9; ++i) values[i] = mu[static_cast<size_t>(i)];
    auto blocks = assemble_diffusion(m.mesh, CoefficientField::region_field(region, values), m.dofs);
    m.ff = std::move(blocks.ff);
    m.fc = std::move(blocks.fc);
    m.load_free = assemble_load(m.mesh, CoefficientField::constant(0.0), m.dofs,
                                {{TagKind::NeumannInflow, 1.0}});
    m.lift = Vector::Zero(m.mesh.num_nodes());
    return m;
  };
  return p;
}

Problem make_problem(const std::string& id, const ProblemOptions& opts) {
  if (id == "poisson_2d") return make_poisson_2d(opts);
  if (id == "graetz") return make_graetz(opts);
  if (id == "thermal_cross") return make_thermal_cross(opts);
  if (id == "poisson_single") return make_poisson_single_domain(opts);
  throw ConfigError("unknown benchmark '" + id + "'");
}

}  // namespace ddrom
