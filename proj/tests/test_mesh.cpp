// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>
#include <set>

#include "ddrom/mesh.hpp"

using namespace ddrom;

namespace {

TagRule all_dirichlet() {
  return [](double, double) -> std::optional<BoundaryTag> {
    return BoundaryTag{TagKind::DirichletExternal, ""};
  };
}

}  // namespace

TEST_CASE("rect mesh: single element") {
  QuadMesh m = build_rect_mesh({0.0, 1.0}, {0.0, 1.0});
  CHECK(m.num_elements() == 1);
  CHECK(m.num_nodes() == 4);
}

TEST_CASE("rect mesh: first subdomain of the two-domain Poisson setup") {
  auto xs = uniform_spacing(0.0, 1.05, 0.05);
  auto ys = uniform_spacing(0.0, 1.0, 0.05);
  QuadMesh m = build_rect_mesh(xs, ys);
  CHECK(m.num_elements() == 21 * 20);
  CHECK(m.num_nodes() == 462);
}

TEST_CASE("rect mesh: element count equals nx*ny (counting oracle)") {
  auto xs = uniform_spacing(0.0, 1.0, 0.25);
  auto ys = uniform_spacing(0.0, 1.0, 0.25);
  QuadMesh m = build_rect_mesh(xs, ys);
  CHECK(m.num_elements() == 16);
  CHECK(m.num_nodes() == 25);

  // oracle: recount the tensor structure from the node coordinates
  std::set<double> distinct_x, distinct_y;
  for (const auto& p : m.nodes) {
    distinct_x.insert(p.x());
    distinct_y.insert(p.y());
  }
  const int nx = static_cast<int>(distinct_x.size()) - 1;
  const int ny = static_cast<int>(distinct_y.size()) - 1;
  CHECK(m.num_elements() == nx * ny);
  m.validate();
}

TEST_CASE("rect mesh: non-monotone coordinates rejected") {
  CHECK_THROWS_AS(build_rect_mesh({0.0, 0.5, 0.4}, {0.0, 1.0}), GeometryError);
  CHECK_THROWS_AS(build_rect_mesh({0.0}, {0.0, 1.0}), GeometryError);
}

TEST_CASE("cross mesh: published sizes give 2080 elements") {
  QuadMesh m = build_cross_mesh({});
  CHECK(m.num_elements() == 400 + 4 * 420);
  // 21x21 central grid plus four wings of 21x21 fresh nodes each
  CHECK(m.num_nodes() == 441 + 4 * 441);
  m.validate();
}

TEST_CASE("cross mesh: degenerate wings collapse to the central block") {
  CrossSpec spec;
  spec.wing_depth = 0.0;
  QuadMesh m = build_cross_mesh(spec);
  CHECK(m.num_elements() == 400);
}

TEST_CASE("cross mesh: non-conforming spacing rejected") {
  CrossSpec spec;
  spec.wing_h = 0.013;  // does not divide 0.2625
  CHECK_THROWS_AS(build_cross_mesh(spec), GeometryError);
}

TEST_CASE("interface extraction: Dirichlet endpoints are dropped") {
  auto xs = uniform_spacing(0.0, 1.05, 0.05);
  auto ys = uniform_spacing(0.0, 1.0, 0.05);
  QuadMesh m = build_rect_mesh(xs, ys, all_dirichlet());
  InterfaceDofSet s = extract_interface(m, {{1.05, 0.0}, {1.05, 1.0}}, EndpointRule::Auto);
  CHECK(s.size() == 19);
  CHECK_FALSE(s.includes_endpoints);
  // strictly ordered along the interface
  for (int i = 1; i < s.size(); ++i)
    CHECK(m.nodes[s.dof_indices[i]].y() > m.nodes[s.dof_indices[i - 1]].y());
}

TEST_CASE("interface extraction: Neumann endpoints are kept") {
  auto xs = uniform_spacing(0.0, 0.2625, 0.0125);
  auto ys = uniform_spacing(0.0, 1.0, 0.05);
  TagRule neumann = [](double, double) -> std::optional<BoundaryTag> {
    return BoundaryTag{TagKind::NeumannHomogeneous, ""};
  };
  QuadMesh m = build_rect_mesh(xs, ys, neumann);
  InterfaceDofSet s = extract_interface(m, {{0.2625, 0.0}, {0.2625, 1.0}}, EndpointRule::Auto);
  CHECK(s.size() == 21);
  CHECK(s.includes_endpoints);
}

TEST_CASE("interface extraction: two-node edge with excluded endpoints is empty") {
  QuadMesh m = build_rect_mesh({0.0, 1.0}, {0.0, 1.0});
  InterfaceDofSet s = extract_interface(m, {{1.0, 0.0}, {1.0, 1.0}}, EndpointRule::Exclude);
  CHECK(s.size() == 0);
}

TEST_CASE("interface extraction: misaligned segment rejected") {
  QuadMesh m = build_rect_mesh({0.0, 0.5, 1.0}, {0.0, 0.5, 1.0});
  CHECK_THROWS_AS(extract_interface(m, {{0.0, 0.0}, {1.0, 1.0}}, EndpointRule::Auto),
                  GeometryError);
  CHECK_THROWS_AS(extract_interface(m, {{0.31, 0.0}, {0.31, 1.0}}, EndpointRule::Auto),
                  GeometryError);
}

TEST_CASE("restriction: values are a direct node lookup") {
  auto xs = uniform_spacing(0.0, 1.05, 0.05);
  auto ys = uniform_spacing(0.0, 1.0, 0.05);
  QuadMesh m = build_rect_mesh(xs, ys, all_dirichlet());
  InterfaceDofSet s = extract_interface(m, {{1.05, 0.0}, {1.05, 1.0}}, EndpointRule::Auto);

  Vector constant = Vector::Ones(m.num_nodes());
  CHECK(restrict_to_nodes(constant, s.dof_indices).isApprox(Vector::Ones(s.size())));

  Vector coord_x(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) coord_x[i] = m.nodes[i].x();
  Vector rx = restrict_to_nodes(coord_x, s.dof_indices);
  for (int i = 0; i < rx.size(); ++i) CHECK(rx[i] == doctest::Approx(1.05).epsilon(1e-14));

  std::mt19937_64 rng(11);
  Vector random(m.num_nodes());
  for (int i = 0; i < random.size(); ++i) random[i] = std::uniform_real_distribution<>(-1, 1)(rng);
  Vector rr = restrict_to_nodes(random, s.dof_indices);
  for (int j = 0; j < s.size(); ++j) CHECK(rr[j] == random[s.dof_indices[j]]);
}

TEST_CASE("extension: Lagrange property and round trip") {
  auto xs = uniform_spacing(0.0, 1.05, 0.05);
  auto ys = uniform_spacing(0.0, 1.0, 0.05);
  QuadMesh m = build_rect_mesh(xs, ys, all_dirichlet());
  InterfaceDofSet s = extract_interface(m, {{1.05, 0.0}, {1.05, 1.0}}, EndpointRule::Auto, "g");
  SubdomainTopology topo = SubdomainTopology::build(0, m, {s});

  CHECK(extend_interface(topo, "g", Vector::Zero(s.size())).norm() == 0.0);
  CHECK_THROWS_AS(extend_interface(topo, "nope", Vector::Zero(s.size())), TopologyError);

  Vector ek = Vector::Zero(s.size());
  ek[4] = 1.0;
  Vector field = extend_interface(topo, "g", ek);
  CHECK(field[s.dof_indices[4]] == 1.0);
  CHECK(field.lpNorm<1>() == 1.0);  // zero at every other node

  std::mt19937_64 rng(12);
  Vector lam(s.size());
  for (int i = 0; i < lam.size(); ++i) lam[i] = std::uniform_real_distribution<>(-2, 2)(rng);
  Vector back = restrict_to_nodes(extend_interface(topo, "g", lam), s.dof_indices);
  CHECK((back - lam).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("partition of unity on the interface") {
  auto xs = uniform_spacing(0.0, 1.05, 0.05);
  auto ys = uniform_spacing(0.0, 1.0, 0.05);
  QuadMesh m = build_rect_mesh(xs, ys, all_dirichlet());
  InterfaceDofSet s = extract_interface(m, {{1.05, 0.0}, {1.05, 1.0}}, EndpointRule::Auto, "g");
  SubdomainTopology topo = SubdomainTopology::build(0, m, {s});

  Vector field = extend_interface(topo, "g", Vector::Ones(s.size()));
  Vector back = restrict_to_nodes(field, s.dof_indices);
  CHECK(back.isApprox(Vector::Ones(s.size())));
  // Q1 trace at the midpoints of interior interface edges
  for (int j = 1; j < s.size(); ++j) {
    const double mid = 0.5 * (field[s.dof_indices[j - 1]] + field[s.dof_indices[j]]);
    CHECK(mid == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("geometry maps") {
  QuadMesh m = build_rect_mesh(uniform_spacing(0.0, 1.0, 0.25), uniform_spacing(0.0, 1.0, 0.25));

  SUBCASE("identity") {
    QuadMesh mapped = apply_geometry_map(GeometryMap::identity(), m, {});
    for (int i = 0; i < m.num_nodes(); ++i) CHECK(mapped.nodes[i] == m.nodes[i]);
  }

  SUBCASE("channel stretch at mu2 = 1 is a pure shift") {
    GeometryMap g = GeometryMap::graetz(0.05, 0);
    QuadMesh mapped = apply_geometry_map(g, m, {1.0});
    for (int i = 0; i < m.num_nodes(); ++i) {
      CHECK(mapped.nodes[i].x() == doctest::Approx(1.0 + m.nodes[i].x()).epsilon(1e-14));
      CHECK(mapped.nodes[i].y() == m.nodes[i].y());
    }
  }

  SUBCASE("stretch is continuous at the break") {
    GeometryMap g = GeometryMap::graetz(0.05, 0);
    for (double m2 : {0.5, 2.0, 4.0}) {
      const double left = g.apply_point({0.05 - 1e-13, 0.3}, {m2}).x();
      const double right = g.apply_point({0.05 + 1e-13, 0.3}, {m2}).x();
      CHECK(left == doctest::Approx(right).epsilon(1e-9));
    }
  }

  SUBCASE("rigid quarter turns preserve element areas exactly") {
    GeometryMap g = GeometryMap::rigid(M_PI, {0.5, 0.5}, {1.5, 0.0});
    QuadMesh mapped = apply_geometry_map(g, m, {});
    for (int e = 0; e < m.num_elements(); ++e) {
      auto area = [](const QuadMesh& mm, int el) {
        const auto& q = mm.elements[el];
        double a = 0;
        for (int k = 0; k < 4; ++k) {
          const auto& p0 = mm.nodes[q[k]];
          const auto& p1 = mm.nodes[q[(k + 1) % 4]];
          a += p0.x() * p1.y() - p1.x() * p0.y();
        }
        return 0.5 * a;
      };
      CHECK(area(mapped, e) == doctest::Approx(area(m, e)).epsilon(1e-15));
    }
    mapped.validate();
  }

  SUBCASE("non-quarter-turn rotations are rejected") {
    CHECK_THROWS_AS(GeometryMap::rigid(M_PI / 3.0, {0.5, 0.5}, {0, 0}), GeometryError);
  }
}

TEST_CASE("overlap conformity: merged two-domain meshes dedupe to the union") {
  auto ys = uniform_spacing(0.0, 1.0, 0.05);
  QuadMesh m1 = build_rect_mesh(uniform_spacing(0.0, 1.05, 0.05), ys);
  QuadMesh m2 = build_rect_mesh(uniform_spacing(0.95, 2.0, 0.05), ys);
  QuadMesh u = merge_meshes({&m1, &m2});
  CHECK(u.num_nodes() == 41 * 21);
  CHECK(u.num_elements() == 40 * 20);
  u.validate();
}

TEST_CASE("mesh text export") {
  QuadMesh m = build_rect_mesh({0.0, 1.0}, {0.0, 1.0});
  write_mesh_text(m, "mesh_dump.txt");
  std::ifstream is("mesh_dump.txt");
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == m.num_nodes() + m.num_elements());
}
