// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ddrom/fem.hpp"
#include "ddrom/linalg.hpp"
#include "ddrom/problems.hpp"

using namespace ddrom;

namespace {

DofPartition free_partition(const QuadMesh& m) { return DofPartition::build(m, {}); }

QuadMesh unit_element() { return build_rect_mesh({0.0, 1.0}, {0.0, 1.0}); }

}  // namespace

TEST_CASE("diffusion on one unit element matches the symbolic Q1 stiffness") {
  QuadMesh m = unit_element();
  auto blocks = assemble_diffusion(m, CoefficientField::constant(1.0), free_partition(m));
  Matrix k = Matrix(blocks.ff);
  // exact integrals of Q1 gradients on the unit square
  for (int i = 0; i < 4; ++i) CHECK(k(i, i) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(k(0, 1) == doctest::Approx(-1.0 / 6.0).epsilon(1e-13));
  CHECK(k(1, 2) == doctest::Approx(-1.0 / 6.0).epsilon(1e-13));
  CHECK(k(0, 2) == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));
  CHECK(k(1, 3) == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("diffusion with zero coefficient is the zero matrix") {
  QuadMesh m = unit_element();
  auto blocks = assemble_diffusion(m, CoefficientField::constant(0.0), free_partition(m));
  CHECK(Matrix(blocks.ff).norm() == 0.0);
}

TEST_CASE("diffusion row sums vanish (constants in the kernel)") {
  QuadMesh m = build_rect_mesh(uniform_spacing(0, 1, 0.5), uniform_spacing(0, 1, 0.5));
  auto blocks = assemble_diffusion(m, CoefficientField::constant(1.0), free_partition(m));
  Vector row_sums = blocks.ff * Vector::Ones(m.num_nodes());
  CHECK(row_sums.lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("diffusion matrices are symmetric positive semidefinite") {
  QuadMesh m = build_rect_mesh(uniform_spacing(0, 1, 0.25), uniform_spacing(0, 1, 0.25));
  Vector b(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) b[i] = 1.0 + m.nodes[i].x();
  auto blocks = assemble_diffusion(m, CoefficientField::nodal_field(b), free_partition(m));
  Matrix k = Matrix(blocks.ff);
  CHECK((k - k.transpose()).lpNorm<Eigen::Infinity>() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(k);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("assembly with an empty free set is rejected") {
  QuadMesh m = unit_element();
  for (int i = 0; i < 4; ++i) m.boundary_tags[i] = {TagKind::DirichletExternal, ""};
  DofPartition dofs = DofPartition::build(m, {});
  CHECK(dofs.n_free() == 0);
  CHECK_THROWS_AS(assemble_diffusion(m, CoefficientField::constant(1.0), dofs), ConfigError);
}

TEST_CASE("convection: zero velocity gives zero matrices") {
  QuadMesh m = build_rect_mesh(uniform_spacing(0, 1, 0.25), uniform_spacing(0, 1, 0.25));
  auto blocks = assemble_convection_supg(
      m, [](double, double) { return Eigen::Vector2d{0, 0}; }, SupgRule::upwind_limit(),
      free_partition(m));
  CHECK(Matrix(blocks[0].ff).norm() == 0.0);
  CHECK(Matrix(blocks[1].ff).norm() == 0.0);
}

TEST_CASE("convection on a strip matches the central-difference stencil") {
  // one row of square elements, a = (1,0), pure Galerkin (tau = 0)
  const double h = 0.5;
  QuadMesh m = build_rect_mesh(uniform_spacing(0, 1.5, h), {0.0, h});
  auto blocks = assemble_convection_supg(
      m, [](double, double) { return Eigen::Vector2d{1, 0}; }, SupgRule::zero(),
      free_partition(m));
  Matrix c = Matrix(blocks[0].ff);

  // oracle: lumping each vertical node pair reduces the strip to 1D linear
  // elements, where int(phi_i dphi_j/dx) couples neighbours with +-1/2; the
  // y-integration contributes the strip height h
  auto pair_weight = [&](int col_x, int row_x) {
    const int stride = 4;  // nodes per row
    return c(row_x, col_x) + c(row_x, col_x + stride) + c(row_x + stride, col_x) +
           c(row_x + stride, col_x + stride);
  };
  const int left = 0, mid = 1, right = 2;  // bottom-row nodes at x = 0, 0.5, 1
  CHECK(pair_weight(right, mid) == doctest::Approx(h / 2.0).epsilon(1e-13));
  CHECK(pair_weight(left, mid) == doctest::Approx(-h / 2.0).epsilon(1e-13));
  CHECK(pair_weight(mid, mid) == doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("convection annihilates constants, SUPG reduces to Galerkin at tau=0") {
  QuadMesh m = build_rect_mesh(uniform_spacing(0, 1, 0.25), uniform_spacing(0, 1, 0.25));
  auto velocity = [](double, double y) { return Eigen::Vector2d{4 * y * (1 - y), 0}; };
  auto with_tau = assemble_convection_supg(m, velocity, SupgRule::upwind_limit(), free_partition(m));
  auto no_tau = assemble_convection_supg(m, velocity, SupgRule::zero(), free_partition(m));
  CHECK((with_tau[0].ff * Vector::Ones(m.num_nodes())).lpNorm<Eigen::Infinity>() < 1e-13);
  CHECK(Matrix(no_tau[1].ff).norm() == 0.0);
  CHECK((Matrix(no_tau[0].ff) - Matrix(with_tau[0].ff)).norm() == 0.0);
}

TEST_CASE("SUPG streamline term is nonzero and positive semidefinite") {
  QuadMesh m = build_rect_mesh(uniform_spacing(0, 1, 0.25), uniform_spacing(0, 1, 0.25));
  auto velocity = [](double, double) { return Eigen::Vector2d{1, 0}; };
  auto blocks = assemble_convection_supg(m, velocity, SupgRule::upwind_limit(), free_partition(m));
  Matrix s = Matrix(blocks[1].ff);
  CHECK(s.norm() > 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("load: unit force on the unit element") {
  QuadMesh m = unit_element();
  Vector f = assemble_load(m, CoefficientField::constant(1.0), free_partition(m));
  for (int i = 0; i < 4; ++i) CHECK(f[i] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("load: zero force gives the zero vector") {
  QuadMesh m = unit_element();
  CHECK(assemble_load(m, CoefficientField::constant(0.0), free_partition(m)).norm() == 0.0);
}

TEST_CASE("load: edge flux lumps as (1/4, 1/2, 1/4) on a two-element edge") {
  TagRule rule = [](double x, double) -> std::optional<BoundaryTag> {
    if (x <= 1e-12) return BoundaryTag{TagKind::NeumannInflow, ""};
    return BoundaryTag{TagKind::NeumannHomogeneous, ""};
  };
  QuadMesh m = build_rect_mesh({0.0, 1.0}, uniform_spacing(0, 1, 0.5), rule);
  Vector f = assemble_load(m, CoefficientField::constant(0.0), free_partition(m),
                           {{TagKind::NeumannInflow, 1.0}});
  // nodes on x=0 at y = 0, 0.5, 1
  const int n0 = 0, n1 = 2, n2 = 4;
  CHECK(f[n0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(f[n1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(f[n2] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(f.lpNorm<1>() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("load: flux without a tagged edge is rejected") {
  QuadMesh m = unit_element();
  CHECK_THROWS_AS(assemble_load(m, CoefficientField::constant(0.0), free_partition(m),
                                {{TagKind::NeumannInflow, 1.0}}),
                  ConfigError);
}

TEST_CASE("Dirichlet lift: boundary values exactly at Dirichlet nodes") {
  TagRule rule = [](double x, double) -> std::optional<BoundaryTag> {
    return BoundaryTag{x >= 1.0 - 1e-12 ? TagKind::DirichletExternal : TagKind::NeumannHomogeneous,
                       ""};
  };
  QuadMesh m = build_rect_mesh(uniform_spacing(0, 2, 0.5), uniform_spacing(0, 1, 0.5), rule);
  Vector lift = build_dirichlet_lift(m, [](double, double) { return 1.0; });
  for (int i = 0; i < m.num_nodes(); ++i) {
    const bool dirichlet = m.boundary_tags.count(i) > 0 &&
                           m.boundary_tags.at(i).kind == TagKind::DirichletExternal;
    CHECK(lift[i] == (dirichlet ? 1.0 : 0.0));
  }
  CHECK(build_dirichlet_lift(m, [](double, double) { return 0.0; }).norm() == 0.0);
}

TEST_CASE("Dirichlet lift: splitting a field reproduces it (oracle)") {
  QuadMesh m = build_rect_mesh(uniform_spacing(0, 1, 0.25), uniform_spacing(0, 1, 0.25),
                               [](double, double) -> std::optional<BoundaryTag> {
                                 return BoundaryTag{TagKind::DirichletExternal, ""};
                               });
  DofPartition dofs = DofPartition::build(m, {});
  std::mt19937_64 rng(3);
  Vector v(m.num_nodes());
  for (int i = 0; i < v.size(); ++i) v[i] = std::uniform_real_distribution<>(-1, 1)(rng);
  // lift of the boundary trace
  Vector lift = Vector::Zero(m.num_nodes());
  for (const auto& [node, tag] : m.boundary_tags)
    if (tag.kind == TagKind::DirichletExternal) lift[node] = v[node];
  Vector zero_part = v - lift;
  for (int c : dofs.constrained_nodes) CHECK(zero_part[c] == 0.0);
  CHECK((lift + zero_part - v).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("affine operator equals direct assembly at grid points (oracle equivalence)") {
  ProblemOptions opts;
  opts.poisson_h = 0.25;
  opts.poisson_mu = {"mu", 1.0, 50.0, 99};

  SUBCASE("two-domain Poisson") {
    Problem p = make_poisson_2d(opts);
    for (const auto& dom : p.domains) {
      for (double mu : {1.0, 25.5, 50.0}) {
        SpMat direct = dom.direct_assemble({mu}).ff;
        SpMat affine = dom.op.evaluate_ff({mu});
        CHECK((Matrix(direct) - Matrix(affine)).lpNorm<Eigen::Infinity>() <
              1e-12 * Matrix(direct).lpNorm<Eigen::Infinity>());
      }
    }
  }

  SUBCASE("mapped channel") {
    ProblemOptions g;
    g.graetz_mu1 = {"mu1", 1e4, 2e4, 101};
    g.graetz_mu2 = {"mu2", 0.5, 4.0, 36};
    g.graetz_y_rows = 8;
    g.graetz_inlet_cols = 10;
    g.graetz_channel_cols = 12;
    Problem p = make_graetz(g);
    for (const auto& mu2 : {0.5, 2.25, 4.0}) {
      std::vector<double> mu = {1.5e4, mu2};
      SpMat direct = p.domains[1].direct_assemble(mu).ff;
      SpMat affine = p.domains[1].op.evaluate_ff(mu);
      CHECK((Matrix(direct) - Matrix(affine)).lpNorm<Eigen::Infinity>() <
            1e-10 * Matrix(direct).lpNorm<Eigen::Infinity>());
    }
  }

  SUBCASE("thermal cross reference subdomain") {
    ProblemOptions c;
    c.cross_mu = {"mu_hat", 5e-2, 10.0, 200};
    Problem p = make_thermal_cross(c);
    for (double mu : {0.05, 1.6, 10.0}) {
      SpMat direct = p.domains[2].direct_assemble({mu}).ff;
      SpMat affine = p.domains[2].op.evaluate_ff({mu});
      CHECK((Matrix(direct) - Matrix(affine)).lpNorm<Eigen::Infinity>() <
            1e-12 * Matrix(direct).lpNorm<Eigen::Infinity>());
    }
  }
}

TEST_CASE("poisson affine structure: two diffusion terms (1, x)") {
  ProblemOptions opts;
  opts.poisson_h = 0.25;
  opts.poisson_mu = {"mu", 1.0, 50.0, 50};
  Problem p = make_poisson_2d(opts);
  CHECK(p.domains[0].op.terms.size() == 2);
  // constant-coefficient part evaluated anywhere equals the plain stiffness
  auto plain = assemble_diffusion(p.domains[0].topo.mesh, CoefficientField::constant(1.0),
                                  p.domains[0].topo.partition);
  CHECK((Matrix(p.domains[0].op.terms[0].ff) - Matrix(plain.ff)).norm() == 0.0);
  // the x-weighted factor carries the mu dependence
  CHECK(p.domains[0].op.terms[1].factors[0][0] == doctest::Approx(1.0));
  CHECK(p.domains[0].op.terms[1].factors[0][49] == doctest::Approx(50.0));
}

TEST_CASE("cross affine structure: center indicator with mu factor, wings constant") {
  ProblemOptions c;
  c.cross_mu = {"mu_hat", 5e-2, 10.0, 40};
  Problem p = make_thermal_cross(c);
  const auto& op = p.domains[0].op;
  CHECK(op.terms.size() == 2);
  CHECK(op.terms[0].factors[0][0] == doctest::Approx(5e-2));
  CHECK(op.terms[1].factors[0].maxCoeff() == 1.0);
  CHECK(op.terms[1].factors[0].minCoeff() == 1.0);
}
