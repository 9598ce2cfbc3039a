// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ddrom/linalg.hpp"
#include "ddrom/pgd.hpp"
#include "ddrom/problems.hpp"

using namespace ddrom;

namespace {

GridPtr make_grid(std::vector<GridDim> dims) {
  auto g = std::make_shared<ParametricGrid>();
  g->dims = std::move(dims);
  return g;
}

SeparatedTensor random_tensor(int spatial_dim, const GridPtr& grid, int rank, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  SeparatedTensor t = SeparatedTensor::zero(spatial_dim, grid);
  for (int m = 0; m < rank; ++m) {
    Mode mode;
    mode.spatial = Vector::NullaryExpr(spatial_dim, [&](Eigen::Index) { return dist(rng); });
    for (const auto& d : grid->dims)
      mode.factors.push_back(Vector::NullaryExpr(d.n, [&](Eigen::Index) { return dist(rng); }));
    t.terms.push_back(std::move(mode));
  }
  return t;
}

// dense tabulation over the whole collocation grid (small grids only)
Matrix dense_tabulation(const SeparatedTensor& t) {
  int cols = 1;
  for (const auto& d : t.grid->dims) cols *= d.n;
  Matrix out = Matrix::Zero(t.spatial_dim, cols);
  for (int c = 0; c < cols; ++c) {
    int rest = c;
    std::vector<double> mu;
    for (const auto& d : t.grid->dims) {
      mu.push_back(d.point(rest % d.n));
      rest /= d.n;
    }
    out.col(c) = evaluate(t, mu);
  }
  return out;
}

SpMat sparse_identity(int n) {
  SpMat s(n, n);
  s.setIdentity();
  return s;
}

}  // namespace

TEST_CASE("evaluate: rank-0 and constant parametric modes") {
  auto grid = make_grid({{"mu", 0.0, 1.0, 11}});
  SeparatedTensor zero = SeparatedTensor::zero(5, grid);
  CHECK(evaluate(zero, {0.5}).norm() == 0.0);

  SeparatedTensor t = SeparatedTensor::zero(5, grid);
  Mode m;
  m.spatial = Vector::LinSpaced(5, 1.0, 5.0);
  m.factors = {Vector::Ones(11)};
  t.terms.push_back(m);
  for (double mu : {0.0, 0.123, 1.0}) CHECK((evaluate(t, {mu}) - m.spatial).norm() == 0.0);
}

TEST_CASE("evaluate: off-grid points match the dense linear-interpolation oracle") {
  auto grid = make_grid({{"a", 0.0, 2.0, 9}, {"b", -1.0, 1.0, 7}});
  SeparatedTensor t = random_tensor(6, grid, 2, 101);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> da(0.0, 2.0), db(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = da(rng), b = db(rng);
    // oracle: interpolate each parametric mode by hand, then combine
    Vector expected = Vector::Zero(6);
    for (const Mode& m : t.terms) {
      auto lerp = [](const GridDim& d, const Vector& f, double x) {
        const double s = (x - d.lo) / d.spacing();
        const int i = std::min(static_cast<int>(s), d.n - 2);
        return f[i] * (1 - (s - i)) + f[i + 1] * (s - i);
      };
      expected += lerp(grid->dims[0], m.factors[0], a) * lerp(grid->dims[1], m.factors[1], b) *
                  m.spatial;
    }
    CHECK((evaluate(t, {a, b}) - expected).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("evaluate: out-of-interval parameters are rejected") {
  auto grid = make_grid({{"mu", 0.0, 1.0, 5}});
  SeparatedTensor t = random_tensor(3, grid, 1, 4);
  CHECK_THROWS_AS(evaluate(t, {1.5}), ParameterError);
  CHECK_THROWS_AS(evaluate(t, {-0.2}), ParameterError);
}

TEST_CASE("add and scale distribute over evaluation") {
  auto grid = make_grid({{"mu", 0.0, 1.0, 8}});
  SeparatedTensor a = random_tensor(4, grid, 2, 21);
  SeparatedTensor b = random_tensor(4, grid, 3, 22);
  SeparatedTensor zero = SeparatedTensor::zero(4, grid);

  CHECK(add(a, zero).rank() == a.rank());
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const double mu = std::uniform_real_distribution<>(0.0, 1.0)(rng);
    CHECK((evaluate(add(a, b), {mu}) - evaluate(a, {mu}) - evaluate(b, {mu}))
              .lpNorm<Eigen::Infinity>() < 1e-13);
    CHECK(evaluate(scale(a, 0.0), {mu}).norm() == 0.0);
    CHECK((evaluate(scale(a, -2.5), {mu}) + 2.5 * evaluate(a, {mu})).lpNorm<Eigen::Infinity>() <
          1e-13);
  }

  auto other = make_grid({{"mu", 0.0, 1.0, 9}});
  SeparatedTensor c = random_tensor(4, other, 1, 23);
  CHECK_THROWS_AS(add(a, c), ShapeError);
}

TEST_CASE("tensor norms match the dense oracle") {
  auto grid = make_grid({{"a", 0.0, 1.0, 6}, {"b", 0.0, 1.0, 5}});
  SeparatedTensor t = random_tensor(7, grid, 3, 31);
  SeparatedTensor s = random_tensor(7, grid, 2, 32);
  CHECK(tensor_norm(t) == doctest::Approx(dense_tabulation(t).norm()).epsilon(1e-12));
  CHECK(tensor_diff_norm(t, s) ==
        doctest::Approx((dense_tabulation(t) - dense_tabulation(s)).norm()).epsilon(1e-12));
}

TEST_CASE("greedy: parameter-independent problem converges with exactly one mode") {
  ProblemOptions opts;
  opts.poisson_h = 0.25;
  opts.poisson_mu = {"mu", 1.0, 50.0, 30};
  Problem p = make_poisson_2d(opts);
  const auto& dom = p.domains[0];

  AffineOperator op;
  op.grid = dom.grid;
  op.n_free = dom.op.n_free;
  op.n_constrained = dom.op.n_constrained;
  op.terms.push_back(dom.op.terms[0]);  // constant-coefficient stiffness only

  SeparatedLoad load;
  load.grid = dom.grid;
  load.terms.push_back(dom.load.terms[0]);  // mu-independent force term

  auto [t, report] = greedy_solve(op, load, {1e-4, 20, 30, 1e-6, 99});
  CHECK(t.rank() == 1);
  CHECK(report.termination == "amplitude_tol");

  SparseFactorization lu(op.terms[0].ff);
  const Vector direct = lu.solve(load.terms[0].f);
  const Vector at_mid = evaluate(t, {25.0});
  CHECK((at_mid - direct).norm() / direct.norm() < 1e-8);
}

TEST_CASE("greedy: zero load returns the rank-0 tensor") {
  ProblemOptions opts;
  opts.poisson_h = 0.25;
  opts.poisson_mu = {"mu", 1.0, 50.0, 30};
  Problem p = make_poisson_2d(opts);
  SeparatedLoad empty_load;
  empty_load.grid = p.domains[0].grid;
  LoadTerm lt;
  lt.f = Vector::Zero(p.domains[0].op.n_free);
  lt.factors = {Vector::Ones(30)};
  empty_load.terms.push_back(lt);
  auto [t, report] = greedy_solve(p.domains[0].op, empty_load, {});
  CHECK(t.rank() == 0);
  CHECK(report.termination == "zero_rhs");
}

TEST_CASE("greedy: manufactured separable solution is recovered (analytic oracle)") {
  auto grid = make_grid({{"mu", 0.0, 1.0, 41}});
  const int n = 12;
  AffineOperator op;
  op.grid = grid;
  op.n_free = n;
  op.n_constrained = 0;
  op.terms.push_back({sparse_identity(n), SpMat(n, 0), {Vector::Ones(41)}, "identity"});

  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector f1(n), f2(n);
  for (int i = 0; i < n; ++i) {
    f1[i] = dist(rng);
    f2[i] = dist(rng);
  }
  const GridDim& d = grid->dims[0];
  const Vector g1 = ParametricGrid::tabulate(d, [](double m) { return 1.0 + m; });
  const Vector g2 = ParametricGrid::tabulate(d, [](double m) { return std::sin(3.0 * m); });

  SeparatedLoad load;
  load.grid = grid;
  load.terms.push_back({f1, {g1}});
  load.terms.push_back({f2, {g2}});

  auto [t, report] = greedy_solve(op, load, {1e-8, 20, 60, 1e-10, 7});
  CHECK(t.rank() <= 4);

  std::uniform_int_distribution<int> pick(0, 40);
  for (int trial = 0; trial < 5; ++trial) {
    const double mu = d.point(pick(rng));
    const Vector expected = (1.0 + mu) * f1 + std::sin(3.0 * mu) * f2;
    CHECK((evaluate(t, {mu}) - expected).norm() / expected.norm() < 1e-6);
  }
}

TEST_CASE("greedy: coarse Poisson data problem agrees with direct FE solves") {
  ProblemOptions opts;
  opts.poisson_h = 0.25;
  opts.poisson_mu = {"mu", 1.0, 50.0, 99};
  Problem p = make_poisson_2d(opts);
  const auto& dom = p.domains[0];

  const double tol = 1e-4;
  auto [t, report] = greedy_solve(dom.op, dom.load, {tol, 40, 30, 1e-6, 2024});
  CHECK(report.termination == "amplitude_tol");

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> pick(0, 98);
  for (int trial = 0; trial < 5; ++trial) {
    const double mu = dom.grid->dims[0].point(pick(rng));
    SparseFactorization lu(dom.direct_assemble({mu}).ff);
    const Vector direct = lu.solve(dom.load.evaluate_at({mu}));
    const Vector pgd = evaluate(t, {mu});
    CHECK((pgd - direct).norm() / direct.norm() < 10 * tol);
  }
}

TEST_CASE("compress: collinear terms merge to rank one with summed amplitude") {
  auto grid = make_grid({{"mu", 0.0, 1.0, 15}});
  SeparatedTensor t = random_tensor(9, grid, 1, 77);
  Mode doubled = t.terms[0];
  doubled.spatial *= 2.0;
  t.terms.push_back(doubled);

  SeparatedTensor c = compress(t, 1e-3);
  CHECK(c.rank() == 1);
  CHECK((evaluate(c, {0.4}) - 3.0 * evaluate(SeparatedTensor{9, grid, {t.terms[0]}}, {0.4}))
            .lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("compress: rank-0 passes through") {
  auto grid = make_grid({{"mu", 0.0, 1.0, 5}});
  SeparatedTensor z = SeparatedTensor::zero(4, grid);
  CHECK(compress(z, 1e-3).rank() == 0);
}

TEST_CASE("compress: noisy low-rank tensor is re-approximated (dense oracle)") {
  auto grid = make_grid({{"mu", 0.0, 1.0, 25}});
  const int n = 20;
  SeparatedTensor basis = random_tensor(n, grid, 3, 500);
  // rank-10 listing spanning 3 directions plus tiny noise
  SeparatedTensor t = SeparatedTensor::zero(n, grid);
  std::mt19937_64 rng(501);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int m = 0; m < 10; ++m) {
    Mode mode = basis.terms[m % 3];
    mode.spatial = mode.spatial * dist(rng);
    for (auto& f : mode.factors) f = f * (1.0 + 1e-6 * dist(rng));
    t.terms.push_back(std::move(mode));
  }

  SeparatedTensor c = compress(t, 1e-3);
  CHECK(c.rank() <= 4);
  const Matrix dense_t = dense_tabulation(t);
  const Matrix dense_c = dense_tabulation(c);
  CHECK((dense_t - dense_c).norm() / dense_t.norm() <= 1e-3);
}

TEST_CASE("compress: idempotent and never increases rank") {
  auto grid = make_grid({{"a", 0.0, 1.0, 9}, {"b", 0.0, 2.0, 8}});
  for (unsigned seed = 0; seed < 10; ++seed) {
    SeparatedTensor t = random_tensor(11, grid, 6, 900 + seed);
    SeparatedTensor c1 = compress(t, 1e-3);
    CHECK(c1.rank() <= t.rank());
    CHECK(tensor_diff_norm(t, c1) <= 1e-3 * tensor_norm(t) * (1 + 1e-9));
    SeparatedTensor c2 = compress(c1, 1e-3);
    CHECK(c2.rank() <= c1.rank());
    CHECK(tensor_diff_norm(c1, c2) <= 1e-3 * tensor_norm(c1) * (1 + 1e-9));
  }
}

TEST_CASE("rank-one detection: single-term operator and load stop after one mode") {
  auto grid = make_grid({{"mu", 1.0, 2.0, 21}});
  const int n = 8;
  AffineOperator op;
  op.grid = grid;
  op.n_free = n;
  op.n_constrained = 0;
  op.terms.push_back({sparse_identity(n), SpMat(n, 0),
                      {ParametricGrid::tabulate(grid->dims[0], [](double m) { return m; })},
                      "scaled identity"});
  SeparatedLoad load;
  load.grid = grid;
  Vector f = Vector::LinSpaced(n, 1.0, 2.0);
  load.terms.push_back({f, {Vector::Ones(21)}});

  auto [t, report] = greedy_solve(op, load, {1e-4, 10, 50, 1e-9, 3});
  CHECK(t.rank() == 1);  // u = f / mu is exactly rank one
  CHECK((evaluate(t, {1.5}) - Vector(f / 1.5)).norm() / f.norm() < 1e-6);
}
