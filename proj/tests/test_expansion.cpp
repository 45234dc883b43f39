#include <catch2/catch_amalgamated.hpp>

#include <titerlab/dyson.hpp>
#include <titerlab/evolve.hpp>
#include <titerlab/generator.hpp>
#include <titerlab/resolvent.hpp>
#include <titerlab/trajectory.hpp>

#include <Eigen/SparseLU>

#include <cmath>

using namespace titerlab;

namespace {

ModelSpec unit_model() {
  return ModelSpec(FlowModel::linear_decay(1.0), BoostMap::additive(1.0), 1.0);
}

ModelSpec plateau_model() {
  auto ps = PhaseSpace::interval(10.0);
  return ModelSpec(FlowModel::linear_decay(1.0, ps),
                   BoostMap::plateau(6.0, 10.0, Expr::parse("x + 4")), 1.0);
}

DensityVector smooth_bump(const Grid& grid, double c, double s) {
  auto f = DensityVector::from_function(grid, [=](double x) {
    double z = (x - c) / s;
    return std::exp(-0.5 * z * z);
  });
  f.normalize();
  return f;
}

// smallest N whose Poisson tail beyond N is below eps
int tail_cutoff(double lt, double eps) {
  double pmf = std::exp(-lt), acc = pmf;
  int N = 0;
  while (1.0 - acc >= eps) {
    ++N;
    pmf *= lt / N;
    acc += pmf;
  }
  return N;
}

} // namespace

TEST_CASE("jump expansion term masses match the Poisson weights") {
  auto model = unit_model();
  Grid grid(8.0, 300);
  auto f0 = smooth_bump(grid, 2.0, 0.5);
  for (double t : {0.5, 1.0, 2.0}) {
    const int N = tail_cutoff(t, 1e-3);
    auto dy = dyson_phillips(model, grid, f0, t, N);
    REQUIRE(dy.tail_bound < 1e-3);
    double pmf = std::exp(-t), retained = 0.0;
    for (int n = 0; n <= N; ++n) {
      INFO("t=" << t << " term " << n);
      CHECK(std::fabs(dy.term_mass[n] - pmf) < 1e-6);
      CHECK(dy.terms[n].mass() == Catch::Approx(dy.term_mass[n]));
      retained += pmf;
      pmf *= t / (n + 1);
    }
    CHECK(dy.tail_bound == Catch::Approx(1.0 - retained).margin(1e-12));
    CHECK(dy.partial.mass() == Catch::Approx(1.0 - dy.tail_bound).margin(1e-9));
  }
}

TEST_CASE("expansion terms match the Monte Carlo jump-count split") {
  auto model = unit_model();
  Grid grid(8.0, 200);
  auto f0 = smooth_bump(grid, 2.0, 0.5);
  const double t = 1.0;
  auto dy = dyson_phillips(model, grid, f0, t, 5);

  const int n_paths = 20000;
  std::vector<int> counts(16, 0);
  for (int p = 0; p < n_paths; ++p) {
    auto path = simulate_trajectory(model, 2.0, t, 1000 + p);
    std::size_t k = path.jumps().size();
    if (k < counts.size()) ++counts[k];
  }
  for (int n = 0; n <= 5; ++n) {
    const double frac = double(counts[n]) / n_paths;
    const double se = std::sqrt(dy.term_mass[n] * (1.0 - dy.term_mass[n]) / n_paths);
    INFO("n=" << n << " frac=" << frac << " term=" << dy.term_mass[n]);
    CHECK(std::fabs(frac - dy.term_mass[n]) < 4.0 * se + 1e-4);
  }
}

TEST_CASE("truncated expansion tracks the generator evolution") {
  auto model = unit_model();
  const double t = 1.0;
  const int N = tail_cutoff(t, 1e-3);
  double prev_gap = 0.0;
  for (int n : {200, 400}) {
    Grid grid(8.0, n);
    auto f0 = smooth_bump(grid, 2.0, 0.5);
    auto dy = dyson_phillips(model, grid, f0, t, N);
    GeneratorMatrix A(model, grid);
    auto fe = evolve(A, f0, t);
    const double gap = l1_distance(dy.partial, fe);
    // the gap is the Poisson tail plus the upwind-vs-exact transport error
    CHECK(gap < 1e-3 + 4.0 * grid.dx() * (1.0 + model.lambda * t));
    if (prev_gap > 0.0) CHECK(gap < 0.65 * prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("zero elapsed time returns the initial density") {
  auto model = unit_model();
  Grid grid(8.0, 100);
  auto f0 = smooth_bump(grid, 2.0, 0.5);
  auto dy = dyson_phillips(model, grid, f0, 0.0, 3);
  REQUIRE(dy.terms.size() == 4);
  CHECK(dy.tail_bound == 0.0);
  CHECK(l1_distance(dy.partial, f0) == 0.0);
  CHECK(dy.term_mass[0] == Catch::Approx(1.0));
  CHECK(dy.term_mass[1] == 0.0);
}

TEST_CASE("single transport term reproduces the exact pushforward") {
  // with a piecewise-constant start the grid transport is exact, so the
  // zero-jump term can be compared against the analytic image cell by cell
  auto model = ModelSpec(FlowModel::linear_decay(1.0), BoostMap::additive(1.0), 1e-300);
  Grid grid(8.0, 400);
  auto f0 = DensityVector::uniform(grid, 1.0, 2.0);
  const double t = 0.7;
  auto dy = dyson_phillips(model, grid, f0, t, 0);
  const double lo = std::exp(-t), hi = 2.0 * std::exp(-t);
  for (int i = 0; i < grid.n_cells(); ++i) {
    const double over =
        std::max(0.0, std::min(grid.right(i), hi) - std::max(grid.left(i), lo));
    const double expect = std::exp(t) * over / grid.dx();
    CHECK(dy.partial.values[i] == Catch::Approx(expect).margin(1e-10));
  }
}

TEST_CASE("interleaved quadrature weights integrate low-order polynomials") {
  const double h = 0.37;
  for (int j : {1, 2, 3, 4, 5, 6, 7, 64}) {
    auto w = detail::prefix_weights(j, h);
    REQUIRE(w.size() == std::size_t(j) + 1);
    const int max_p = (j == 1) ? 1 : 3;
    for (int p = 0; p <= max_p; ++p) {
      double got = 0.0;
      for (int k = 0; k <= j; ++k) got += w[k] * std::pow(k * h, p);
      const double want = std::pow(j * h, p + 1) / (p + 1);
      INFO("j=" << j << " p=" << p);
      CHECK(got == Catch::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("expansion input validation") {
  auto model = unit_model();
  Grid grid(8.0, 100);
  auto f0 = smooth_bump(grid, 2.0, 0.5);
  CHECK_THROWS_AS(dyson_phillips(model, Grid(8.0, 50), f0, 1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(dyson_phillips(model, grid, f0, 1.0, -1), std::invalid_argument);
  CHECK_THROWS_AS(dyson_phillips(model, grid, f0, -0.5, 3), std::invalid_argument);
  CHECK_THROWS_AS(dyson_phillips(model, grid, f0, 1.0, 3, 63), std::invalid_argument);
  CHECK_THROWS_AS(dyson_phillips(model, grid, f0, 1.0, 3, 0), std::invalid_argument);

  auto pm = plateau_model();
  Grid short_grid(8.0, 100);
  auto g0 = smooth_bump(short_grid, 2.0, 0.5);
  CHECK_THROWS_AS(dyson_phillips(pm, short_grid, g0, 1.0, 3), std::invalid_argument);
}

TEST_CASE("transport resolvent is nonnegative and fixes the plateau constant") {
  auto pm = plateau_model();
  Grid grid(10.0, 500);
  auto f = smooth_bump(grid, 6.5, 0.8);
  for (double mu : {0.5, 1.0, 5.0}) {
    auto rr = resolvent_a0(pm, grid, mu, f);
    double mn = 1e300, ik = 0.0;
    for (int i = 0; i < grid.n_cells(); ++i) {
      mn = std::min(mn, rr.values.values[i]);
      const double over =
          std::max(0.0, std::min(grid.right(i), 10.0) - std::max(grid.left(i), 6.0));
      ik += rr.values.values[i] * over;
    }
    INFO("mu=" << mu);
    CHECK(mn >= 0.0);
    CHECK(rr.plateau_integral > 0.05);
    CHECK(ik == Catch::Approx(rr.plateau_integral).epsilon(1e-12));
  }

  // no mass reaches [K, M]: the plateau constant collapses
  auto low = smooth_bump(grid, 3.0, 0.5);
  auto rr = resolvent_a0(pm, grid, 1.0, low);
  CHECK(rr.plateau_integral < 1e-8);
}

TEST_CASE("resolvent matches the discrete generator solve") {
  auto pm = plateau_model();
  double prev = 0.0;
  for (int n : {250, 500}) {
    Grid grid(10.0, n);
    auto f = smooth_bump(grid, 6.5, 0.8);
    auto rr = resolvent_a0(pm, grid, 1.0, f);
    auto A0 = a0_matrix(pm, grid);
    Eigen::SparseMatrix<double> S(n, n);
    S.setIdentity();
    S = 1.0 * S - A0;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(S);
    REQUIRE(lu.info() == Eigen::Success);
    Eigen::VectorXd fv(n);
    for (int i = 0; i < n; ++i) fv[i] = f.values[i];
    Eigen::VectorXd ud = lu.solve(fv);
    double err = 0.0;
    for (int i = 0; i < n; ++i) err += std::fabs(rr.values.values[i] - ud[i]);
    err *= grid.dx();
    INFO("n=" << n);
    CHECK(err < 5.0 / n);
    if (prev > 0.0) CHECK(err < 0.65 * prev);
    prev = err;
  }
}

TEST_CASE("applying the generator recovers the source at first order") {
  auto pm = plateau_model();
  double err250 = 0.0;
  for (int n : {250, 1000}) {
    Grid grid(10.0, n);
    auto f = smooth_bump(grid, 6.5, 0.8);
    auto rr = resolvent_a0(pm, grid, 1.0, f);
    auto A0 = a0_matrix(pm, grid);
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u[i] = rr.values.values[i];
    Eigen::VectorXd res = u - A0 * u; // (mu - A0) u with mu = 1
    double err = 0.0;
    for (int i = 0; i < n; ++i) err += std::fabs(res[i] - f.values[i]);
    err *= grid.dx();
    if (n == 250) {
      CHECK(err < 0.04);
      err250 = err;
    } else {
      CHECK(err250 / err > 3.0); // first order in the cell width
    }
  }
}

TEST_CASE("resolvent limit recovers the identity") {
  auto pm = plateau_model();
  Grid grid(10.0, 500);
  auto f = smooth_bump(grid, 3.0, 0.5);
  double prev = 1e300;
  for (double mu : {2.0, 20.0, 200.0}) {
    auto rr = resolvent_a0(pm, grid, mu, f);
    double err = 0.0;
    for (int i = 0; i < grid.n_cells(); ++i)
      err += std::fabs(mu * rr.values.values[i] - f.values[i]);
    err *= grid.dx();
    INFO("mu=" << mu);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.05);
}

TEST_CASE("jump-free generator loses exactly the mass that jumps") {
  auto pm = plateau_model();
  const int n = 200;
  Grid grid(10.0, n);
  auto A0 = a0_matrix(pm, grid);
  Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(n);
  Eigen::RowVectorXd col = ones * A0;
  for (int j = 0; j < n; ++j) {
    const double over =
        std::max(0.0, std::min(grid.right(j), 10.0) - std::max(grid.left(j), 6.0));
    const double expect = -pm.lambda * (1.0 - over / grid.dx());
    INFO("column " << j);
    CHECK(col[j] == Catch::Approx(expect).margin(1e-9));
  }
}

TEST_CASE("resolvent input validation") {
  auto pm = plateau_model();
  Grid grid(10.0, 100);
  auto f = smooth_bump(grid, 6.5, 0.8);

  Grid half_grid(8.0, 100);
  CHECK_THROWS_AS(resolvent_a0(unit_model(), half_grid, 1.0, smooth_bump(half_grid, 2.0, 0.5)),
                  std::invalid_argument);
  CHECK_THROWS_AS(resolvent_a0(pm, grid, 0.0, f), std::invalid_argument);
  CHECK_THROWS_AS(resolvent_a0(pm, grid, -1.0, f), std::invalid_argument);
  CHECK_THROWS_AS(resolvent_a0(pm, Grid(10.0, 50), 1.0, f), std::invalid_argument);

  // bounded model without a plateau branch
  auto ps = PhaseSpace::interval(10.0);
  ModelSpec sat(FlowModel::linear_decay(1.0, ps), BoostMap::saturating(10.0, 0.4), 1.0);
  CHECK_THROWS_AS(resolvent_a0(sat, grid, 1.0, f), std::invalid_argument);
  CHECK_THROWS_AS(a0_matrix(sat, grid), std::invalid_argument);

  // g changes sign inside the interval
  ModelSpec bad(FlowModel::custom(Expr::parse("-x * (1 - x / 5)"), ps),
                BoostMap::plateau(6.0, 10.0, Expr::parse("x + 4")), 1.0);
  CHECK_THROWS_AS(resolvent_a0(bad, grid, 1.0, f), std::domain_error);
}
