#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "titerlab/boost_map.hpp"
#include "titerlab/expr.hpp"
#include "titerlab/fp_matrix.hpp"
#include "titerlab/grid.hpp"

using titerlab::AssumptionProfile;
using titerlab::BoostMap;
using titerlab::DensityVector;
using titerlab::Expr;
using titerlab::FPMatrix;
using titerlab::Grid;

namespace {

BoostMap canonical_plateau() {
  // Inner branch x+4 on [0,6), ceiling 10 on [6,10].
  return BoostMap::plateau(6.0, 10.0, Expr::parse("x+4"));
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  double s = f(a) + f(b);
  const double h = (b - a) / n;
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("jump map point values") {
  CHECK(BoostMap::additive(1.0).apply(2.0) == 3.0);
  CHECK(BoostMap::affine(2.0, 1.0).apply(0.0) == 1.0);

  auto plat = canonical_plateau();
  CHECK(plat.apply(3.0) == Catch::Approx(7.0));
  CHECK(plat.apply(6.0) == 10.0);
  CHECK(plat.apply(8.5) == 10.0);
  CHECK(plat.apply(10.0) == 10.0);

  auto sat = BoostMap::saturating(10.0, 0.5);
  CHECK(sat.apply(4.0) == Catch::Approx(7.0));
  CHECK(sat.apply(10.0) == Catch::Approx(10.0));
}

TEST_CASE("transfer operator point values") {
  auto f = [](double x) { return std::exp(-x); };

  auto add = BoostMap::additive(1.0);
  CHECK(add.fp_apply_analytic(f, 3.0) == Catch::Approx(f(2.0)));
  CHECK(add.fp_apply_analytic(f, 0.5) == 0.0);  // below the image

  auto aff = BoostMap::affine(2.0, 1.0);
  CHECK(aff.fp_apply_analytic(f, 3.0) == Catch::Approx(0.5 * f(1.0)));
}

TEST_CASE("transfer operator preserves mass on densities") {
  auto f = [](double x) { return std::exp(-x); };  // density on the half-line

  auto add = BoostMap::additive(1.0);
  CHECK(simpson([&](double y) { return add.fp_apply_analytic(f, y); }, 1.0, 60.0, 4000) ==
        Catch::Approx(1.0).margin(1e-6));

  auto aff = BoostMap::affine(2.0, 0.5);
  CHECK(simpson([&](double y) { return aff.fp_apply_analytic(f, y); }, 0.5, 120.0, 8000) ==
        Catch::Approx(1.0).margin(1e-6));

  auto sat = BoostMap::saturating(10.0, 0.3);
  auto u = [](double x) { return (x >= 0 && x <= 10) ? 0.1 : 0.0; };
  CHECK(simpson([&](double y) { return sat.fp_apply_analytic(u, y); }, 3.0, 10.0, 2000) ==
        Catch::Approx(1.0).margin(1e-6));

  // Plateau maps act substochastically on densities: the ceiling mass becomes
  // an atom. Only the mass of [0,K) survives as a density.
  auto plat = canonical_plateau();
  CHECK(simpson([&](double y) { return plat.fp_apply_analytic(u, y); }, 4.0, 10.0, 2000) ==
        Catch::Approx(0.6).margin(1e-6));
}

TEST_CASE("koopman action") {
  auto add = BoostMap::additive(1.0);
  CHECK(add.koopman_apply([](double x) { return x; }, 2.0) == 3.0);
  CHECK(add.koopman_apply([](double) { return 1.0; }, 17.0) == 1.0);
}

TEST_CASE("discrete duality between transfer and composition operators") {
  // Bounded map, no overflow: the discrete pairing identity is exact for
  // grid-piecewise-constant test functions.
  Grid g(10.0, 64);
  auto sat = BoostMap::saturating(10.0, 0.3);
  FPMatrix P(sat, g);

  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> h(g.n_cells());
  for (auto& v : h) v = unif(rng);
  DensityVector f(g);
  for (auto& v : f.values) v = unif(rng);

  DensityVector Pf = P.apply_density(f);
  double lhs = 0, rhs = 0;
  for (int j = 0; j < g.n_cells(); ++j) lhs += Pf.values[j] * h[j] * g.dx();
  for (int i = 0; i < g.n_cells(); ++i) {
    // Cell average of h(Q(.)) over cell i, from the same row weights.
    double hq = 0;
    for (auto [j, w] : P.row(i)) hq += w * h[j];
    rhs += f.values[i] * hq * g.dx();
  }
  CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));

  // Half-line map against the pointwise Koopman composition: first order in dx.
  Grid g2(20.0, 400);
  auto aff = BoostMap::affine(1.5, 0.4);
  FPMatrix P2(aff, g2);
  DensityVector f2 = DensityVector::from_function(
      g2, [](double x) { return std::exp(-x); });
  auto hfun = [](double x) { return std::cos(x / 3.0); };
  DensityVector Pf2 = P2.apply_density(f2);
  double lhs2 = 0, rhs2 = 0;
  for (int j = 0; j < g2.n_cells(); ++j) lhs2 += Pf2.values[j] * hfun(g2.center(j)) * g2.dx();
  for (int i = 0; i < g2.n_cells(); ++i)
    rhs2 += f2.values[i] * hfun(aff.apply(g2.center(i))) * g2.dx();
  CHECK(lhs2 == Catch::Approx(rhs2).margin(5 * g2.dx()));
}

TEST_CASE("discretized jump rows are stochastic") {
  Grid g(8.0, 100);
  for (const BoostMap& q :
       {BoostMap::additive(0.73), BoostMap::affine(2.0, 0.1),
        BoostMap::custom_pieces({{0.0, std::numeric_limits<double>::infinity(),
                                  Expr::parse("x+1+0.2*x^2")}})}) {
    FPMatrix P(q, g);
    for (int i = 0; i < g.n_cells(); ++i) {
      INFO(q.describe() << " row " << i);
      CHECK(P.row_sum(i) == Catch::Approx(1.0).epsilon(1e-12));
      for (auto [j, w] : P.row(i)) CHECK(w >= 0.0);
    }
  }
  Grid gb(10.0, 100);
  for (const BoostMap& q : {BoostMap::saturating(10.0, 0.4), canonical_plateau()}) {
    FPMatrix P(q, gb);
    for (int i = 0; i < gb.n_cells(); ++i) {
      INFO(q.describe() << " row " << i);
      CHECK(P.row_sum(i) == Catch::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("integer shift boosts give a shift matrix") {
  Grid g(4.0, 8);  // dx = 0.5
  FPMatrix P(BoostMap::additive(1.0), g);
  for (int i = 0; i < 8; ++i) {
    if (i + 2 < 8) {
      REQUIRE(P.row(i).size() == 1);
      CHECK(P.row(i)[0].first == i + 2);
      CHECK(P.row(i)[0].second == Catch::Approx(1.0));
      CHECK(P.overflow(i) == 0.0);
    } else {
      CHECK(P.row(i).empty());
      CHECK(P.overflow(i) == Catch::Approx(1.0));
    }
  }
}

TEST_CASE("plateau mass is routed to the ceiling cell") {
  Grid g(10.0, 100);
  auto plat = canonical_plateau();
  FPMatrix P(plat, g);
  CHECK(P.plateau_column() == 99);

  // A cell fully inside [K,M] sends everything to the last cell.
  const int i = g.cell_of(8.0);
  REQUIRE(P.row(i).size() == 1);
  CHECK(P.row(i)[0].first == 99);
  CHECK(P.row(i)[0].second == Catch::Approx(1.0));
}

TEST_CASE("discrete image matches a Monte Carlo pushforward") {
  Grid g(4.0, 40);
  auto aff = BoostMap::affine(2.0, 0.1);
  FPMatrix P(aff, g);

  // f0 = uniform[0,1] aligns with cell edges and Q is affine, so the discrete
  // image probabilities are exact and a chi-square comparison is fair.
  DensityVector f0 = DensityVector::uniform(g, 0.0, 1.0);
  DensityVector img = P.apply_density(f0);

  const int N = 1'000'000;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<long> counts(g.n_cells() + 1, 0);
  for (int s = 0; s < N; ++s) ++counts[g.cell_of(aff.apply(unif(rng)))];

  double chi2 = 0;
  int df = 0;
  for (int j = 0; j < g.n_cells(); ++j) {
    const double expect = img.values[j] * g.dx() * N;
    if (expect < 5.0) continue;
    chi2 += (counts[j] - expect) * (counts[j] - expect) / expect;
    ++df;
  }
  INFO("chi2 = " << chi2 << " with df = " << df);
  CHECK(chi2 < df + 4.0 * std::sqrt(2.0 * df));
}

TEST_CASE("image of a smooth density converges at first order") {
  auto aff = BoostMap::affine(1.5, 0.3);
  // Bump far from both grid ends so no tail mass is cut off on either side.
  auto f = [](double x) {
    return std::exp(-(x - 4) * (x - 4)) / std::sqrt(M_PI);
  };
  // Exact image density of f under y = 1.5x + 0.3.
  auto pf = [&](double y) { return f((y - 0.3) / 1.5) / 1.5; };

  auto err = [&](int n) {
    Grid g(12.0, n);
    FPMatrix P(aff, g);
    DensityVector img = P.apply_density(DensityVector::from_function(g, f));
    DensityVector ref = DensityVector::from_function(g, pf);
    double e = 0;
    for (int j = 0; j < n; ++j) e += std::abs(img.values[j] - ref.values[j]);
    return e * g.dx();
  };
  const double e1 = err(200), e2 = err(400);
  INFO("L1 errors " << e1 << " -> " << e2);
  CHECK(e1 / e2 > 1.4);
  CHECK(e1 / e2 < 2.8);
}

TEST_CASE("assumption validation per profile") {
  CHECK(BoostMap::additive(1.0).validate().ok());
  CHECK(BoostMap::affine(2.0, 0.5).validate().ok());
  CHECK(BoostMap::saturating(10.0, 0.4).validate().ok());
  CHECK(canonical_plateau().validate().ok());  // profile BPrime

  // The plateau judged against profile B: the ceiling's preimage has positive
  // measure, which the profile forbids.
  auto judged_b = canonical_plateau().validate(AssumptionProfile::B);
  CHECK_FALSE(judged_b.ok());
  auto* level = judged_b.find("no positive-measure level set");
  REQUIRE(level != nullptr);
  CHECK_FALSE(level->passed);
  CHECK(level->detail.find("positive measure") != std::string::npos);

  auto degenerate = BoostMap::saturating(10.0, 0.0).validate();
  CHECK_FALSE(degenerate.find("Q(x)>x on required region")->passed);
  CHECK_FALSE(degenerate.find("Q(0)>0")->passed);
}

TEST_CASE("construction and domain errors") {
  CHECK_THROWS_AS(BoostMap::additive(0.0), std::invalid_argument);
  CHECK_THROWS_AS(BoostMap::affine(0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(BoostMap::saturating(10.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(BoostMap::plateau(11.0, 10.0, Expr::parse("x+1")),
                  std::invalid_argument);
  CHECK_THROWS_AS(BoostMap::saturating(10.0, 0.5).apply(11.0), std::invalid_argument);
  // Pieces with a gap do not tile the space.
  CHECK_THROWS_AS(BoostMap::custom_pieces({{1.0, 2.0, Expr::parse("x+1")}}),
                  std::invalid_argument);
}
