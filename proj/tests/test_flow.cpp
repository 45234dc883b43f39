#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "titerlab/expr.hpp"
#include "titerlab/flow.hpp"
#include "titerlab/phase_space.hpp"

using titerlab::Expr;
using titerlab::FlowModel;
using titerlab::PhaseSpace;

namespace {

FlowModel slow_custom() {
  // g(x) = -x/(1+x): linear near 0, saturating for large x.
  auto f = FlowModel::custom(Expr::parse("-x/(1+x)"));
  return f;
}

}  // namespace

TEST_CASE("closed-form advance") {
  auto lin = FlowModel::linear_decay(1.0);
  CHECK(lin.advance(2.0, std::log(2.0)) == Catch::Approx(1.0).epsilon(1e-12));

  auto quad = FlowModel::power_decay(1.0, 2.0);
  CHECK(quad.advance(1.0, 1.0) == Catch::Approx(0.5).epsilon(1e-12));

  CHECK(lin.advance(0.0, 5.0) == 0.0);
  CHECK(lin.advance(3.0, 0.0) == 3.0);
}

TEST_CASE("semiflow property") {
  auto lin = FlowModel::linear_decay(0.7);
  auto pow = FlowModel::power_decay(0.5, 1.5);
  for (double x0 : {0.3, 1.0, 6.0}) {
    for (auto [s, t] : {std::pair{0.4, 1.1}, std::pair{2.0, 0.25}}) {
      CHECK(lin.advance(lin.advance(x0, s), t) ==
            Catch::Approx(lin.advance(x0, s + t)).epsilon(1e-9));
      CHECK(pow.advance(pow.advance(x0, s), t) ==
            Catch::Approx(pow.advance(x0, s + t)).epsilon(1e-9));
    }
  }
  auto cus = slow_custom();
  for (double x0 : {0.5, 2.0}) {
    CHECK(cus.advance(cus.advance(x0, 0.8), 0.6) ==
          Catch::Approx(cus.advance(x0, 1.4)).epsilon(1e-6));
  }
}

TEST_CASE("custom advance agrees with a closed form") {
  // The same linear field supplied only through its expression.
  auto cus = FlowModel::custom(Expr::parse("-0.8*x"));
  auto lin = FlowModel::linear_decay(0.8);
  for (double t : {0.1, 1.0, 4.0}) {
    CHECK(cus.advance(3.0, t) == Catch::Approx(lin.advance(3.0, t)).epsilon(1e-7));
  }
}

TEST_CASE("advance is monotone") {
  auto cus = slow_custom();
  CHECK(cus.advance(2.0, 1.0) < cus.advance(2.0, 0.5));
  CHECK(cus.advance(1.0, 1.0) < cus.advance(2.0, 1.0));
}

TEST_CASE("backward flow inverts the forward flow") {
  auto lin = FlowModel::linear_decay(1.3);
  auto pow = FlowModel::power_decay(0.4, 3.0);
  auto cus = slow_custom();
  for (double x0 : {0.2, 1.0, 5.0}) {
    for (double t : {0.3, 1.5}) {
      for (const FlowModel* f : {&lin, &pow, &cus}) {
        const double x = f->advance(x0, t);
        auto back = f->advance_back(x, t);
        REQUIRE(back.has_value());
        CHECK(*back == Catch::Approx(x0).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("backward blow-up is reported, not invented") {
  auto quad = FlowModel::power_decay(1.0, 2.0);
  // Along x' = -x^2 every state reachable at t=1 lies below 1/t = 1.
  CHECK_FALSE(quad.advance_back(2.0, 1.0).has_value());
  CHECK(quad.advance_back(0.5, 1.0).has_value());

  // No admissible start maps onto 2.0 after one time unit.
  for (double y : {1.0, 10.0, 1e4, 1e8}) {
    CHECK(quad.advance(y, 1.0) < 1.0);
  }

  auto lin = FlowModel::linear_decay(1.0);
  lin.set_backward_ceiling(100.0);
  CHECK_FALSE(lin.advance_back(1.0, 10.0).has_value());  // e^10 > 100
  CHECK(lin.advance_back(1.0, 2.0).has_value());
}

TEST_CASE("backward flow respects a bounded phase space") {
  auto lin = FlowModel::linear_decay(1.0, PhaseSpace::interval(10.0));
  CHECK_FALSE(lin.advance_back(9.0, 1.0).has_value());  // 9e > 10
  auto ok = lin.advance_back(3.0, 1.0);
  REQUIRE(ok.has_value());
  CHECK(*ok == Catch::Approx(3.0 * std::exp(1.0)));
}

TEST_CASE("spatial derivative of the flow matches finite differences") {
  auto cus = slow_custom();
  cus.set_ode_tolerances(1e-13, 1e-12);
  for (double x : {0.5, 2.0, 8.0}) {
    for (double t : {0.4, 2.0}) {
      const double h = 1e-3 * x;
      const double fd = (cus.advance(x + h, t) - cus.advance(x - h, t)) / (2 * h);
      CHECK(cus.jacobian(x, t) == Catch::Approx(fd).epsilon(1e-5));
    }
  }
  auto lin = FlowModel::linear_decay(2.0);
  CHECK(lin.jacobian(5.0, 1.0) == Catch::Approx(std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("field validation") {
  CHECK(FlowModel::linear_decay(1.0).validate().ok());
  CHECK(FlowModel::power_decay(2.0, 1.5).validate().ok());
  CHECK(slow_custom().validate().ok());

  // Wrong sign: not a decay field.
  auto bad_sign = FlowModel::custom([](double x) { return x; }, [](double) { return 1.0; });
  auto r1 = bad_sign.validate();
  CHECK_FALSE(r1.ok());
  CHECK_FALSE(r1.find("g<0 on (0,.)")->passed);

  // Nonzero at the origin.
  auto bad_origin =
      FlowModel::custom([](double x) { return -x - 1; }, [](double) { return -1.0; });
  CHECK_FALSE(bad_origin.validate().find("g(0)=0")->passed);

  // Derivative inconsistent with the field.
  auto bad_deriv =
      FlowModel::custom([](double x) { return -x; }, [](double) { return -2.0; });
  CHECK_FALSE(bad_deriv.validate().find("g' consistent with finite differences")->passed);
}

TEST_CASE("domain and argument errors") {
  auto lin = FlowModel::linear_decay(1.0);
  CHECK_THROWS_AS(lin.advance(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(lin.advance(1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(lin.jacobian(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(FlowModel::linear_decay(0.0), std::invalid_argument);
  CHECK_THROWS_AS(FlowModel::power_decay(1.0, 1.0), std::invalid_argument);

  auto bounded = FlowModel::linear_decay(1.0, PhaseSpace::interval(10.0));
  CHECK_THROWS_AS(bounded.advance(11.0, 0.0), std::invalid_argument);
}
