#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "titerlab/expr.hpp"

using titerlab::Expr;

TEST_CASE("arithmetic evaluation") {
  CHECK(Expr::parse("2*x+1")(3.0) == Catch::Approx(7.0));
  CHECK(Expr::parse("x^2")(3.0) == Catch::Approx(9.0));
  CHECK(Expr::parse("(1+x)*(1-x)")(2.0) == Catch::Approx(-3.0));
  CHECK(Expr::parse("1/(1+x)")(1.0) == Catch::Approx(0.5));
  CHECK(Expr::parse("-x")(2.0) == Catch::Approx(-2.0));
  CHECK(Expr::parse("3-2-1")(0.0) == Catch::Approx(0.0));
  CHECK(Expr::parse("12/4/3")(0.0) == Catch::Approx(1.0));
  CHECK(Expr::parse("2e-3")(0.0) == Catch::Approx(0.002));
  CHECK(Expr::parse("exp(0)")(0.0) == Catch::Approx(1.0));
  CHECK(Expr::parse("log(exp(2))")(0.0) == Catch::Approx(2.0));
}

TEST_CASE("power is right associative") {
  // x^3^2 = x^(3^2) = x^9
  CHECK(Expr::parse("x^3^2")(2.0) == Catch::Approx(512.0));
}

TEST_CASE("malformed inputs are rejected") {
  CHECK_THROWS_AS(Expr::parse(""), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("x+"), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("foo(x)"), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("(x"), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("x 1"), std::invalid_argument);
}

namespace {

double fd_derivative(const Expr& e, double x) {
  const double h = 1e-6 * std::max(std::abs(x), 1.0);
  return (e(x + h) - e(x - h)) / (2 * h);
}

}  // namespace

TEST_CASE("symbolic derivative matches finite differences") {
  const char* exprs[] = {
      "x^3", "exp(-0.5*x)", "log(x)", "x/(1+x)", "exp(-x^2)", "(2*x+1)^4", "x*log(x)",
  };
  for (const char* s : exprs) {
    const Expr e = Expr::parse(s);
    const Expr d = e.derivative();
    for (double x : {0.5, 1.0, 2.0, 3.7}) {
      const double fd = fd_derivative(e, x);
      const double an = d(x);
      INFO(s << " at x=" << x);
      CHECK(an == Catch::Approx(fd).margin(1e-6).epsilon(1e-6));
    }
  }
}

TEST_CASE("derivative of variable-base variable-exponent power") {
  const Expr e = Expr::parse("x^x");
  const Expr d = e.derivative();
  const double x = 2.0;
  CHECK(d(x) == Catch::Approx(std::pow(x, x) * (std::log(x) + 1.0)));
}

TEST_CASE("text form reparses to the same function") {
  const char* exprs[] = {"2*x+1", "exp(-0.5*x)", "x/(1+x)", "-x^2"};
  for (const char* s : exprs) {
    const Expr e = Expr::parse(s);
    const Expr round = Expr::parse(e.text());
    for (double x : {0.25, 1.0, 4.0}) {
      INFO(s);
      CHECK(round(x) == Catch::Approx(e(x)));
    }
  }
}
