#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mechsolve/quadrature.hpp"

using namespace mechsolve;

TEST_CASE("constant and polynomial integrands are exact") {
  CHECK(integrate([](double) { return 1.0; }, 0.0, 1.0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(integrate([](double x) { return x; }, 0.0, 2.0) == Catch::Approx(2.0).margin(1e-12));
  CHECK(integrate([](double x) { return x * x * x; }, -1.0, 1.0) ==
        Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("zero-length interval returns exactly zero") {
  CHECK(integrate([](double x) { return std::exp(x); }, 0.7, 0.7) == 0.0);
}

TEST_CASE("reversed limits are rejected") {
  CHECK_THROWS_AS(integrate([](double) { return 1.0; }, 1.0, 0.0), OutOfRangeError);
}

TEST_CASE("oscillatory integrand converges to the analytic value") {
  const double got = integrate([](double x) { return std::sin(x); }, 0.0, M_PI);
  CHECK(got == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("invalid quadrature configuration is rejected") {
  QuadratureConfig cfg;
  cfg.abs_tol = 0.0;
  CHECK_THROWS(integrate([](double) { return 1.0; }, 0.0, 1.0, cfg));
  cfg.abs_tol = 1e-9;
  cfg.max_subdivisions = 0;
  CHECK_THROWS(integrate([](double) { return 1.0; }, 0.0, 1.0, cfg));
}

TEST_CASE("subdivision budget exhaustion raises") {
  QuadratureConfig cfg;
  cfg.abs_tol = 1e-16;
  cfg.max_subdivisions = 2;
  CHECK_THROWS_AS(integrate([](double x) { return std::sin(50.0 * x * x); }, 0.0, 3.0, cfg),
                  NonconvergentError);
}

TEST_CASE("split integration handles kinked integrands") {
  // |x - 0.3| over [0,1]: exact value 0.09/2 + 0.49/2
  const auto fn = [](double x) { return std::abs(x - 0.3); };
  const double got = integrate_split(fn, 0.0, 1.0, {0.3});
  CHECK(got == Catch::Approx(0.5 * 0.09 + 0.5 * 0.49).margin(1e-12));
  // kinks outside the interval are ignored
  CHECK(integrate_split(fn, 0.4, 1.0, {0.3}) ==
        Catch::Approx(0.5 * (0.49 - 0.01)).margin(1e-12));
}
