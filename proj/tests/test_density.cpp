#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

#include "mechsolve/density.hpp"

using namespace mechsolve;

namespace {

DensitySpec fig_gauss() { return DensitySpec::truncated_gaussian(0.0, 10.0, 5.0, 7.0); }

// Dip-shaped tabulated density whose hazard residual r(u) rises on the way
// back up: pdf nodes (0,4), (0.5,0.5), (1,4) before normalization.
DensitySpec dip_density() {
  return DensitySpec::tabulated({0.0, 0.5, 1.0}, {4.0, 0.5, 4.0});
}

}  // namespace

TEST_CASE("uniform pdf and cdf are exact") {
  const auto u01 = DensitySpec::uniform(0.0, 1.0);
  const auto u010 = DensitySpec::uniform(0.0, 10.0);
  CHECK(u01.pdf(0.3) == 1.0);
  CHECK(u010.pdf(4.0) == 0.1);
  CHECK(u01.cdf(0.25) == 0.25);
  CHECK(u01.cdf(0.0) == 0.0);
  CHECK(u010.cdf(0.0) == 0.0);
  CHECK(u010.inverse_cdf(0.6) == Catch::Approx(6.0).margin(1e-12));
  CHECK(u010.inverse_cdf(1.0) == 10.0);
}

TEST_CASE("points outside the support are rejected") {
  const auto d = DensitySpec::uniform(0.0, 1.0);
  CHECK_THROWS_AS(d.pdf(-0.1), OutOfSupportError);
  CHECK_THROWS_AS(d.cdf(1.1), OutOfSupportError);
  CHECK_THROWS_AS(d.inverse_cdf(1.5), OutOfRangeError);
  CHECK_THROWS_AS(d.inverse_cdf(-0.1), OutOfRangeError);
}

TEST_CASE("truncated gaussian matches a high-resolution renormalization") {
  const auto d = fig_gauss();
  // Independent oracle: normalize the raw normal pdf numerically over [0,10].
  const auto raw = [](double x) { return DensitySpec::std_normal_pdf((x - 5.0) / 7.0) / 7.0; };
  const double mass = integrate(raw, 0.0, 10.0, {1e-13, 60});
  for (double x : {0.0, 2.5, 5.0, 8.0, 10.0}) {
    CHECK(d.pdf(x) == Catch::Approx(raw(x) / mass).epsilon(1e-9));
  }
  CHECK(d.cdf(5.0) == Catch::Approx(0.5).margin(1e-12));  // symmetric truncation
  CHECK(d.inverse_cdf(d.cdf(3.0)) == Catch::Approx(3.0).margin(1e-8));
}

TEST_CASE("every density kind integrates to one") {
  const std::vector<DensitySpec> dists = {
      DensitySpec::uniform(0.0, 1.0), DensitySpec::uniform(0.0, 10.0), fig_gauss(),
      DensitySpec::tabulated({0.0, 1.0, 3.0, 10.0}, {0.2, 1.4, 0.7, 0.1}), dip_density()};
  for (const auto& d : dists) {
    const double mass =
        integrate([&](double x) { return d.pdf(x); }, d.support_lo(), d.support_hi());
    CHECK(mass == Catch::Approx(1.0).margin(1e-9));
    CHECK(d.cdf(d.support_lo()) == Catch::Approx(0.0).margin(1e-12));
    CHECK(d.cdf(d.support_hi()) == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("cdf derivative, monotonicity and round trip", "[property]") {
  std::mt19937 rng(20240817);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  const std::vector<DensitySpec> dists = {
      DensitySpec::uniform(0.0, 2.0), fig_gauss(),
      DensitySpec::truncated_gaussian(0.0, 4.0, 1.0, 0.8),
      DensitySpec::tabulated({0.0, 0.7, 2.0, 4.0, 5.0}, {0.4, 1.1, 0.9, 0.3, 0.6})};
  for (const auto& d : dists) {
    const double lo = d.support_lo(), hi = d.support_hi();
    const double h = 1e-6 * (hi - lo);
    double prev_cdf = 0.0;
    double prev_x = lo;
    for (int i = 0; i < 200; ++i) {
      const double x = lo + (hi - lo) * unit(rng);
      // numerical derivative of the cdf vs the pdf
      const double deriv = (d.cdf(x + h) - d.cdf(x - h)) / (2.0 * h);
      CHECK(deriv == Catch::Approx(d.pdf(x)).margin(1e-4));
      // round trip
      CHECK(std::abs(d.inverse_cdf(d.cdf(x)) - x) <= 1e-8);
      // monotone cdf, exact
      const double cx = d.cdf(std::max(x, prev_x));
      const double cp = d.cdf(std::min(x, prev_x));
      CHECK(cp <= cx);
      prev_cdf = cx;
      prev_x = x;
    }
    (void)prev_cdf;
  }
}

TEST_CASE("survival mass d(u)") {
  const auto u01 = DensitySpec::uniform(0.0, 1.0);
  CHECK(survival_mass_d(u01, 0.3) == Catch::Approx(0.4).margin(1e-12));  // 1 - 2u
  CHECK(survival_mass_d(u01, 0.0) == 1.0);
  CHECK(survival_mass_d(fig_gauss(), 0.0) == Catch::Approx(1.0).margin(1e-12));
  const auto g = fig_gauss();
  CHECK(survival_mass_d(g, 5.0) == Catch::Approx(0.5 - 5.0 * g.pdf(5.0)).margin(1e-12));
}

TEST_CASE("hazard residual r(u) and the r*g = d identity") {
  const auto u01 = DensitySpec::uniform(0.0, 1.0);
  CHECK(hazard_residual_r(u01, 0.3) == Catch::Approx(0.4).margin(1e-12));
  CHECK(hazard_residual_r(u01, 0.5) == Catch::Approx(0.0).margin(1e-12));
  const auto g = fig_gauss();
  CHECK(hazard_residual_r(g, 2.0) ==
        Catch::Approx(survival_mass_d(g, 2.0) / g.pdf(2.0)).margin(1e-12));
  for (const auto& d : {u01, g, dip_density()}) {
    for (double u = 0.05; u < d.support_hi(); u += 0.13 * d.support_hi()) {
      CHECK(hazard_residual_r(d, u) * d.pdf(u) ==
            Catch::Approx(survival_mass_d(d, u)).margin(1e-9));
    }
  }
}

TEST_CASE("vanishing density hits the positivity floor") {
  const auto d = DensitySpec::tabulated({0.0, 1.0}, {1e-13, 1.0});
  CHECK_THROWS_AS(hazard_residual_r(d, 0.0), ZeroDensityError);
}

TEST_CASE("regularity holds for uniform and truncated gaussian priors") {
  CHECK(check_regularity(DensitySpec::uniform(0.0, 1.0), 100).decreasing);
  CHECK(check_regularity(fig_gauss(), 200).decreasing);
}

TEST_CASE("regularity violation is located on a crafted dip density") {
  const auto d = dip_density();
  // Hand values on the descending branch of the dip (raw slope -28/9 after
  // normalization): r(0.25) = 5.875/9 - 0.25, r(0.4) = 4.84/4.8 - 0.4.
  CHECK(hazard_residual_r(d, 0.25) == Catch::Approx(5.875 / 9.0 - 0.25).margin(1e-12));
  CHECK(hazard_residual_r(d, 0.4) == Catch::Approx(4.84 / 4.8 - 0.4).margin(1e-12));
  const auto rep = check_regularity(d, 101);
  REQUIRE_FALSE(rep.decreasing);
  CHECK(rep.r_next > rep.r_prev);
  CHECK(rep.u_prev >= 0.2);
  CHECK(rep.u_next <= 0.55);
}

TEST_CASE("density string syntax") {
  const auto u = parse_density("uniform:0,10");
  CHECK(u.kind() == DensityKind::Uniform);
  CHECK(u.to_string() == "uniform:0,10");
  const auto g = parse_density("gauss:0,10,5,7");
  CHECK(g.kind() == DensityKind::TruncatedGaussian);
  CHECK(g.pdf(5.0) == Catch::Approx(fig_gauss().pdf(5.0)));

  const std::string path = "test_density_table.csv";
  {
    std::ofstream out(path);
    out << "x,pdf\n0,0.5\n1,1.5\n2,0.5\n";
  }
  const auto t = parse_density("table:" + path);
  CHECK(t.kind() == DensityKind::Tabulated);
  CHECK(t.support_hi() == 2.0);
  CHECK(t.to_string() == "table:" + path);
  std::remove(path.c_str());

  CHECK_THROWS(parse_density("gauss:0,10,5"));
  CHECK_THROWS(parse_density("triangle:0,1"));
  CHECK_THROWS(parse_density("uniform:1,1"));
  CHECK_THROWS(parse_density("table:/no/such/file.csv"));
}

TEST_CASE("tabulated construction validation") {
  CHECK_THROWS(DensitySpec::tabulated({0.0, 1.0}, {1.0, -0.5}));
  CHECK_THROWS(DensitySpec::tabulated({0.0, 0.0}, {1.0, 1.0}));
  CHECK_THROWS(DensitySpec::tabulated({0.0}, {1.0}));
  CHECK_THROWS(DensitySpec::truncated_gaussian(0.0, 1.0, 0.0, -1.0));
}
