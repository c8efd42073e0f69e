#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "mechsolve/analysis.hpp"

using namespace mechsolve;

namespace {

ProblemInstance uniform_inst(InterferenceModel model, double v, double K) {
  ProblemInstance inst;
  inst.model = model;
  inst.v = v;
  inst.K = K;
  inst.f = DensitySpec::uniform(0.0, model == InterferenceModel::Power ? 2.0 : 1.0);
  inst.g = DensitySpec::uniform(0.0, 1.0);
  return inst;
}

template <typename F>
double riemann(const F& fn, double a, double b, int n = 300000) {
  double sum = 0.0;
  const double h = (b - a) / n;
  for (int i = 0; i < n; ++i) sum += fn(a + (i + 0.5) * h);
  return sum * h;
}

}  // namespace

TEST_CASE("constrained welfare branches") {
  const auto inst = uniform_inst(InterferenceModel::Independent, 0.5, 0.7);
  const auto sol = solve_mechanism(inst, 1e-8);

  // Below u_bot: exclusivity everywhere pays exactly v.
  CHECK(constrained_expected_welfare(inst, sol, 0.5 * sol.u_bot) ==
        Catch::Approx(inst.v).margin(1e-9));

  // Above u_top: sharing everywhere.
  const double u_hi = 0.5 * (sol.u_top + 1.0);
  const double direct = riemann(
      [&](double a) { return inst.f.pdf(a) * (std::max(inst.v - a, 0.0) + u_hi); }, 0.0, 1.0);
  CHECK(constrained_expected_welfare(inst, sol, u_hi) == Catch::Approx(direct).margin(1e-6));

  // Band value against a dense Riemann evaluation of the threshold policy.
  const double u_mid = 0.5 * (sol.u_bot + sol.u_top);
  const double cut = u_mid + inst.v - sol.u_top;
  const double band = riemann(
      [&](double a) {
        const bool excl = a >= cut;
        return inst.f.pdf(a) * (excl ? inst.v : std::max(inst.v - a, 0.0) + u_mid);
      },
      0.0, 1.0);
  CHECK(constrained_expected_welfare(inst, sol, u_mid) == Catch::Approx(band).margin(1e-6));
}

TEST_CASE("band welfare meets first best when the cutoff sits at alpha*") {
  // With u_top = v the band cut u + v - u_top equals alpha*(u) = u.
  const auto inst = uniform_inst(InterferenceModel::Independent, 0.5, 0.7);
  MechanismSolution sol;
  sol.u_bot = 0.1;
  sol.u_top = inst.v;
  sol.instance = inst;
  const double u = 0.3;
  CHECK(constrained_expected_welfare(inst, sol, u) ==
        Catch::Approx(first_best_expected_welfare(inst, u)).margin(1e-9));
}

TEST_CASE("gap curve properties on uniform instances") {
  for (const auto model : {InterferenceModel::Independent, InterferenceModel::Power}) {
    const auto inst = uniform_inst(model, 0.5, model == InterferenceModel::Power ? 0.8 : 0.7);
    const auto sol = solve_mechanism(inst, 1e-8);
    std::vector<double> grid;
    for (double u = 0.0; u <= 1.0 + 1e-12; u += 0.02) grid.push_back(std::min(u, 1.0));
    const auto curve = gap_curve(inst, sol, grid);
    REQUIRE(curve.size() == grid.size());
    bool positive_below_bot = false;
    for (const auto& p : curve) {
      INFO(to_string(model) << " u=" << p.u);
      CHECK(p.gap >= -1e-9);
      if (p.u >= inst.v) CHECK(std::abs(p.gap) <= 1e-9);
      if (p.u < sol.u_bot && p.gap > 0.0) positive_below_bot = true;
      CHECK(p.fb_welfare >= p.constrained_welfare - 1e-8);
    }
    // First best shares below u_bot with positive f-mass here, so the
    // no-inspection region must show a real loss.
    CHECK(positive_below_bot);
  }
}

TEST_CASE("gap vanishes at zero commercial value") {
  const auto inst = uniform_inst(InterferenceModel::Independent, 0.5, 0.7);
  const auto sol = solve_mechanism(inst, 1e-8);
  const auto curve = gap_curve(inst, sol, {0.0});
  CHECK(curve[0].gap == 0.0);
  CHECK(curve[0].fb_welfare == Catch::Approx(inst.v).margin(1e-9));
}

TEST_CASE("sweep rows") {
  const auto inst = uniform_inst(InterferenceModel::Independent, 0.5, 0.7);

  SECTION("single value equals a direct solve") {
    const auto rows = sweep(inst, SweepParam::K, {0.7}, 1e-8);
    REQUIRE(rows.size() == 1);
    const auto sol = solve_mechanism(inst, 1e-8);
    CHECK(rows[0].error.empty());
    CHECK(rows[0].u_bot == sol.u_bot);
    CHECK(rows[0].u_top == sol.u_top);
    CHECK(rows[0].objective == sol.objective);
    CHECK(rows[0].param_name == "K");
  }

  SECTION("failures are recorded per row") {
    const auto rows = sweep(inst, SweepParam::K, {0.7, 0.1}, 1e-8);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].error.empty());
    CHECK_FALSE(rows[1].error.empty());
  }

  SECTION("band width contracts in K") {
    const auto rows = sweep(inst, SweepParam::K, {0.7, 0.9}, 1e-8);
    CHECK(rows[1].u_top - rows[1].u_bot <= rows[0].u_top - rows[0].u_bot + 1e-6);
  }

  SECTION("cutoffs rise in v") {
    const auto rows = sweep(inst, SweepParam::V, {0.4, 0.5}, 1e-8);
    CHECK(rows[0].u_bot <= rows[1].u_bot + 1e-6);
    CHECK(rows[0].u_top <= rows[1].u_top + 1e-6);
  }
}

TEST_CASE("region raster") {
  const auto inst = uniform_inst(InterferenceModel::Independent, 0.5, 0.7);
  const auto sol = solve_mechanism(inst, 1e-8);
  const int n = 80;
  const auto raster = region_raster(inst, sol, n, n);
  REQUIRE(raster.cells.size() == static_cast<std::size_t>(n) * n);

  const double cell_u = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double alpha = raster.alpha_grid[i];
      const double u = raster.u_grid[j];
      const Region r = raster.at(i, j);
      if (u <= sol.u_bot) CHECK(r == Region::ExclusiveNoInspection);
      if (u > sol.u_top) CHECK(r == Region::Sharing);
      if (r == Region::InspectionBand) {
        CHECK(u < alpha - (inst.v - sol.u_top) + 1e-12);
      }
    }
    // The sharing boundary extracted from the raster matches phi within one cell.
    const double alpha = raster.alpha_grid[i];
    double boundary = 0.0;
    for (int j = 0; j < n; ++j) {
      if (raster.at(i, j) != Region::Sharing) boundary = raster.u_grid[j];
    }
    const double phi = phi_threshold(sol, alpha, boundary);
    if (phi > cell_u) CHECK(std::abs(boundary - phi) <= cell_u);
  }
}

TEST_CASE("csv exports carry headers, 12 digits and LF endings") {
  const auto inst = uniform_inst(InterferenceModel::Independent, 0.5, 0.7);
  const auto sol = solve_mechanism(inst, 1e-8);

  std::ostringstream gap_os;
  write_gap_csv(gap_os, gap_curve(inst, sol, {0.0, 1.0 / 3.0}));
  const std::string gap_text = gap_os.str();
  CHECK(gap_text.rfind("u,fb,constrained,gap\n", 0) == 0);
  CHECK(gap_text.find("0.333333333333") != std::string::npos);
  CHECK(gap_text.find('\r') == std::string::npos);

  std::ostringstream sweep_os;
  write_sweep_csv(sweep_os, sweep(inst, SweepParam::K, {0.7, 0.1}, 1e-8));
  const std::string sweep_text = sweep_os.str();
  CHECK(sweep_text.rfind("param,value,u_bot,u_top,alpha_opt,objective\n", 0) == 0);
  CHECK(sweep_text.find("K,0.1,,,,\n") != std::string::npos);  // failed row stays

  std::ostringstream raster_os;
  write_raster_csv(raster_os, region_raster(inst, sol, 8, 8));
  const std::string raster_text = raster_os.str();
  CHECK(raster_text.rfind("alpha,u,region\n", 0) == 0);
  // 8x8 cells + header
  CHECK(std::count(raster_text.begin(), raster_text.end(), '\n') == 65);
  CHECK(raster_text.find("share") != std::string::npos);
  CHECK(raster_text.find("exclusive") != std::string::npos);
}
