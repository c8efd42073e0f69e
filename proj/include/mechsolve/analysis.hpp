#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mechsolve/model.hpp"
#include "mechsolve/oracle.hpp"
#include "mechsolve/solver.hpp"

// Inefficiency-gap curves, parameter sweeps and region rasters: the
// comparative-statics surface of a solved mechanism, exported as data.

namespace mechsolve {

struct GapPoint {
  double u = 0.0;
  double fb_welfare = 0.0;
  double constrained_welfare = 0.0;
  double gap = 0.0;
};

struct SweepRow {
  std::string param_name;
  double param_value = 0.0;
  double u_bot = 0.0;
  double u_top = 0.0;
  std::optional<double> alpha_opt;
  double objective = 0.0;
  std::string error;  // non-empty when this row's solve failed
};

struct RegionRaster {
  std::vector<double> alpha_grid;  // cell centers
  std::vector<double> u_grid;      // cell centers
  std::vector<Region> cells;       // [ai * u_grid.size() + uj]
  Region at(std::size_t ai, std::size_t uj) const { return cells[ai * u_grid.size() + uj]; }
};

enum class SweepParam { V, K };

inline SweepParam sweep_param_from_string(const std::string& s) {
  if (s == "v") return SweepParam::V;
  if (s == "K") return SweepParam::K;
  throw std::invalid_argument("sweep parameter must be 'v' or 'K'");
}

/// E_alpha of welfare expression (1) under the solved allocation at a given u
/// (gross of inspection spend, which enters only through the budget).
inline double constrained_expected_welfare(const ProblemInstance& inst,
                                           const MechanismSolution& sol, double u) {
  const double abar = inst.f.support_hi();
  // a(.,u) is non-decreasing in alpha: sharing below cut, exclusivity above.
  double cut;
  if (u <= sol.u_bot) {
    cut = 0.0;
  } else if (u > sol.u_top) {
    cut = abar;
  } else if (inst.model == InterferenceModel::Independent) {
    cut = std::clamp(u + inst.v - sol.u_top, 0.0, abar);
  } else {
    cut = std::clamp(sol.alpha_opt.value_or(1.0), 0.0, abar);
  }
  const double share = integrate_split(
      [&](double a) { return inst.f.pdf(a) * welfare(inst, false, a, u); }, 0.0, cut,
      {detail::sharing_welfare_kink(inst, u)}, inst.quad);
  return share + inst.v * (1.0 - inst.f.cdf(cut));
}

/// Relative welfare loss versus first best along a u-grid. Values closer than
/// the quadrature noise floor are clipped to an exact zero.
inline std::vector<GapPoint> gap_curve(const ProblemInstance& inst,
                                       const MechanismSolution& sol,
                                       const std::vector<double>& u_grid) {
  const double clip = 10.0 * inst.quad.abs_tol;
  const double denominator_floor = 1e-12;
  std::vector<GapPoint> out;
  out.reserve(u_grid.size());
  for (double u : u_grid) {
    GapPoint p;
    p.u = u;
    p.fb_welfare = first_best_expected_welfare(inst, u);
    p.constrained_welfare = constrained_expected_welfare(inst, sol, u);
    if (p.fb_welfare <= denominator_floor) {
      throw DegenerateDenominatorError("gap_curve: first-best welfare vanished at u=" +
                                       std::to_string(u));
    }
    const double diff = p.fb_welfare - p.constrained_welfare;
    p.gap = std::abs(diff) < clip ? 0.0 : diff / p.fb_welfare;
    out.push_back(p);
  }
  return out;
}

/// Re-solves the instance across parameter values; a failing row records its
/// error instead of aborting the sweep.
inline std::vector<SweepRow> sweep(const ProblemInstance& inst_template, SweepParam param,
                                   const std::vector<double>& values, double eps) {
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (double val : values) {
    SweepRow row;
    row.param_name = param == SweepParam::V ? "v" : "K";
    row.param_value = val;
    ProblemInstance inst = inst_template;
    (param == SweepParam::V ? inst.v : inst.K) = val;
    try {
      const MechanismSolution sol = solve_mechanism(inst, eps);
      row.u_bot = sol.u_bot;
      row.u_top = sol.u_top;
      row.alpha_opt = sol.alpha_opt;
      row.objective = sol.objective;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Region classification at the centers of an n_alpha x n_u cell grid.
inline RegionRaster region_raster(const ProblemInstance& inst, const MechanismSolution& sol,
                                  int n_alpha, int n_u) {
  if (n_alpha < 1 || n_u < 1) throw std::invalid_argument("region_raster: grid must be >= 1");
  RegionRaster r;
  r.alpha_grid.resize(n_alpha);
  r.u_grid.resize(n_u);
  const double abar = inst.f.support_hi();
  const double ubar = inst.g.support_hi();
  for (int i = 0; i < n_alpha; ++i) r.alpha_grid[i] = (i + 0.5) * abar / n_alpha;
  for (int j = 0; j < n_u; ++j) r.u_grid[j] = (j + 0.5) * ubar / n_u;
  r.cells.reserve(static_cast<std::size_t>(n_alpha) * n_u);
  for (int i = 0; i < n_alpha; ++i) {
    for (int j = 0; j < n_u; ++j) {
      r.cells.push_back(classify(sol, r.alpha_grid[i], r.u_grid[j]));
    }
  }
  return r;
}

// ---- CSV export (12 significant digits, LF line endings) ----

namespace detail {

inline std::string csv_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace detail

inline void write_gap_csv(std::ostream& os, const std::vector<GapPoint>& points) {
  os << "u,fb,constrained,gap\n";
  for (const auto& p : points) {
    os << detail::csv_num(p.u) << ',' << detail::csv_num(p.fb_welfare) << ','
       << detail::csv_num(p.constrained_welfare) << ',' << detail::csv_num(p.gap) << '\n';
  }
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "param,value,u_bot,u_top,alpha_opt,objective\n";
  for (const auto& row : rows) {
    os << row.param_name << ',' << detail::csv_num(row.param_value) << ',';
    if (row.error.empty()) {
      os << detail::csv_num(row.u_bot) << ',' << detail::csv_num(row.u_top) << ',';
      if (row.alpha_opt) os << detail::csv_num(*row.alpha_opt);
      os << ',' << detail::csv_num(row.objective);
    } else {
      os << ",,,";
    }
    os << '\n';
  }
}

inline void write_raster_csv(std::ostream& os, const RegionRaster& raster) {
  os << "alpha,u,region\n";
  for (std::size_t i = 0; i < raster.alpha_grid.size(); ++i) {
    for (std::size_t j = 0; j < raster.u_grid.size(); ++j) {
      os << detail::csv_num(raster.alpha_grid[i]) << ',' << detail::csv_num(raster.u_grid[j])
         << ',' << to_string(raster.at(i, j)) << '\n';
    }
  }
}

}  // namespace mechsolve
