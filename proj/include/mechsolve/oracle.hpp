#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "mechsolve/density.hpp"
#include "mechsolve/errors.hpp"
#include "mechsolve/model.hpp"
#include "mechsolve/solver.hpp"

// Brute-force verification: exhaustive search over the two-cutoff threshold
// family and discrete constraint checking. Everything here integrates by
// composite Simpson on fixed grids so the error budget is analyzable and
// independent of the solver's adaptive quadrature and search.

namespace mechsolve {

struct GridSpec {
  int n_alpha = 400;
  int n_u = 400;
};

struct OracleResult {
  double best_u_bot = 0.0;
  double best_u_top = 0.0;
  std::optional<double> best_alpha_opt;
  double best_objective = 0.0;
  long feasible_count = 0;
};

struct ConstraintViolation {
  double magnitude = 0.0;
  double at_alpha = 0.0;
  double at_u = 0.0;
};

struct ConstraintReport {
  ConstraintViolation ic;              // a(s,u)(1 - c(s,u)) <= a(0,u)
  ConstraintViolation inspect_bound;   // c <= a
  ConstraintViolation u_monotone;      // a non-increasing in u
  ConstraintViolation alpha_monotone;  // a(0,u) <= a(alpha,u)
  double budget_lhs = 0.0;
  double budget_rhs = 0.0;
  double budget_violation = 0.0;
  GridSpec grid;

  double max_violation() const {
    return std::max({ic.magnitude, inspect_bound.magnitude, u_monotone.magnitude,
                     alpha_monotone.magnitude, budget_violation});
  }
};

namespace oracle_detail {

inline void validate_grid(const GridSpec& grid) {
  if (grid.n_alpha < 2 || grid.n_u < 2 || grid.n_alpha > 2048 || grid.n_u > 2048) {
    throw std::invalid_argument("GridSpec: sizes must lie in [2, 2048]");
  }
}

/// Cumulative first moment of f on a fine uniform grid, built with per-cell
/// Simpson (no adaptivity).
class MomentTable {
 public:
  MomentTable(const DensitySpec& f, int n_cells) : f_(&f), n_(std::max(n_cells, 16)) {
    hi_ = f.support_hi();
    h_ = hi_ / n_;
    cum_.assign(n_ + 1, 0.0);
    for (int k = 0; k < n_; ++k) {
      // last edge pinned to hi_ so roundoff cannot leave the support
      cum_[k + 1] = cum_[k] + cell(k * h_, k + 1 == n_ ? hi_ : (k + 1) * h_);
    }
  }
  double operator()(double x) const {
    x = std::clamp(x, 0.0, hi_);
    const int k = std::min(static_cast<int>(x / h_), n_ - 1);
    const double x0 = k * h_;
    return x <= x0 ? cum_[k] : cum_[k] + cell(x0, x);
  }

 private:
  double cell(double a, double b) const {
    const double m = 0.5 * (a + b);
    return (b - a) / 6.0 * (a * f_->pdf(a) + 4.0 * m * f_->pdf(m) + b * f_->pdf(b));
  }
  const DensitySpec* f_;
  int n_;
  double hi_ = 1.0, h_ = 1.0;
  std::vector<double> cum_;
};

/// Composite Simpson over [a, b] with n uniform cells. Cell edges are formed
/// so no evaluation point can land outside [a, b] by roundoff.
template <typename F>
double simpson_segment(const F& fn, double a, double b, int n) {
  if (!(b > a)) return 0.0;
  const double h = (b - a) / n;
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x0 = k == 0 ? a : a + k * h;
    const double x1 = k == n - 1 ? b : a + (k + 1) * h;
    total += h / 6.0 * (fn(x0) + 4.0 * fn(0.5 * (x0 + x1)) + fn(x1));
  }
  return total;
}

struct UGrid {
  // Node positions plus a combined node/midpoint array for per-cell Simpson.
  std::vector<double> nodes;      // n_u entries
  std::vector<double> fine;       // 2 n_u - 1 entries (nodes and midpoints)
  double h = 0.0;
};

inline UGrid make_u_grid(double ubar, int n_u) {
  UGrid g;
  g.h = ubar / (n_u - 1);
  g.nodes.resize(n_u);
  for (int i = 0; i < n_u; ++i) {
    // endpoint pinned: (ubar * i) / (n - 1) can round one ulp past ubar
    g.nodes[i] = i == n_u - 1 ? ubar : ubar * (static_cast<double>(i) / (n_u - 1));
  }
  g.fine.resize(2 * n_u - 1);
  for (int i = 0; i < n_u; ++i) g.fine[2 * i] = g.nodes[i];
  for (int i = 0; i + 1 < n_u; ++i) g.fine[2 * i + 1] = 0.5 * (g.nodes[i] + g.nodes[i + 1]);
  return g;
}

/// Per-cell Simpson prefix sums over values sampled on a UGrid's fine array.
inline std::vector<double> prefix_cells(const UGrid& grid, const std::vector<double>& vals) {
  const std::size_t n = grid.nodes.size();
  std::vector<double> pref(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double cell = grid.h / 6.0 *
                        (vals[2 * i] + 4.0 * vals[2 * i + 1] + vals[2 * i + 2]);
    pref[i + 1] = pref[i] + cell;
  }
  return pref;
}

struct Candidate {
  double objective = -1e300;
  double u_bot = 0.0;
  double u_top = 0.0;
  double alpha_opt = 1.0;
  bool valid = false;
};

inline bool better(double obj, double b, double z, const Candidate& cur) {
  if (!cur.valid) return true;
  if (obj != cur.objective) return obj > cur.objective;
  if (b != cur.u_bot) return b < cur.u_bot;
  return z > cur.u_top;
}

}  // namespace oracle_detail

/// Exhaustive search over all grid pairs u_bot <= u_top <= min(v, u_bar) of
/// the threshold family, with the power-model alpha cutoff computed per pair.
/// Deterministic; returns the feasible objective maximizer.
inline OracleResult grid_solve(const ProblemInstance& inst, const GridSpec& grid) {
  using namespace oracle_detail;
  validate_grid(grid);
  inst.validate();

  const double v = inst.v;
  const double K = inst.K;
  const double abar = inst.f.support_hi();
  const double ubar = inst.g.support_hi();
  const double vcap = std::min(v, abar);
  const double umax = std::min(v, ubar);
  const bool power = inst.model == InterferenceModel::Power;

  const UGrid ug = make_u_grid(ubar, grid.n_u);
  const MomentTable Mf(inst.f, 4 * grid.n_alpha);
  const auto Ff = [&](double x) { return inst.f.cdf(std::clamp(x, 0.0, abar)); };

  // Largest node index usable as a cutoff.
  int imax = 0;
  while (imax + 1 < grid.n_u && ug.nodes[imax + 1] <= umax * (1.0 + 1e-12)) ++imax;

  const std::size_t nf = ug.fine.size();
  std::vector<double> gv(nf), dv(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    gv[i] = inst.g.pdf(ug.fine[i]);
    dv[i] = survival_mass_d(inst.g, ug.fine[i]);
  }

  // Grid feasibility slack: half a cell times the residual's u-Lipschitz
  // bound, so the admissible u_top is the grid point nearest the binding
  // root rather than the one just below it.
  double res_slope = 0.0;
  for (std::size_t i = 0; i < nf; ++i) {
    res_slope = std::max(res_slope, std::abs(dv[i] - K * gv[i]));
  }
  const double feas_tol = -std::max(1e-9, 0.5 * ug.h * res_slope);

  Candidate best;
  long feasible = 0;

  if (!power) {
    const double em = Mf(vcap) + v * (1.0 - Ff(vcap));
    std::vector<double> v1i(nf), w1i(nf);
    for (std::size_t i = 0; i < nf; ++i) {
      v1i[i] = gv[i] * (em - ug.fine[i]);
      w1i[i] = dv[i];
    }
    const auto V1 = prefix_cells(ug, v1i);
    const auto W1 = prefix_cells(ug, w1i);

    // inner objective integral from cut to abar, closed in F and Mf
    const auto inner_obj = [&](double cut, double u) {
      const double cl = std::clamp(cut, 0.0, abar);
      if (cl <= vcap) return (Mf(vcap) - Mf(cl)) + v * (1.0 - Ff(vcap)) - u * (1.0 - Ff(cl));
      return (v - u) * (1.0 - Ff(cl));
    };

    std::vector<double> ov(nf), bv(nf);
    for (int jt = 0; jt <= imax; ++jt) {
      const double z = ug.nodes[jt];
      const std::size_t top = 2 * static_cast<std::size_t>(jt);
      for (std::size_t i = 0; i <= top; ++i) {
        const double u = ug.fine[i];
        const double cut = u + v - z;
        ov[i] = gv[i] * inner_obj(cut, u);
        bv[i] = (dv[i] - K * gv[i]) * (1.0 - Ff(std::clamp(cut, 0.0, abar)));
      }
      // prefix over cells 0..jt-1 only
      double pobj = 0.0, pbud = 0.0;
      std::vector<double> Pobj(jt + 1, 0.0), Pbud(jt + 1, 0.0);
      for (int i = 0; i < jt; ++i) {
        pobj += ug.h / 6.0 * (ov[2 * i] + 4.0 * ov[2 * i + 1] + ov[2 * i + 2]);
        pbud += ug.h / 6.0 * (bv[2 * i] + 4.0 * bv[2 * i + 1] + bv[2 * i + 2]);
        Pobj[i + 1] = pobj;
        Pbud[i + 1] = pbud;
      }
      for (int jb = 0; jb <= jt; ++jb) {
        const double res = W1[jb] + (Pbud[jt] - Pbud[jb]);
        if (res < feas_tol) continue;
        ++feasible;
        const double obj = V1[jb] + (Pobj[jt] - Pobj[jb]);
        if (better(obj, ug.nodes[jb], z, best)) {
          best = {obj, ug.nodes[jb], z, 1.0, true};
        }
      }
    }
  } else {
    // Per-u constants: the t = v crossing and its F / Mf values.
    std::vector<double> ca(nf), Fca(nf), Mca(nf), v1i(nf), dki(nf);
    for (std::size_t i = 0; i < nf; ++i) {
      const double u = ug.fine[i];
      ca[i] = u > 0.0 ? std::clamp(v / u, 0.0, abar) : abar;
      Fca[i] = Ff(ca[i]);
      Mca[i] = Mf(ca[i]);
      const double emu = u > 0.0 ? u * Mca[i] + v * (1.0 - Fca[i]) : 0.0;
      v1i[i] = gv[i] * (emu - u);
      dki[i] = dv[i] - K * gv[i];
    }
    const auto V1 = prefix_cells(ug, v1i);
    const auto D = prefix_cells(ug, dv);    // C0 prefix
    const auto DK = prefix_cells(ug, dki);  // B prefix
    const double F1 = Ff(1.0);

    std::vector<double> ov(nf);
    for (int jb = 0; jb <= imax; ++jb) {
      const double b = ug.nodes[jb];
      const double C0 = D[jb];
      for (int jt = jb; jt <= imax; ++jt) {
        const double z = ug.nodes[jt];
        const double B = DK[jt] - DK[jb];
        double x = 1.0;
        if (std::abs(B) >= 1e-15 * (1.0 + std::abs(C0))) {
          const double C1 = C0 + B * (1.0 - F1);
          if (C1 < 0.0) {
            x = std::clamp(inst.f.inverse_cdf(std::clamp(1.0 + C0 / B, 0.0, 1.0)), 1.0, abar);
          }
        }
        const double res = C0 + B * (1.0 - Ff(x));
        if (res < feas_tol) continue;
        ++feasible;
        const double Fx = Ff(x);
        const double Mx = Mf(x);
        double band = 0.0;
        if (jt > jb) {
          const std::size_t i0 = 2 * static_cast<std::size_t>(jb);
          const std::size_t i1 = 2 * static_cast<std::size_t>(jt);
          for (std::size_t i = i0; i <= i1; ++i) {
            const double u = ug.fine[i];
            const double tail = x >= ca[i] ? v * (1.0 - Fx)
                                           : u * (Mca[i] - Mx) + v * (1.0 - Fca[i]);
            ov[i] = gv[i] * (tail - u * (1.0 - Fx));
          }
          for (std::size_t i = i0; i < i1; i += 2) {
            band += ug.h / 6.0 * (ov[i] + 4.0 * ov[i + 1] + ov[i + 2]);
          }
        }
        const double obj = V1[jb] + band;
        if (better(obj, b, z, best)) best = {obj, b, z, x, true};
      }
    }
  }

  if (feasible == 0) throw NoFeasiblePairError("grid_solve: no pair satisfies the budget");
  OracleResult out;
  out.best_u_bot = best.u_bot;
  out.best_u_top = best.u_top;
  out.best_objective = best.objective;
  out.feasible_count = feasible;
  if (power) out.best_alpha_opt = best.alpha_opt;
  return out;
}

/// Discrete constraint check for an arbitrary binary policy (a, c) given as
/// predicates over (alpha, u). The budget sides are evaluated by plain 2-D
/// composite Simpson, so this is meant for coarse/negative checks; the
/// threshold-policy overload below is the precise one.
inline ConstraintReport evaluate_policy_constraints(
    const ProblemInstance& inst, const std::function<bool(double, double)>& a_fn,
    const std::function<bool(double, double)>& c_fn, const GridSpec& grid) {
  using namespace oracle_detail;
  validate_grid(grid);
  const double abar = inst.f.support_hi();
  const double ubar = inst.g.support_hi();
  ConstraintReport rep;
  rep.grid = grid;

  const auto alpha_at = [&](int i) {
    return i == grid.n_alpha - 1 ? abar : abar * (static_cast<double>(i) / (grid.n_alpha - 1));
  };
  const auto u_at = [&](int j) {
    return j == grid.n_u - 1 ? ubar : ubar * (static_cast<double>(j) / (grid.n_u - 1));
  };

  const auto bump = [](ConstraintViolation& cv, double mag, double a, double u) {
    if (mag > cv.magnitude) cv = {mag, a, u};
  };

  for (int j = 0; j < grid.n_u; ++j) {
    const double u = u_at(j);
    const bool a0 = a_fn(0.0, u);
    for (int i = 0; i < grid.n_alpha; ++i) {
      const double al = alpha_at(i);
      const bool a = a_fn(al, u);
      const bool c = c_fn(al, u);
      bump(rep.ic, (a && !c ? 1.0 : 0.0) - (a0 ? 1.0 : 0.0), al, u);
      bump(rep.inspect_bound, (c ? 1.0 : 0.0) - (a ? 1.0 : 0.0), al, u);
      bump(rep.alpha_monotone, (a0 ? 1.0 : 0.0) - (a ? 1.0 : 0.0), al, u);
      if (j + 1 < grid.n_u) {
        const bool a_up = a_fn(al, u_at(j + 1));
        bump(rep.u_monotone, (a_up ? 1.0 : 0.0) - (a ? 1.0 : 0.0), al, u);
      }
    }
  }

  const auto lhs_inner = [&](double u) {
    const double du = survival_mass_d(inst.g, u);
    return simpson_segment(
        [&](double al) { return inst.f.pdf(al) * (a_fn(al, u) ? du : 0.0); }, 0.0, abar,
        grid.n_alpha);
  };
  const auto rhs_inner = [&](double u) {
    const double gu = inst.g.pdf(u);
    return simpson_segment(
        [&](double al) { return inst.f.pdf(al) * (c_fn(al, u) ? inst.K * gu : 0.0); }, 0.0,
        abar, grid.n_alpha);
  };
  rep.budget_lhs = simpson_segment(lhs_inner, 0.0, ubar, grid.n_u);
  rep.budget_rhs = simpson_segment(rhs_inner, 0.0, ubar, grid.n_u);
  rep.budget_violation = std::max(0.0, rep.budget_rhs - rep.budget_lhs);
  return rep;
}

/// Constraint check for a solved threshold mechanism. Pointwise constraints
/// are evaluated on the full grid; the budget identity is integrated with the
/// band edges split out exactly, so a valid solution reports violations at
/// quadrature-noise level.
inline ConstraintReport check_constraints(const ProblemInstance& inst,
                                          const MechanismSolution& sol,
                                          const GridSpec& grid) {
  using namespace oracle_detail;
  validate_grid(grid);
  const double abar = inst.f.support_hi();
  const double ubar = inst.g.support_hi();
  const double v = inst.v;
  const double K = inst.K;

  const auto a_fn = [&](double al, double u) { return u <= phi_threshold(sol, al, u); };
  const auto c_fn = [&](double al, double u) {
    return u > sol.u_bot && u <= psi_threshold(sol, al, u);
  };
  ConstraintReport rep =
      evaluate_policy_constraints(inst, a_fn, c_fn, grid);

  // Budget, redone precisely for the threshold family.
  const auto Ff = [&](double x) { return inst.f.cdf(std::clamp(x, 0.0, abar)); };
  const double b = sol.u_bot;
  const double z = std::min(sol.u_top, ubar);
  const double lhs_default = simpson_segment(
      [&](double u) { return survival_mass_d(inst.g, u); }, 0.0, std::min(b, ubar), grid.n_u);
  double lhs_band = 0.0, rhs_band = 0.0;
  if (z > b) {
    const auto cut = [&](double u) {
      return inst.model == InterferenceModel::Independent
                 ? std::clamp(u + v - sol.u_top, 0.0, abar)
                 : std::clamp(sol.alpha_opt.value_or(1.0), 0.0, abar);
    };
    // split where the independent cut leaves f's support
    const double kink = std::clamp(abar - v + sol.u_top, b, z);
    for (const auto& [s0, s1] : {std::pair{b, kink}, std::pair{kink, z}}) {
      if (s1 <= s0) continue;
      lhs_band += simpson_segment(
          [&](double u) { return survival_mass_d(inst.g, u) * (1.0 - Ff(cut(u))); }, s0, s1,
          grid.n_u);
      rhs_band += simpson_segment(
          [&](double u) { return K * inst.g.pdf(u) * (1.0 - Ff(cut(u))); }, s0, s1, grid.n_u);
    }
  }
  rep.budget_lhs = lhs_default + lhs_band;
  rep.budget_rhs = rhs_band;
  const double residual = rep.budget_lhs - rep.budget_rhs;
  // An interior band edge means the budget binds; at the cap min(v, u_bar)
  // (or with no band at all) slack is legitimate.
  const double umax = std::min(v, ubar);
  const bool interior_band = (z - b) > 1e-9 && z < umax - 1e-9;
  rep.budget_violation = interior_band ? std::abs(residual) : std::max(0.0, -residual);
  return rep;
}

}  // namespace mechsolve
