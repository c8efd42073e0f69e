#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mechsolve/density.hpp"
#include "mechsolve/errors.hpp"
#include "mechsolve/model.hpp"
#include "mechsolve/quadrature.hpp"

namespace mechsolve {

/// The computed optimal mechanism: the two value cutoffs, the power-model
/// alpha cutoff, and solve diagnostics.
struct MechanismSolution {
  double u_bot = 0.0;
  double u_top = 0.0;
  std::optional<double> alpha_opt;  // power model only
  double k_low = 0.0;
  double objective = 0.0;
  double budget_residual = 0.0;
  double eps = 1e-8;
  ProblemInstance instance;
};

enum class Region { ExclusiveNoInspection, InspectionBand, Sharing };

inline std::string to_string(Region r) {
  switch (r) {
    case Region::ExclusiveNoInspection: return "exclusive";
    case Region::InspectionBand: return "inspect";
    case Region::Sharing: return "share";
  }
  return "?";
}

/// Outcome of running the mechanism on a report pair.
struct MechanismOutcome {
  bool inspected = false;
  bool exclusive = false;
  double payment = 0.0;
};

namespace detail {

/// Per-instance evaluation context: clamped cdf access plus a cumulative
/// first-moment table for f, so every inner alpha-integral in the knapsack
/// formulations reduces to closed form in F and Mf.
class SolverContext {
 public:
  explicit SolverContext(const ProblemInstance& inst)
      : inst_(&inst),
        abar_(inst.f.support_hi()),
        ubar_(inst.g.support_hi()),
        umax_(std::min(inst.v, inst.g.support_hi())),
        vcap_(std::min(inst.v, inst.f.support_hi())) {
    build_moment_table();
  }

  const ProblemInstance& inst() const { return *inst_; }
  double abar() const { return abar_; }
  double umax() const { return umax_; }

  double Ff(double x) const { return inst_->f.cdf(std::clamp(x, 0.0, abar_)); }
  double Gg(double x) const { return inst_->g.cdf(std::clamp(x, 0.0, ubar_)); }
  double gpdf(double u) const { return inst_->g.pdf(u); }
  double d(double u) const { return survival_mass_d(inst_->g, u); }

  /// Mf(x) = int_0^x alpha f(alpha) d alpha (x clamped to f's support).
  double Mf(double x) const {
    x = std::clamp(x, 0.0, abar_);
    const int k = std::min(static_cast<int>(x / mf_h_), mf_n_ - 1);
    const double x0 = k * mf_h_;
    if (x <= x0) return mf_cum_[k];
    return mf_cum_[k] + moment_cell(x0, x);
  }

  /// int_{clamp(cut)}^{abar} f(alpha) (min(v, t(alpha,u)) - u) d alpha.
  double band_inner_objective(double cut, double u) const {
    const double v = inst_->v;
    const double cl = std::clamp(cut, 0.0, abar_);
    if (inst_->model == InterferenceModel::Independent) {
      if (cl <= vcap_) {
        return (Mf(vcap_) - Mf(cl)) + v * (1.0 - Ff(vcap_)) - u * (1.0 - Ff(cl));
      }
      return (v - u) * (1.0 - Ff(cl));
    }
    if (u <= 0.0) return 0.0;
    const double ca = std::clamp(v / u, 0.0, abar_);  // t = v crossing
    const double tail = cl >= ca ? v * (1.0 - Ff(cl))
                                 : u * (Mf(ca) - Mf(cl)) + v * (1.0 - Ff(ca));
    return tail - u * (1.0 - Ff(cl));
  }

  /// E_f[min(v, t(alpha, u))].
  double expected_min_v_t(double u) const {
    const double v = inst_->v;
    if (inst_->model == InterferenceModel::Independent) {
      return Mf(vcap_) + v * (1.0 - Ff(vcap_));
    }
    if (u <= 0.0) return 0.0;
    const double ca = std::clamp(v / u, 0.0, abar_);
    return u * Mf(ca) + v * (1.0 - Ff(ca));
  }

  /// V1: exclusive-by-default block of the objective.
  double V1(double b) const {
    if (b <= 0.0) return 0.0;
    const auto integrand = [&](double u) { return gpdf(u) * (expected_min_v_t(u) - u); };
    const double kink =
        inst_->model == InterferenceModel::Power ? inst_->v / abar_ : -1.0;
    return integrate_split(integrand, 0.0, b, {kink}, inst_->quad);
  }

  /// W1 = int_0^b d(u) du; d is the exact derivative of u (1 - G(u)).
  double W1(double b) const { return b * (1.0 - Gg(b)); }

  /// Band integral of (d - K g)(u) (1 - F(cut(u))) between b and z.
  template <typename CutFn>
  double band_budget(double b, double z, const CutFn& cut,
                     std::initializer_list<double> kinks) const {
    if (z <= b) return 0.0;
    const auto integrand = [&](double u) {
      return (d(u) - inst_->K * gpdf(u)) * (1.0 - Ff(cut(u)));
    };
    return integrate_split(integrand, b, z, kinks, inst_->quad);
  }

  /// Band integral of g(u) * band_inner_objective(cut(u), u).
  template <typename CutFn>
  double band_objective(double b, double z, const CutFn& cut,
                        std::initializer_list<double> kinks) const {
    if (z <= b) return 0.0;
    const auto integrand = [&](double u) {
      return gpdf(u) * band_inner_objective(cut(u), u);
    };
    return integrate_split(integrand, b, z, kinks, inst_->quad);
  }

  // Exact band integral of (d - K g): both terms have closed antiderivatives.
  double band_dk(double b, double z) const {
    return z * (1.0 - Gg(z)) - b * (1.0 - Gg(b)) - inst_->K * (Gg(z) - Gg(b));
  }

  // ---- independent interference ----

  double residual_independent(double b, double z) const {
    const auto cut = [&](double u) { return u + inst_->v - z; };
    return W1(b) + band_budget(b, z, cut, {abar_ - inst_->v + z});
  }

  double objective_independent(double b, double z) const {
    const auto cut = [&](double u) { return u + inst_->v - z; };
    return V1(b) + band_objective(b, z, cut, {abar_ - inst_->v + z});
  }

  // ---- power interference ----

  double alpha_opt_power(double b, double z) const {
    const double C0 = W1(b);
    const double B = band_dk(b, z);
    if (std::abs(B) < 1e-15 * (1.0 + std::abs(C0))) return 1.0;
    const double C1 = C0 + B * (1.0 - Ff(1.0));
    if (C1 >= 0.0) return 1.0;
    const double arg = std::clamp(1.0 + C0 / B, 0.0, 1.0);
    return std::clamp(inst_->f.inverse_cdf(arg), 1.0, abar_);
  }

  double residual_power(double b, double z, double x) const {
    return W1(b) + band_dk(b, z) * (1.0 - Ff(x));
  }

  double objective_power(double b, double z, double x) const {
    if (z <= b) return V1(b);
    const double v = inst_->v;
    const double Fx = Ff(x);
    const double Mx = Mf(x);
    const auto integrand = [&](double u) {
      if (u <= 0.0) return 0.0;
      const double ca = std::clamp(v / u, 0.0, abar_);
      const double tail = x >= ca ? v * (1.0 - Ff(std::max(x, ca)))
                                  : u * (Mf(ca) - Mx) + v * (1.0 - Ff(ca));
      return gpdf(u) * (tail - u * (1.0 - Fx));
    };
    // Kinks where v/u crosses abar and where it crosses the alpha cutoff.
    return V1(b) + integrate_split(integrand, b, z, {v / abar_, x > 0.0 ? v / x : -1.0},
                                   inst_->quad);
  }

 private:
  void build_moment_table() {
    mf_n_ = 4096;
    mf_h_ = abar_ / mf_n_;
    mf_cum_.assign(mf_n_ + 1, 0.0);
    for (int k = 0; k < mf_n_; ++k) {
      // last edge pinned to abar_ so roundoff cannot leave the support
      mf_cum_[k + 1] =
          mf_cum_[k] + moment_cell(k * mf_h_, k + 1 == mf_n_ ? abar_ : (k + 1) * mf_h_);
    }
  }
  double moment_cell(double a, double b) const {
    const double m = 0.5 * (a + b);
    return (b - a) / 6.0 *
           (a * inst_->f.pdf(a) + 4.0 * m * inst_->f.pdf(m) + b * inst_->f.pdf(b));
  }

  const ProblemInstance* inst_;
  double abar_, ubar_, umax_, vcap_;
  int mf_n_ = 0;
  double mf_h_ = 1.0;
  std::vector<double> mf_cum_;
};

/// Golden-section maximizer with an iteration count fixed by eps, so results
/// are bit-identical across runs.
template <typename F>
double golden_max(const F& fn, double lo, double hi, double eps) {
  if (!(hi > lo)) return lo;
  const double gr = 0.6180339887498949;
  const int iters = std::min(
      200, static_cast<int>(std::ceil(std::log((hi - lo) / std::max(eps, 1e-15)) /
                                      std::log(1.0 / gr))) +
               1);
  double c = hi - gr * (hi - lo);
  double d = lo + gr * (hi - lo);
  double fc = fn(c);
  double fd = fn(d);
  for (int i = 0; i < iters; ++i) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = fn(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = fn(d);
    }
  }
  return 0.5 * (lo + hi);
}

inline bool unimodal_samples(const std::vector<double>& y) {
  double scale = 0.0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * (scale + 1.0);
  bool falling = false;
  for (std::size_t i = 0; i + 1 < y.size(); ++i) {
    const double step = y[i + 1] - y[i];
    if (step < -tol) falling = true;
    else if (step > tol && falling) return false;
  }
  return true;
}

/// Deterministic 1-D maximizer: coarse scan, then golden-section either on
/// the full interval (scan looked unimodal) or locally around the best sample.
template <typename F>
double scan_golden_max(const F& fn, double lo, double hi, int n_scan, double eps) {
  if (!(hi > lo)) return lo;
  std::vector<double> ys(n_scan + 1);
  std::size_t best = 0;
  for (int i = 0; i <= n_scan; ++i) {
    // endpoints taken exactly so no sample exceeds [lo, hi] by roundoff
    const double x =
        i == n_scan ? hi : lo + (hi - lo) * static_cast<double>(i) / n_scan;
    ys[i] = fn(x);
    if (ys[i] > ys[best]) best = i;
  }
  if (unimodal_samples(ys)) return golden_max(fn, lo, hi, eps);
  const double h = (hi - lo) / n_scan;
  const double a = std::max(lo, lo + (static_cast<double>(best) - 1.0) * h);
  const double b = std::min(hi, lo + (static_cast<double>(best) + 1.0) * h);
  return golden_max(fn, a, b, eps);
}

}  // namespace detail

/// The inspection-cost threshold above which the budget binds at the optimum:
/// the quotient of int_0^v (1 - F(alpha*(u))) d(u) du over
/// int_0^v (1 - F(alpha*(u))) g(u) du, with the range clamped at u_bar.
inline double k_low(const ProblemInstance& inst) {
  const double umax = std::min(inst.v, inst.g.support_hi());
  const double abar = inst.f.support_hi();
  const double floor = 1e-12;
  if (umax <= 0.0) throw DegenerateDenominatorError("k_low: empty integration range");
  if (inst.model == InterferenceModel::Power) {
    const double w = 1.0 - inst.f.cdf(std::clamp(1.0, 0.0, abar));
    const double den = w * inst.g.cdf(umax);
    if (den <= floor) {
      throw DegenerateDenominatorError("k_low: denominator vanishes (no mass above alpha*)");
    }
    return w * umax * (1.0 - inst.g.cdf(umax)) / den;
  }
  const auto weight = [&](double u) { return 1.0 - inst.f.cdf(std::clamp(u, 0.0, abar)); };
  const double num = integrate_split(
      [&](double u) { return weight(u) * survival_mass_d(inst.g, u); }, 0.0, umax, {abar},
      inst.quad);
  const double den = integrate_split(
      [&](double u) { return weight(u) * inst.g.pdf(u); }, 0.0, umax, {abar}, inst.quad);
  if (den <= floor) {
    throw DegenerateDenominatorError("k_low: denominator vanishes (no mass above alpha*)");
  }
  return num / den;
}

/// Budget-constraint left side with the K-term folded in:
/// W1(u_bot) + int_band (d - K g)(u) (1 - F(alpha_cut(u))) du.
/// `kinks` may list u-points where alpha_cut has kinks.
inline double budget_residual(const ProblemInstance& inst, double u_bot, double u_top,
                              const std::function<double(double)>& alpha_cut,
                              std::initializer_list<double> kinks = {}) {
  detail::SolverContext ctx(inst);
  return ctx.W1(u_bot) + ctx.band_budget(u_bot, u_top, alpha_cut, kinks);
}

/// Knapsack objective V1(u_bot) + V2(u_bot, u_top) for a given band cut.
inline double objective_value(const ProblemInstance& inst, double u_bot, double u_top,
                              const std::function<double(double)>& alpha_cut,
                              std::initializer_list<double> kinks = {}) {
  detail::SolverContext ctx(inst);
  return ctx.V1(u_bot) + ctx.band_objective(u_bot, u_top, alpha_cut, kinks);
}

/// Power-model alpha cutoff for a fixed pair of value cutoffs: 1 when the
/// budget at cutoff 1 is already covered, otherwise the quantile
/// F^{-1}(1 + C0/B) clamped to [1, alpha_bar]. An empty band returns 1.
inline double alpha_opt(const ProblemInstance& inst, double u_bot, double u_top) {
  if (inst.model != InterferenceModel::Power) {
    throw std::invalid_argument("alpha_opt: defined for the power model only");
  }
  detail::SolverContext ctx(inst);
  return ctx.alpha_opt_power(u_bot, u_top);
}

/// Largest z in [u_bot, min(v, u_bar)] with budget_residual(u_bot, z) >= 0,
/// found by bisection to within eps. For the power model the alpha cutoff is
/// recomputed at each candidate z, which keeps the residual non-negative for
/// every z, so the cap min(v, u_bar) is returned.
inline double solve_u_top(const ProblemInstance& inst, double u_bot, double eps) {
  detail::SolverContext ctx(inst);
  const double zmax = ctx.umax();
  const auto residual = [&](double z) {
    if (inst.model == InterferenceModel::Power) {
      return ctx.residual_power(u_bot, z, ctx.alpha_opt_power(u_bot, z));
    }
    return ctx.residual_independent(u_bot, z);
  };
  if (u_bot >= zmax) return zmax;
  if (residual(zmax) >= 0.0) return zmax;
  const double at_bot = residual(u_bot);
  if (at_bot < 0.0) {
    if (at_bot < -1e-9 * (1.0 + std::abs(inst.K))) {
      throw BudgetInfeasibleError("solve_u_top: residual negative at the band's lower edge");
    }
    return u_bot;
  }
  double lo = u_bot, hi = zmax;
  const int iters = std::min(
      200, static_cast<int>(std::ceil(std::log2((hi - lo) / std::max(eps, 1e-15)))) + 1);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) >= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

/// Solves the knapsack reduction: outer search over u_bot of
/// Phi(u_bot) = V1 + V2 with the band's upper edge determined per model
/// (independent: the budget-binding u_top from bisection; power: the
/// objective-maximizing u_top, since the alpha cutoff absorbs the budget).
/// Deterministic: identical inputs and eps give bit-identical output.
inline MechanismSolution solve_mechanism(const ProblemInstance& inst, double eps = 1e-8) {
  inst.validate();
  const auto reg = check_regularity(inst.g, 256);
  if (!reg.decreasing) {
    throw RegularityViolatedError(
        "g fails the decreasing hazard-residual condition: r rises from " +
        std::to_string(reg.r_prev) + " at u=" + std::to_string(reg.u_prev) + " to " +
        std::to_string(reg.r_next) + " at u=" + std::to_string(reg.u_next));
  }
  const double kl = k_low(inst);
  if (inst.K < kl * (1.0 - 1e-12) - 1e-15) {
    throw KBelowThresholdError(kl, inst.K);
  }

  detail::SolverContext ctx(inst);
  const double umax = ctx.umax();
  const bool power = inst.model == InterferenceModel::Power;

  const auto utop_independent = [&](double b) {
    const double zmax = umax;
    if (b >= zmax) return zmax;
    if (ctx.residual_independent(b, zmax) >= 0.0) return zmax;
    if (ctx.residual_independent(b, b) < 0.0) return b;
    double lo = b, hi = zmax;
    const int iters = std::min(
        200, static_cast<int>(std::ceil(std::log2((hi - lo) / std::max(eps, 1e-15)))) + 1);
    for (int i = 0; i < iters; ++i) {
      const double mid = 0.5 * (lo + hi);
      (ctx.residual_independent(b, mid) >= 0.0 ? lo : hi) = mid;
    }
    return lo;
  };
  const auto utop_power = [&](double b) {
    // The budget never pins z here (alpha_opt re-balances it), so pick the
    // objective-maximizing band edge.
    return detail::scan_golden_max(
        [&](double z) { return ctx.objective_power(b, z, ctx.alpha_opt_power(b, z)); }, b,
        umax, 32, eps);
  };
  const auto phi_of = [&](double b) {
    if (power) {
      const double z = utop_power(b);
      return ctx.objective_power(b, z, ctx.alpha_opt_power(b, z));
    }
    return ctx.objective_independent(b, utop_independent(b));
  };

  const double u_bot = detail::scan_golden_max(phi_of, 0.0, umax, 64, eps);
  const double u_top = power ? utop_power(u_bot) : utop_independent(u_bot);

  MechanismSolution sol;
  sol.u_bot = u_bot;
  sol.u_top = std::max(u_top, u_bot);
  sol.k_low = kl;
  sol.eps = eps;
  sol.instance = inst;
  if (power) {
    const double x = ctx.alpha_opt_power(u_bot, sol.u_top);
    sol.alpha_opt = x;
    sol.objective = ctx.objective_power(u_bot, sol.u_top, x);
    sol.budget_residual = ctx.residual_power(u_bot, sol.u_top, x);
  } else {
    sol.objective = ctx.objective_independent(u_bot, sol.u_top);
    sol.budget_residual = ctx.residual_independent(u_bot, sol.u_top);
  }
  return sol;
}

/// Allocation threshold phi(alpha, u): exclusivity is granted iff u <= phi.
inline double phi_threshold(const MechanismSolution& sol, double alpha, double u) {
  const ProblemInstance& inst = sol.instance;
  if (inst.model == InterferenceModel::Independent) {
    if (alpha >= inst.v) return sol.u_top;
    if (alpha <= sol.u_bot + inst.v - sol.u_top) return sol.u_bot;
    return alpha - (inst.v - sol.u_top);
  }
  const double x = sol.alpha_opt.value_or(1.0);
  return std::min(sol.u_top, std::max(sol.u_bot, alpha * u / x));
}

/// Inspection threshold psi(alpha, u): inspection runs iff u_bot < u <= psi
/// (the tie at u = psi is inspected so the pointwise policy stays incentive
/// compatible where the allocation tie-break grants exclusivity).
inline double psi_threshold(const MechanismSolution& sol, double alpha, double u) {
  const ProblemInstance& inst = sol.instance;
  if (inst.model == InterferenceModel::Independent) {
    if (alpha >= inst.v) return sol.u_top;
    if (alpha <= sol.u_bot + inst.v - sol.u_top) return 0.0;
    return alpha - (inst.v - sol.u_top);
  }
  return phi_threshold(sol, alpha, u);
}

/// Maps a report pair to its decision region.
inline Region classify(const MechanismSolution& sol, double alpha, double u) {
  if (u > phi_threshold(sol, alpha, u)) return Region::Sharing;
  if (u > sol.u_bot && u <= psi_threshold(sol, alpha, u)) return Region::InspectionBand;
  return Region::ExclusiveNoInspection;
}

namespace detail {

/// The u-cutoff below which the allocation at this alpha is exclusive.
inline double sharing_cutoff(const MechanismSolution& sol, double alpha) {
  if (sol.instance.model == InterferenceModel::Independent) {
    return phi_threshold(sol, alpha, 0.0);  // phi is u-independent here
  }
  return alpha >= sol.alpha_opt.value_or(1.0) ? sol.u_top : sol.u_bot;
}

}  // namespace detail

/// Entry fee charged to the commercial user at a report pair: zero on the
/// exclusive side, the alpha-wise sharing cutoff on the sharing side (the
/// standard threshold-payment identity int_0^u a dx - u a).
inline double payment(const MechanismSolution& sol, double alpha, double u) {
  const double tau = detail::sharing_cutoff(sol, alpha);
  return u <= tau ? 0.0 : tau;
}

/// Executes the mechanism on reports: inside the inspection band the
/// incumbent's report is audited and exclusivity granted only if it matches
/// the true externality (tolerance 1e-9); lying is punished with sharing.
inline MechanismOutcome run_mechanism(const MechanismSolution& sol, double reported_alpha,
                                      double reported_u, double true_alpha) {
  MechanismOutcome out;
  out.payment = payment(sol, reported_alpha, reported_u);
  switch (classify(sol, reported_alpha, reported_u)) {
    case Region::InspectionBand:
      out.inspected = true;
      out.exclusive = std::abs(true_alpha - reported_alpha) <= 1e-9;
      break;
    case Region::ExclusiveNoInspection:
      out.exclusive = true;
      break;
    case Region::Sharing:
      break;
  }
  return out;
}

/// The limiting single cutoff as inspection becomes infinitely costly.
/// Independent: the direct maximizer of I(z) = G(z) (v(1-F(v)) + E[t 1{t<v}])
/// - int_0^z u g du. Power with uniform priors and alpha_bar >= 2: the closed
/// form (v/2)(1 + sqrt(1 - 2/alpha_bar)); otherwise a numeric 1-D search on
/// the K = infinity objective.
inline double u_infinity(const ProblemInstance& inst, bool allow_numeric_fallback = true) {
  detail::SolverContext ctx(inst);
  const double umax = ctx.umax();
  if (inst.model == InterferenceModel::Independent) {
    const double m = inst.v * (1.0 - ctx.Ff(inst.v)) + ctx.Mf(inst.v);
    const auto big_i = [&](double z) {
      const double a_z = integrate([&](double u) { return u * ctx.gpdf(u); }, 0.0, z, inst.quad);
      return ctx.Gg(z) * m - a_z;
    };
    return detail::scan_golden_max(big_i, 0.0, umax, 256, 1e-10);
  }
  const bool uniform_priors = inst.f.kind() == DensityKind::Uniform &&
                              inst.g.kind() == DensityKind::Uniform;
  if (uniform_priors && inst.f.support_hi() >= 2.0) {
    return 0.5 * inst.v * (1.0 + std::sqrt(1.0 - 2.0 / inst.f.support_hi()));
  }
  if (!allow_numeric_fallback) {
    throw Error("u_infinity: closed form needs uniform priors with alpha_bar >= 2");
  }
  const auto big_j = [&](double z) { return ctx.V1(z); };
  return detail::scan_golden_max(big_j, 0.0, umax, 256, 1e-10);
}

}  // namespace mechsolve
