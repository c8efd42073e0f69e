#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "mechsolve/density.hpp"
#include "mechsolve/errors.hpp"
#include "mechsolve/quadrature.hpp"

namespace mechsolve {

/// How the entrant's activity maps to the externality t(alpha, u) on the
/// incumbent: Independent => t = alpha, Power => t = alpha * u.
enum class InterferenceModel { Independent, Power };

inline std::string to_string(InterferenceModel m) {
  return m == InterferenceModel::Independent ? "independent" : "power";
}

inline InterferenceModel interference_model_from_string(const std::string& s) {
  if (s == "independent") return InterferenceModel::Independent;
  if (s == "power") return InterferenceModel::Power;
  throw std::invalid_argument("unknown interference model '" + s + "'");
}

/// The full input to the solver: interference technology, the incumbent's
/// exclusive-use value v, the inspection cost K, and the two priors
/// (f on [0, alpha_bar] for the externality, g on [0, u_bar] for the
/// entrant's value).
struct ProblemInstance {
  InterferenceModel model = InterferenceModel::Independent;
  double v = 1.0;
  double K = 0.0;
  DensitySpec f = DensitySpec::uniform(0.0, 1.0);
  DensitySpec g = DensitySpec::uniform(0.0, 1.0);
  QuadratureConfig quad{};

  double alpha_bar() const { return f.support_hi(); }
  double u_bar() const { return g.support_hi(); }

  /// Structural checks. Regularity of g is the solver's job (it owns the
  /// grid resolution); this validates everything cheaper than that.
  void validate() const {
    if (!(v > 0.0)) throw std::invalid_argument("instance: v must be > 0");
    if (!(K >= 0.0)) throw std::invalid_argument("instance: K must be >= 0");
    if (f.support_lo() != 0.0 || g.support_lo() != 0.0) {
      throw std::invalid_argument("instance: both priors must be supported on [0, bar]");
    }
    if (model == InterferenceModel::Power && !(f.support_hi() > 1.0)) {
      throw std::invalid_argument("instance: power interference requires alpha_bar > 1");
    }
  }
};

/// t(alpha, u).
inline double interference(InterferenceModel model, double alpha, double u) {
  return model == InterferenceModel::Independent ? alpha : alpha * u;
}

/// alpha*(u): the smallest alpha at which min(t(alpha,u), v) reaches u.
/// Independent => u itself; Power => 1.
inline double alpha_star(InterferenceModel model, double u) {
  if (model == InterferenceModel::Independent) return u;
  if (u == 0.0) {
    throw DegenerateInputError("alpha_star: power interference undefined at u = 0");
  }
  return 1.0;
}

/// Exclusive/inspect decision pair; inspect is only meaningful when the
/// allocation is exclusive (c <= a).
struct AllocationDecision {
  bool exclusive = false;
  bool inspect = false;
};

/// Pointwise welfare: v under exclusive use, max(v - t, 0) + u under sharing.
inline double welfare(const ProblemInstance& inst, bool exclusive, double alpha, double u) {
  if (exclusive) return inst.v;
  return std::max(inst.v - interference(inst.model, alpha, u), 0.0) + u;
}

/// The welfare-maximizing decision under truthful revelation: share whenever
/// u > v, otherwise grant exclusivity iff alpha >= alpha*(u). Never inspects.
inline AllocationDecision first_best_allocation(const ProblemInstance& inst, double alpha,
                                                double u) {
  AllocationDecision d;
  d.inspect = false;
  if (u > inst.v) {
    d.exclusive = false;
  } else if (u == 0.0) {
    // Zero entrant value: sharing adds nothing, exclusivity pays v.
    d.exclusive = true;
  } else {
    d.exclusive = alpha >= alpha_star(inst.model, u);
  }
  return d;
}

namespace detail {

/// Kink of alpha -> max(v - t(alpha, u), 0) for fixed u, clamped to f's support.
inline double sharing_welfare_kink(const ProblemInstance& inst, double u) {
  if (inst.model == InterferenceModel::Independent) return inst.v;
  return u > 0.0 ? inst.v / u : inst.f.support_hi();
}

}  // namespace detail

/// E_alpha of the first-best welfare at a given u, integrating f over its
/// support with the integral split at alpha*(u) and at the t = v kink.
inline double first_best_expected_welfare(const ProblemInstance& inst, double u) {
  const double abar = inst.f.support_hi();
  const double astar = u > inst.v ? abar  // sharing everywhere, no switch point
                       : u == 0.0 ? 0.0
                                  : std::clamp(alpha_star(inst.model, u), 0.0, abar);
  const auto integrand = [&](double a) {
    const bool excl = first_best_allocation(inst, a, u).exclusive;
    return inst.f.pdf(a) * welfare(inst, excl, a, u);
  };
  return integrate_split(integrand, 0.0, abar,
                         {astar, detail::sharing_welfare_kink(inst, u)}, inst.quad);
}

}  // namespace mechsolve
