#pragma once

#include <stdexcept>
#include <string>

namespace mechsolve {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Evaluation point lies outside a density's support.
class OutOfSupportError : public Error {
 public:
  using Error::Error;
};

/// Probability argument outside [0,1] or similar range breach.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

/// Density value below the positivity floor where a division is required.
class ZeroDensityError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature exhausted its subdivision budget.
class NonconvergentError : public Error {
 public:
  using Error::Error;
};

/// A quotient's denominator integral vanished (degenerate instance).
class DegenerateDenominatorError : public Error {
 public:
  using Error::Error;
};

/// Input combination with no defined value (e.g. power model at u = 0).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Inspection cost below the regime this solver covers.
class KBelowThresholdError : public Error {
 public:
  KBelowThresholdError(double k_low, double k)
      : Error("inspection cost K=" + std::to_string(k) +
              " is below the solvable threshold k_low=" + std::to_string(k_low)),
        k_low(k_low),
        k(k) {}
  double k_low;
  double k;
};

/// The commercial-value prior fails the decreasing hazard-residual condition.
class RegularityViolatedError : public Error {
 public:
  using Error::Error;
};

/// Budget residual already negative at the band's lower edge.
class BudgetInfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive search found no pair satisfying the budget.
class NoFeasiblePairError : public Error {
 public:
  using Error::Error;
};

}  // namespace mechsolve
