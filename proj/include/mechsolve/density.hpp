#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mechsolve/errors.hpp"
#include "mechsolve/quadrature.hpp"

namespace mechsolve {

enum class DensityKind { Uniform, TruncatedGaussian, Tabulated };

/// A validated prior density on a closed interval [support_lo, support_hi].
///
/// All three kinds expose an exact, mutually consistent pdf/cdf/inverse_cdf
/// triple: the cdf is the exact antiderivative of the pdf (closed form for
/// Uniform and TruncatedGaussian, piecewise quadratic for Tabulated), so
/// cdf(lo) = 0 and cdf(hi) = 1 hold by construction. Immutable after
/// construction and safe for concurrent use.
class DensitySpec {
 public:
  static DensitySpec uniform(double lo, double hi) {
    DensitySpec d;
    d.kind_ = DensityKind::Uniform;
    d.init_support(lo, hi);
    d.origin_ = "uniform:" + fmt(lo) + "," + fmt(hi);
    return d;
  }

  /// Gaussian(mu, sigma) restricted to [lo, hi] and renormalized by the
  /// truncation mass.
  static DensitySpec truncated_gaussian(double lo, double hi, double mu, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("truncated_gaussian: sigma must be > 0");
    DensitySpec d;
    d.kind_ = DensityKind::TruncatedGaussian;
    d.init_support(lo, hi);
    d.mu_ = mu;
    d.sigma_ = sigma;
    d.phi_lo_ = std_normal_cdf((lo - mu) / sigma);
    d.trunc_mass_ = std_normal_cdf((hi - mu) / sigma) - d.phi_lo_;
    if (!(d.trunc_mass_ > 0.0)) {
      throw std::invalid_argument("truncated_gaussian: zero mass on the support");
    }
    d.origin_ = "gauss:" + fmt(lo) + "," + fmt(hi) + "," + fmt(mu) + "," + fmt(sigma);
    return d;
  }

  /// Piecewise-linear pdf through (x_i, p_i); ordinates are rescaled so the
  /// total mass is exactly 1.
  static DensitySpec tabulated(std::vector<double> xs, std::vector<double> ps,
                               std::string origin = {}) {
    if (xs.size() != ps.size() || xs.size() < 2) {
      throw std::invalid_argument("tabulated: need >= 2 (x, pdf) pairs");
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!(ps[i] > 0.0)) throw std::invalid_argument("tabulated: pdf values must be positive");
      if (i > 0 && !(xs[i] > xs[i - 1])) {
        throw std::invalid_argument("tabulated: abscissae must be strictly increasing");
      }
    }
    DensitySpec d;
    d.kind_ = DensityKind::Tabulated;
    d.init_support(xs.front(), xs.back());
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      mass += 0.5 * (ps[i] + ps[i + 1]) * (xs[i + 1] - xs[i]);
    }
    for (double& p : ps) p /= mass;
    d.tab_x_ = std::move(xs);
    d.tab_p_ = std::move(ps);
    d.tab_cum_.assign(d.tab_x_.size(), 0.0);
    for (std::size_t i = 0; i + 1 < d.tab_x_.size(); ++i) {
      d.tab_cum_[i + 1] = d.tab_cum_[i] + 0.5 * (d.tab_p_[i] + d.tab_p_[i + 1]) *
                                              (d.tab_x_[i + 1] - d.tab_x_[i]);
    }
    d.tab_cum_.back() = 1.0;
    d.origin_ = std::move(origin);
    return d;
  }

  DensityKind kind() const { return kind_; }
  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }

  double pdf(double x) const {
    require_in_support(x);
    switch (kind_) {
      case DensityKind::Uniform:
        return 1.0 / (hi_ - lo_);
      case DensityKind::TruncatedGaussian: {
        const double z = (x - mu_) / sigma_;
        return std_normal_pdf(z) / sigma_ / trunc_mass_;
      }
      case DensityKind::Tabulated: {
        const std::size_t k = cell_index(x);
        const double t = (x - tab_x_[k]) / (tab_x_[k + 1] - tab_x_[k]);
        return tab_p_[k] + t * (tab_p_[k + 1] - tab_p_[k]);
      }
    }
    return 0.0;  // unreachable
  }

  double cdf(double x) const {
    require_in_support(x);
    switch (kind_) {
      case DensityKind::Uniform:
        return (x - lo_) / (hi_ - lo_);
      case DensityKind::TruncatedGaussian:
        return (std_normal_cdf((x - mu_) / sigma_) - phi_lo_) / trunc_mass_;
      case DensityKind::Tabulated: {
        const std::size_t k = cell_index(x);
        const double h = tab_x_[k + 1] - tab_x_[k];
        const double t = x - tab_x_[k];
        const double slope = (tab_p_[k + 1] - tab_p_[k]) / h;
        return std::min(1.0, tab_cum_[k] + tab_p_[k] * t + 0.5 * slope * t * t);
      }
    }
    return 0.0;  // unreachable
  }

  /// Returns x with cdf(x) = p; clamped to the support at p in {0, 1}.
  double inverse_cdf(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw OutOfRangeError("inverse_cdf: probability outside [0,1]");
    }
    if (p <= 0.0) return lo_;
    if (p >= 1.0) return hi_;
    switch (kind_) {
      case DensityKind::Uniform:
        return lo_ + p * (hi_ - lo_);
      case DensityKind::TruncatedGaussian: {
        // Bisection on the exact cdf; the interval halves to machine width.
        double a = lo_, b = hi_;
        for (int i = 0; i < 100 && (b - a) > 1e-15 * (std::abs(a) + std::abs(b) + 1.0); ++i) {
          const double m = 0.5 * (a + b);
          (cdf(m) < p ? a : b) = m;
        }
        return 0.5 * (a + b);
      }
      case DensityKind::Tabulated: {
        const auto it = std::upper_bound(tab_cum_.begin(), tab_cum_.end(), p);
        const std::size_t k =
            std::min<std::size_t>(tab_cum_.size() - 2,
                                  it == tab_cum_.begin() ? 0 : (it - tab_cum_.begin() - 1));
        const double h = tab_x_[k + 1] - tab_x_[k];
        const double slope = (tab_p_[k + 1] - tab_p_[k]) / h;
        const double dp = p - tab_cum_[k];
        // Root of (slope/2) t^2 + p_k t - dp = 0 in [0, h], stable branch.
        const double disc = std::sqrt(std::max(0.0, tab_p_[k] * tab_p_[k] + 2.0 * slope * dp));
        const double t = (std::abs(slope) < 1e-300) ? dp / tab_p_[k]
                                                    : 2.0 * dp / (tab_p_[k] + disc);
        return tab_x_[k] + std::clamp(t, 0.0, h);
      }
    }
    return lo_;  // unreachable
  }

  // TruncatedGaussian parameter access (throws otherwise).
  double mu() const { require_kind(DensityKind::TruncatedGaussian); return mu_; }
  double sigma() const { require_kind(DensityKind::TruncatedGaussian); return sigma_; }

  /// The density-string form used by the CLI and JSON configs.
  std::string to_string() const {
    if (origin_.empty()) {
      throw std::logic_error("DensitySpec: tabulated density without a source path");
    }
    return origin_;
  }

  static double std_normal_pdf(double z) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
  }
  static double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

 private:
  void init_support(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("density support requires lo < hi");
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      throw std::invalid_argument("density support must be finite");
    }
    lo_ = lo;
    hi_ = hi;
  }
  void require_in_support(double x) const {
    if (!(x >= lo_ && x <= hi_)) {
      throw OutOfSupportError("evaluation point " + std::to_string(x) + " outside support [" +
                              std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
    }
  }
  void require_kind(DensityKind k) const {
    if (kind_ != k) throw std::logic_error("parameter access on wrong density kind");
  }
  std::size_t cell_index(double x) const {
    const auto it = std::upper_bound(tab_x_.begin(), tab_x_.end(), x);
    const std::size_t k = it == tab_x_.begin() ? 0 : (it - tab_x_.begin() - 1);
    return std::min<std::size_t>(k, tab_x_.size() - 2);
  }
  static std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
  }

  DensityKind kind_ = DensityKind::Uniform;
  double lo_ = 0.0, hi_ = 1.0;
  double mu_ = 0.0, sigma_ = 1.0, phi_lo_ = 0.0, trunc_mass_ = 1.0;
  std::vector<double> tab_x_, tab_p_, tab_cum_;
  std::string origin_;
};

/// d(u) = 1 - G(u) - u g(u): the survival mass net of the local payment term.
inline double survival_mass_d(const DensitySpec& g, double u) {
  return 1.0 - g.cdf(u) - u * g.pdf(u);
}

/// r(u) = (1 - G(u))/g(u) - u, the hazard residual; equals d(u)/g(u).
inline double hazard_residual_r(const DensitySpec& g, double u) {
  const double density_floor = 1e-12;
  const double gu = g.pdf(u);
  if (gu < density_floor) {
    throw ZeroDensityError("hazard_residual_r: density below positivity floor at u=" +
                           std::to_string(u));
  }
  return (1.0 - g.cdf(u)) / gu - u;
}

struct RegularityReport {
  bool decreasing = true;
  // First adjacent sample pair where r increased (only set on failure).
  double u_prev = 0.0, u_next = 0.0;
  double r_prev = 0.0, r_next = 0.0;
};

/// Checks that r(u) is non-increasing across n_grid uniform samples of the
/// support. A rise of up to 1e-7 between adjacent points is tolerated as
/// quadrature noise.
inline RegularityReport check_regularity(const DensitySpec& g, int n_grid) {
  if (n_grid < 2) throw std::invalid_argument("check_regularity: n_grid must be >= 2");
  const double slack = 1e-7;
  const double lo = g.support_lo(), hi = g.support_hi();
  RegularityReport rep;
  double u_prev = lo;
  double r_prev = hazard_residual_r(g, lo);
  for (int i = 1; i < n_grid; ++i) {
    const double u =
        i == n_grid - 1 ? hi : lo + (hi - lo) * (static_cast<double>(i) / (n_grid - 1));
    const double r = hazard_residual_r(g, u);
    if (r > r_prev + slack) {
      rep.decreasing = false;
      rep.u_prev = u_prev;
      rep.u_next = u;
      rep.r_prev = r_prev;
      rep.r_next = r;
      return rep;
    }
    u_prev = u;
    r_prev = r;
  }
  return rep;
}

namespace detail {

inline std::vector<double> parse_csv_numbers(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": bad number '" + tok + "'");
    }
    while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
    if (pos != tok.size()) {
      throw std::invalid_argument(std::string(what) + ": bad number '" + tok + "'");
    }
    out.push_back(v);
  }
  return out;
}

inline std::string trim(std::string s) {
  const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(s.front())) s.erase(s.begin());
  while (!s.empty() && issp(s.back())) s.pop_back();
  return s;
}

}  // namespace detail

/// Parses the density-string syntax shared by the CLI and JSON configs:
///   uniform:<lo>,<hi>
///   gauss:<lo>,<hi>,<mu>,<sigma>
///   table:<path>          (CSV with header "x,pdf")
inline DensitySpec parse_density(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("density spec '" + spec + "': expected <kind>:<args>");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string args = spec.substr(colon + 1);
  if (kind == "uniform") {
    const auto v = detail::parse_csv_numbers(args, "uniform");
    if (v.size() != 2) throw std::invalid_argument("uniform density needs lo,hi");
    return DensitySpec::uniform(v[0], v[1]);
  }
  if (kind == "gauss") {
    const auto v = detail::parse_csv_numbers(args, "gauss");
    if (v.size() != 4) throw std::invalid_argument("gauss density needs lo,hi,mu,sigma");
    return DensitySpec::truncated_gaussian(v[0], v[1], v[2], v[3]);
  }
  if (kind == "table") {
    std::ifstream in(args);
    if (!in) throw std::invalid_argument("table density: cannot open '" + args + "'");
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "x,pdf") {
      throw std::invalid_argument("table density '" + args + "': expected header 'x,pdf'");
    }
    std::vector<double> xs, ps;
    while (std::getline(in, line)) {
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto v = detail::parse_csv_numbers(line, "table row");
      if (v.size() != 2) throw std::invalid_argument("table density row needs x,pdf");
      xs.push_back(v[0]);
      ps.push_back(v[1]);
    }
    return DensitySpec::tabulated(std::move(xs), std::move(ps), spec);
  }
  throw std::invalid_argument("unknown density kind '" + kind + "'");
}

}  // namespace mechsolve
