#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mechsolve/analysis.hpp"
#include "mechsolve/model.hpp"
#include "mechsolve/oracle.hpp"
#include "mechsolve/solver.hpp"

// JSON wire formats. Emission is hand-rolled so every real carries exactly
// 12 significant digits; parsing goes through nlohmann::json.

namespace mechsolve {

namespace detail {

inline std::string jnum(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string jstr(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

}  // namespace detail

inline std::string instance_to_json(const ProblemInstance& inst) {
  std::ostringstream os;
  os << "{\"model\": " << detail::jstr(to_string(inst.model))
     << ", \"v\": " << detail::jnum(inst.v) << ", \"K\": " << detail::jnum(inst.K)
     << ", \"f\": " << detail::jstr(inst.f.to_string())
     << ", \"g\": " << detail::jstr(inst.g.to_string()) << "}";
  return os.str();
}

inline ProblemInstance instance_from_json(const nlohmann::json& j) {
  ProblemInstance inst;
  inst.model = interference_model_from_string(j.at("model").get<std::string>());
  inst.v = j.at("v").get<double>();
  inst.K = j.at("K").get<double>();
  inst.f = parse_density(j.at("f").get<std::string>());
  inst.g = parse_density(j.at("g").get<std::string>());
  inst.validate();
  return inst;
}

inline std::string solution_to_json(const MechanismSolution& sol) {
  std::ostringstream os;
  os << "{\"u_bot\": " << detail::jnum(sol.u_bot) << ", \"u_top\": " << detail::jnum(sol.u_top);
  if (sol.alpha_opt) os << ", \"alpha_opt\": " << detail::jnum(*sol.alpha_opt);
  os << ", \"k_low\": " << detail::jnum(sol.k_low)
     << ", \"objective\": " << detail::jnum(sol.objective)
     << ", \"budget_residual\": " << detail::jnum(sol.budget_residual)
     << ", \"eps\": " << detail::jnum(sol.eps)
     << ", \"instance\": " << instance_to_json(sol.instance) << "}";
  return os.str();
}

/// Names every structural invariant the solution breaks (empty when sound).
inline std::vector<std::string> solution_invariant_violations(const MechanismSolution& sol) {
  std::vector<std::string> out;
  if (!(sol.u_bot >= 0.0)) out.push_back("u_bot below zero");
  if (sol.u_bot > sol.u_top) out.push_back("cutoff ordering violated (u_bot > u_top)");
  if (sol.u_top > sol.instance.v + 1e-12) out.push_back("u_top exceeds v");
  if (sol.instance.model == InterferenceModel::Power) {
    if (!sol.alpha_opt) {
      out.push_back("power solution missing alpha_opt");
    } else if (*sol.alpha_opt < 1.0 || *sol.alpha_opt > sol.instance.f.support_hi()) {
      out.push_back("alpha_opt outside [1, alpha_bar]");
    }
  }
  return out;
}

/// Parses without invariant checks; callers decide how breaches are handled.
inline MechanismSolution solution_from_json_lenient(const nlohmann::json& j) {
  MechanismSolution sol;
  sol.u_bot = j.at("u_bot").get<double>();
  sol.u_top = j.at("u_top").get<double>();
  if (j.contains("alpha_opt")) sol.alpha_opt = j.at("alpha_opt").get<double>();
  sol.k_low = j.at("k_low").get<double>();
  sol.objective = j.at("objective").get<double>();
  sol.budget_residual = j.at("budget_residual").get<double>();
  sol.eps = j.at("eps").get<double>();
  sol.instance = instance_from_json(j.at("instance"));
  return sol;
}

inline MechanismSolution solution_from_json(const nlohmann::json& j) {
  MechanismSolution sol = solution_from_json_lenient(j);
  const auto violations = solution_invariant_violations(sol);
  if (!violations.empty()) {
    throw std::invalid_argument("solution file: " + violations.front());
  }
  return sol;
}

inline std::string outcome_to_json(const MechanismOutcome& out, Region region) {
  std::ostringstream os;
  os << "{\"region\": " << detail::jstr(to_string(region))
     << ", \"inspected\": " << (out.inspected ? "true" : "false")
     << ", \"allocation\": " << (out.exclusive ? 1 : 0)
     << ", \"payment\": " << detail::jnum(out.payment) << "}";
  return os.str();
}

inline std::string constraint_report_to_json(const ConstraintReport& rep) {
  const auto cv = [](const ConstraintViolation& c) {
    std::ostringstream os;
    os << "{\"max_violation\": " << detail::jnum(c.magnitude)
       << ", \"at_alpha\": " << detail::jnum(c.at_alpha)
       << ", \"at_u\": " << detail::jnum(c.at_u) << "}";
    return os.str();
  };
  std::ostringstream os;
  os << "{\"ic\": " << cv(rep.ic) << ", \"inspect_bound\": " << cv(rep.inspect_bound)
     << ", \"u_monotone\": " << cv(rep.u_monotone)
     << ", \"alpha_monotone\": " << cv(rep.alpha_monotone)
     << ", \"budget_lhs\": " << detail::jnum(rep.budget_lhs)
     << ", \"budget_rhs\": " << detail::jnum(rep.budget_rhs)
     << ", \"budget_violation\": " << detail::jnum(rep.budget_violation)
     << ", \"grid\": {\"n_alpha\": " << rep.grid.n_alpha << ", \"n_u\": " << rep.grid.n_u
     << "}}";
  return os.str();
}

inline std::string oracle_result_to_json(const OracleResult& res) {
  std::ostringstream os;
  os << "{\"best_u_bot\": " << detail::jnum(res.best_u_bot)
     << ", \"best_u_top\": " << detail::jnum(res.best_u_top);
  if (res.best_alpha_opt) os << ", \"best_alpha_opt\": " << detail::jnum(*res.best_alpha_opt);
  os << ", \"best_objective\": " << detail::jnum(res.best_objective)
     << ", \"feasible_count\": " << res.feasible_count << "}";
  return os.str();
}

}  // namespace mechsolve
