#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mechsolve/analysis.hpp"
#include "mechsolve/oracle.hpp"
#include "mechsolve/serialize.hpp"
#include "mechsolve/solver.hpp"

namespace mechsolve::cli {

// Exit codes: 0 ok, 1 usage/domain error, 2 validation failure.

namespace detail {

struct Options {
  std::string model;
  std::optional<double> v, K;
  std::string f_spec, g_spec;
  std::string config_path;
  double eps = 1e-8;
  int grid = 400;
  std::string u_grid;
  std::string param;
  std::string values;
  std::string solution_path;
  std::string out_path;
  std::string format;
  double tol = 2e-3;
  // simulate report triple
  std::optional<double> rep_alpha, rep_u, true_alpha;
};

inline void add_instance_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--model", o.model, "interference model: independent|power");
  cmd->add_option("--v", o.v, "incumbent's exclusive-use value (> 0)");
  cmd->add_option("--K", o.K, "inspection cost (>= 0)");
  cmd->add_option("--f", o.f_spec, "externality prior, e.g. gauss:0,10,5,7");
  cmd->add_option("--g", o.g_spec, "commercial-value prior, e.g. uniform:0,1");
  cmd->add_option("--config", o.config_path, "JSON instance file (conflicts with flags)");
  cmd->add_option("--eps", o.eps, "solver tolerance")->default_val(1e-8);
}

inline bool has_instance_flags(const Options& o) {
  return !o.model.empty() || o.v || o.K || !o.f_spec.empty() || !o.g_spec.empty();
}

inline ProblemInstance resolve_instance(const Options& o) {
  if (!o.config_path.empty()) {
    if (has_instance_flags(o)) {
      throw std::invalid_argument("--config conflicts with --model/--v/--K/--f/--g");
    }
    std::ifstream in(o.config_path);
    if (!in) throw std::invalid_argument("cannot open config '" + o.config_path + "'");
    nlohmann::json j;
    in >> j;
    return instance_from_json(j);
  }
  if (o.model.empty() || !o.v || !o.K || o.f_spec.empty() || o.g_spec.empty()) {
    throw std::invalid_argument(
        "instance requires --model, --v, --K, --f, --g (or a --config file)");
  }
  ProblemInstance inst;
  inst.model = interference_model_from_string(o.model);
  inst.v = *o.v;
  inst.K = *o.K;
  inst.f = parse_density(o.f_spec);
  inst.g = parse_density(o.g_spec);
  inst.validate();
  return inst;
}

inline MechanismSolution resolve_solution(const Options& o) {
  if (!o.solution_path.empty()) {
    if (has_instance_flags(o) || !o.config_path.empty()) {
      throw std::invalid_argument("--solution conflicts with instance flags");
    }
    std::ifstream in(o.solution_path);
    if (!in) throw std::invalid_argument("cannot open solution '" + o.solution_path + "'");
    nlohmann::json j;
    in >> j;
    return solution_from_json(j);
  }
  return solve_mechanism(resolve_instance(o), o.eps);
}

inline void check_format(const Options& o, const std::string& supported) {
  if (!o.format.empty() && o.format != supported) {
    throw std::invalid_argument("this command emits " + supported + " only");
  }
}

inline void emit(const Options& o, std::ostream& fallback, const std::string& text) {
  if (o.out_path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream out(o.out_path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write '" + o.out_path + "'");
  out << text;
}

inline std::vector<double> parse_u_grid(const std::string& spec, double ubar) {
  double lo = 0.0, hi = ubar, step = ubar / 200.0;
  if (!spec.empty()) {
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw std::invalid_argument("--u-grid expects lo:hi:step");
    }
    lo = std::stod(spec.substr(0, c1));
    hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    step = std::stod(spec.substr(c2 + 1));
  }
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("--u-grid expects lo<=hi, step>0");
  std::vector<double> grid;
  for (double u = lo; u <= hi + 0.5 * step * 1e-9; u += step) grid.push_back(std::min(u, hi));
  return grid;
}

inline std::vector<double> parse_values(const std::string& csv) {
  if (csv.empty()) throw std::invalid_argument("--values requires a comma-separated list");
  return mechsolve::detail::parse_csv_numbers(csv, "--values");
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"optimal allocation-and-inspection mechanism solver"};
  app.require_subcommand(1);
  detail::Options o;

  auto* solve_cmd = app.add_subcommand("solve", "solve an instance, emit the solution JSON");
  auto* classify_cmd =
      app.add_subcommand("classify", "emit the region raster CSV for a solved instance");
  auto* gap_cmd = app.add_subcommand("gap", "emit the inefficiency-gap curve CSV");
  auto* sweep_cmd = app.add_subcommand("sweep", "re-solve across parameter values, emit CSV");
  auto* validate_cmd =
      app.add_subcommand("validate", "certify the solver against the brute-force oracle");
  auto* simulate_cmd =
      app.add_subcommand("simulate", "run the mechanism on a single report triple");

  for (auto* cmd : {solve_cmd, classify_cmd, gap_cmd, sweep_cmd, validate_cmd, simulate_cmd}) {
    detail::add_instance_flags(cmd, o);
    cmd->add_option("--out", o.out_path, "write output to this path instead of stdout");
    cmd->add_option("--format", o.format, "output format: json|csv");
  }
  for (auto* cmd : {classify_cmd, validate_cmd}) {
    cmd->add_option("--grid", o.grid, "grid resolution")->default_val(400);
  }
  gap_cmd->add_option("--u-grid", o.u_grid, "gap evaluation grid as lo:hi:step");
  sweep_cmd->add_option("--param", o.param, "swept parameter: v|K");
  sweep_cmd->add_option("--values", o.values, "comma-separated parameter values");
  validate_cmd->add_option("--tol", o.tol, "oracle-agreement tolerance on the objective")
      ->default_val(2e-3);
  for (auto* cmd : {classify_cmd, simulate_cmd, validate_cmd}) {
    cmd->add_option("--solution", o.solution_path, "solution JSON from 'solve --out'");
  }
  simulate_cmd->add_option("--alpha", o.rep_alpha, "incumbent's reported externality");
  simulate_cmd->add_option("--u", o.rep_u, "commercial user's reported value");
  simulate_cmd->add_option("--true-alpha", o.true_alpha, "actual externality (audit ground truth)");

  std::vector<const char*> argv;
  argv.push_back("mechsolve");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (solve_cmd->parsed()) {
      detail::check_format(o, "json");
      const MechanismSolution sol = solve_mechanism(detail::resolve_instance(o), o.eps);
      detail::emit(o, out, solution_to_json(sol) + "\n");
      return 0;
    }

    if (classify_cmd->parsed()) {
      detail::check_format(o, "csv");
      const MechanismSolution sol = detail::resolve_solution(o);
      const RegionRaster raster = region_raster(sol.instance, sol, o.grid, o.grid);
      std::ostringstream os;
      write_raster_csv(os, raster);
      detail::emit(o, out, os.str());
      return 0;
    }

    if (gap_cmd->parsed()) {
      detail::check_format(o, "csv");
      const ProblemInstance inst = detail::resolve_instance(o);
      const MechanismSolution sol = solve_mechanism(inst, o.eps);
      const auto grid = detail::parse_u_grid(o.u_grid, inst.g.support_hi());
      std::ostringstream os;
      write_gap_csv(os, gap_curve(inst, sol, grid));
      detail::emit(o, out, os.str());
      return 0;
    }

    if (sweep_cmd->parsed()) {
      detail::check_format(o, "csv");
      const ProblemInstance inst = detail::resolve_instance(o);
      const SweepParam param = sweep_param_from_string(o.param);
      const auto values = detail::parse_values(o.values);
      std::ostringstream os;
      write_sweep_csv(os, sweep(inst, param, values, o.eps));
      detail::emit(o, out, os.str());
      return 0;
    }

    if (simulate_cmd->parsed()) {
      detail::check_format(o, "json");
      if (!o.rep_alpha || !o.rep_u || !o.true_alpha) {
        throw std::invalid_argument("simulate requires --alpha, --u and --true-alpha");
      }
      const MechanismSolution sol = detail::resolve_solution(o);
      const MechanismOutcome res = run_mechanism(sol, *o.rep_alpha, *o.rep_u, *o.true_alpha);
      detail::emit(o, out, outcome_to_json(res, classify(sol, *o.rep_alpha, *o.rep_u)) + "\n");
      return 0;
    }

    if (validate_cmd->parsed()) {
      detail::check_format(o, "json");
      MechanismSolution sol;
      std::vector<std::string> invariant_violations;
      if (!o.solution_path.empty()) {
        if (detail::has_instance_flags(o) || !o.config_path.empty()) {
          throw std::invalid_argument("--solution conflicts with instance flags");
        }
        std::ifstream in(o.solution_path);
        if (!in) throw std::invalid_argument("cannot open solution '" + o.solution_path + "'");
        nlohmann::json j;
        in >> j;
        sol = solution_from_json_lenient(j);
        invariant_violations = solution_invariant_violations(sol);
      } else {
        sol = solve_mechanism(detail::resolve_instance(o), o.eps);
      }
      const ProblemInstance& inst = sol.instance;
      const GridSpec grid{o.grid, o.grid};
      if (!invariant_violations.empty()) {
        // A structurally broken solution fails validation outright.
        std::ostringstream os;
        os << "{\"invariant_violations\": [";
        for (std::size_t i = 0; i < invariant_violations.size(); ++i) {
          os << (i ? ", " : "") << mechsolve::detail::jstr(invariant_violations[i]);
        }
        os << "], \"pass\": false}\n";
        detail::emit(o, out, os.str());
        return 2;
      }
      const OracleResult oracle = grid_solve(inst, grid);
      const ConstraintReport rep = check_constraints(inst, sol, grid);
      const double obj_gap = std::abs(sol.objective - oracle.best_objective);
      const double uinf = u_infinity(inst);
      const bool sandwiched = sol.u_bot <= uinf + 1e-6 && uinf <= sol.u_top + 1e-6;
      const bool pass = obj_gap <= o.tol && rep.max_violation() <= 1e-6;
      std::ostringstream os;
      os << "{\"invariant_violations\": [], \"solver\": " << solution_to_json(sol)
         << ", \"oracle\": " << oracle_result_to_json(oracle)
         << ", \"constraints\": " << constraint_report_to_json(rep)
         << ", \"objective_agreement\": " << mechsolve::detail::jnum(obj_gap)
         << ", \"tolerance\": " << mechsolve::detail::jnum(o.tol)
         << ", \"u_infinity\": " << mechsolve::detail::jnum(uinf)
         << ", \"u_infinity_between_cutoffs\": " << (sandwiched ? "true" : "false")
         << ", \"pass\": " << (pass ? "true" : "false") << "}\n";
      detail::emit(o, out, os.str());
      return pass ? 0 : 2;
    }
  } catch (const KBelowThresholdError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace mechsolve::cli
