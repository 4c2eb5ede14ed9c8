#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "optrec/config.hpp"
#include "optrec/errors.hpp"
#include "optrec/experiments.hpp"
#include "optrec/parallel.hpp"

namespace optrec::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonArgs {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--config", a.config, "JSON run configuration")->required();
  sub->add_option("--out", a.out_dir, "Directory for relative output paths");
  sub->add_option("--seed", a.seed, "Overrides solver.seed");
  sub->add_option("--threads", a.threads, "OpenMP thread count")->check(CLI::PositiveNumber);
}

RunConfig load(const CommonArgs& a) {
  RunConfig cfg = load_run_config(a.config);
  if (a.seed) cfg.solver.seed = *a.seed;
  if (a.threads) cfg.threads = *a.threads;
  if (cfg.threads) set_threads(*cfg.threads);
  return cfg;
}

fs::path output_path(const CommonArgs& a, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : fs::path(a.out_dir) / path;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

int cmd_solve(const CommonArgs& a, std::ostream& out) {
  const RunConfig cfg = load(a);
  const StudySpec spec = make_solve_spec(cfg);
  const BuiltProblem bp = build_problem(spec, cfg.measurements.count, cfg.measurements.approx_points);
  const RecoverySolution sol = solve_formulation(spec, bp.problem, cfg.solver);
  const ErrorMetrics err = error_metrics(sol, spec.problem_case.u_star.value, spec.problem_case.domain, cfg.eval_grid);

  json basis = json::array();
  for (const auto& f : sol.fn.basis) basis.push_back(to_json(f));
  json doc{{"config", to_json(cfg)},
           {"basis", basis},
           {"coefficients", std::vector<double>(sol.fn.coeffs.data(), sol.fn.coeffs.data() + sol.fn.coeffs.size())},
           {"multipliers", std::vector<double>(sol.multipliers.data(), sol.multipliers.data() + sol.multipliers.size())},
           {"report", to_json(sol.report)},
           {"errors", {{"L2", err.L2}, {"Linf", err.Linf}}}};
  if (bp.problem.kind != ProblemKind::Regularized) {
    const KktResidual kkt = kkt_residual(bp.problem, sol);
    doc["kkt"] = {{"stationarity", kkt.stationarity},
                  {"feasibility", kkt.feasibility},
                  {"complementarity", kkt.complementarity}};
  }
  const fs::path path = output_path(a, cfg.output.solution);
  write_file_atomic(path, doc.dump(2) + "\n");

  out << "case " << cfg.case_name << " (" << to_string(cfg.formulation) << "), basis "
      << bp.problem.basis_size() << ", constraints " << bp.problem.constraint_count() << "\n"
      << "converged " << (sol.report.converged ? "true" : "false") << " after " << sol.report.iters
      << " iterations; violation " << fmt(sol.report.final_constraint_violation) << ", stationarity "
      << fmt(sol.report.final_stationarity) << ", norm " << fmt(sol.report.objective) << "\n"
      << "L2 error " << fmt(err.L2) << ", Linf error " << fmt(err.Linf) << "\n"
      << "wrote " << path.string() << "\n";
  return sol.report.converged ? kOk : kNotConverged;
}

int cmd_study(const CommonArgs& a, std::ostream& out) {
  const RunConfig cfg = load(a);
  const StudySpec spec = make_study_spec(cfg);
  const StudyResult result = run_study(spec);

  json doc = to_json(result);
  doc["config"] = to_json(cfg);
  const std::string csv = to_csv(result);
  const fs::path csv_path = output_path(a, cfg.output.csv);
  const fs::path json_path = output_path(a, cfg.output.json);
  write_file_atomic(csv_path, csv);
  write_file_atomic(json_path, doc.dump(2) + "\n");

  out << csv << "wrote " << csv_path.string() << " and " << json_path.string() << "\n";
  return result.all_converged() ? kOk : kNotConverged;
}

int cmd_validate_kernel(const CommonArgs& a, std::ostream& out, const Hooks& hooks) {
  const RunConfig cfg = load(a);
  const KernelSpec spec = make_kernel_spec(cfg);
  const KernelCheckReport report = check_kernel_derivatives(spec, cfg.validation.trials, cfg.solver.seed,
                                                            cfg.validation.tolerance, hooks.evaluator);
  out << to_string(spec.family) << " kernel, dim " << spec.dim << ", lengthscale " << spec.lengthscale
      << ", " << cfg.validation.trials << " trials, tolerance " << fmt(cfg.validation.tolerance) << "\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-28s %-28s %-12s %s\n", "left", "right", "max_rel_err", "status");
  out << line;
  for (const auto& row : report.rows) {
    const std::string err = row.supported ? fmt(row.max_rel_error) : "-";
    const char* status = !row.supported ? "unsupported" : (row.passed ? "ok" : "FAIL");
    std::snprintf(line, sizeof(line), "%-28s %-28s %-12s %s\n", row.left.c_str(), row.right.c_str(), err.c_str(),
                  status);
    out << line;
  }
  const bool ok = report.all_passed();
  out << (ok ? "all operator pairs passed" : "derivative check failed") << "\n";
  return ok ? kOk : kNotConverged;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Hooks& hooks) {
  CLI::App app{"Optimal recovery of nonlinear PDE solutions with kernel methods", "optrec"};
  app.require_subcommand(1);
  CommonArgs solve_args, study_args, kernel_args;
  auto* solve = app.add_subcommand("solve", "Assemble and solve one recovery problem");
  auto* study = app.add_subcommand("study", "Run a convergence sweep and write CSV/JSON");
  auto* validate = app.add_subcommand("validate-kernel", "Check kernel derivatives against finite differences");
  add_common(solve, solve_args);
  add_common(study, study_args);
  add_common(validate, kernel_args);

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_args, out);
    if (study->parsed()) return cmd_study(study_args, out);
    return cmd_validate_kernel(kernel_args, out, hooks);
  } catch (const ConditioningError& e) {
    err << "error: " << e.what() << "\n";
    return kNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace optrec::cli
