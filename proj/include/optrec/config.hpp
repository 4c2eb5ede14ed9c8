#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "optrec/experiments.hpp"

namespace optrec {

struct KernelConfig {
  KernelFamily family = KernelFamily::Gaussian;
  /// Defaults to the case's lengthscale.
  double lengthscale = 0.2;
  double amplitude = 1.0;
  std::optional<double> nugget;
};

struct SweepConfig {
  SweepParameter parameter = SweepParameter::N;
  std::vector<double> values;
  std::optional<int> reference_approx_points;
};

struct OutputConfig {
  std::string solution = "solution.json";
  std::string csv = "study.csv";
  std::string json = "study.json";
  /// Record wall time in the seconds column (breaks bit-identical reruns).
  bool timing = false;
};

struct ValidationConfig {
  int trials = 100;
  double tolerance = 1e-5;
};

/// Declarative description of a run. Every field has a default; parsing fills
/// case-dependent defaults so that to_json emits the effective configuration.
struct RunConfig {
  std::string case_name = "cubic_dirichlet_1d";
  Formulation formulation = Formulation::NorPoints;
  KernelConfig kernel;
  SolverConfig solver;
  MeasurementPlan measurements;
  std::optional<SweepConfig> sweep;
  int eval_grid = 1000;
  std::optional<int> threads;
  OutputConfig output;
  ValidationConfig validation;
};

/// Strict parse: unknown keys and wrongly typed values throw InputError naming
/// the field path (e.g. "kernel.lengthscale").
RunConfig parse_run_config(const nlohmann::json& doc);
/// Reads and parses a file; JSON syntax errors report line and column.
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// The study described by cfg; throws InputError when cfg has no sweep.
StudySpec make_study_spec(const RunConfig& cfg);
/// A single-solve spec (no sweep required).
StudySpec make_solve_spec(const RunConfig& cfg);
KernelSpec make_kernel_spec(const RunConfig& cfg);

nlohmann::json to_json(const Functional& f);
nlohmann::json to_json(const SolveReport& report);

/// Writes content to a sibling temporary file and renames it over path, so
/// readers never observe a partially written file. Throws std::runtime_error.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace optrec
