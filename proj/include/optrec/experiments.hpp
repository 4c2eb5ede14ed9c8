#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "optrec/measurements.hpp"
#include "optrec/problem.hpp"
#include "optrec/solvers.hpp"

namespace optrec {

/// An analytic field with the derivatives operators may ask for. Missing
/// derivatives are empty std::functions.
struct ManufacturedField {
  ScalarField value;
  std::function<std::array<double, 2>(const Point&)> gradient;
  ScalarField laplacian;

  /// (op u)(x); throws CapabilityError when the needed derivative is missing.
  [[nodiscard]] double apply(const OperatorTag& op, const Point& x) const;
};

/// f(x) = F(L_1 u*(x), ..., L_Q u*(x), x) by analytic composition.
ScalarField manufacture_rhs(const ManufacturedField& u_star, const PointwiseOpPtr& op);
/// f(x) = (L u*)(x) + F_hat(u*)(x).
ScalarField manufacture_rhs(const ManufacturedField& u_star, const DecomposedOp& op);

enum class BoundaryKind { Dirichlet0, Robin };

enum class Formulation { NorPoints, Relaxed, Decomposed, MultiDomain, Regularized };
std::string_view to_string(Formulation f);
Formulation formulation_from_string(std::string_view s);

struct ManufacturedCase {
  std::string name;
  int dim = 1;
  Box domain;
  ManufacturedField u_star;
  /// Strong form F(-Lap u, u).
  PointwiseOpPtr strong;
  /// Weak form: principal part plus point-approximated remainder (null for linear cases).
  DecomposedOp weak;
  BoundaryKind boundary = BoundaryKind::Dirichlet0;
  /// Closed-form forcing, checked against manufacture_rhs by validate().
  ScalarField f;
  /// Robin data g = u + du/dn on the boundary; zero for Dirichlet cases.
  ScalarField g_boundary;
  Formulation default_formulation = Formulation::NorPoints;
  double default_lengthscale = 0.2;
  std::vector<Formulation> formulations;

  /// Dirichlet cases vanish on the boundary within 1e-12; f matches
  /// manufacture_rhs at 100 seeded interior points within 1e-8. Throws InputError.
  void validate() const;
  [[nodiscard]] bool supports(Formulation f) const;
};

/// Names of the built-in cases.
std::vector<std::string> battery_case_names();
/// Throws InputError for unknown names.
ManufacturedCase battery_case(std::string_view name);

enum class PointLayout { Uniform, Random };
enum class SweepParameter { N, M, Mu };
std::string_view to_string(SweepParameter p);
SweepParameter sweep_parameter_from_string(std::string_view s);

/// Extra Dirac measurement appended verbatim to an assembled problem.
struct ExtraMeasurement {
  Point point;
  double target = 0.0;
  double tolerance = 0.0;
};

struct MeasurementPlan {
  TestFamily family = TestFamily::DiracPoint;
  /// Interior measurement count N (per axis in 2D).
  int count = 10;
  /// Point-approximation nodes M (per axis in 2D).
  int approx_points = 16;
  PointLayout layout = PointLayout::Uniform;
  /// Relaxation constant; defaults to 2 max_m |F(u*)(x_m)| over the approximation points.
  std::optional<double> c_hat;
  /// Boundary collocation points per edge in 2D (1D always uses both endpoints).
  int boundary_points = 8;
  /// Gauss-Legendre cells per smooth piece for pairings.
  int pairing_cells = 4;
  std::vector<ExtraMeasurement> extra;
};

struct StudySpec {
  ManufacturedCase problem_case;
  Formulation formulation = Formulation::NorPoints;
  SweepParameter parameter = SweepParameter::N;
  std::vector<double> sweep;
  MeasurementPlan plan;
  KernelSpec kernel;
  std::optional<double> nugget;
  SolverConfig solver;
  int eval_grid = 1000;
  /// vary_M: approximation size of the epsilon = 0 reference solve.
  std::optional<int> reference_approx_points;
  /// Measured wall time goes to the seconds column only when set.
  bool record_timing = false;
  Execution exec = Execution::Parallel;

  /// Throws InputError naming the offending field.
  void validate() const;
};

/// An assembled instance plus the bookkeeping studies need.
struct BuiltProblem {
  RecoveryProblem problem;
  /// Measurements used for assembly (interior first, then boundary, then extra).
  std::vector<MeasurementTarget> measurements;
};

/// Assembles the study's formulation for N measurements and M approximation nodes.
BuiltProblem build_problem(const StudySpec& spec, int N, int M);

/// Dispatches to the solver that matches the formulation.
RecoverySolution solve_formulation(const StudySpec& spec, const RecoveryProblem& problem,
                                   const SolverConfig& cfg);

struct ErrorMetrics {
  double L2 = 0.0;
  double Linf = 0.0;
};

/// Trapezoid L2 norm and max norm of (u - u*) on a uniform grid with
/// `resolution` cells per axis of domain.
ErrorMetrics error_metrics(const RecoverySolution& solution, const ScalarField& u_star,
                           const Box& domain, int resolution, Execution exec = Execution::Parallel);

struct StudyRow {
  double control = 0.0;
  double L2 = 0.0;
  double Linf = 0.0;
  double norm = 0.0;
  double kkt = 0.0;
  double violation = 0.0;
  bool converged = false;
  double seconds = 0.0;
  std::optional<double> distance_to_reference;
  std::vector<double> tolerances;
  int iters = 0;
};

struct StudyResult {
  SweepParameter parameter = SweepParameter::N;
  std::vector<StudyRow> rows;
  /// Objective of the reference solve (vary_M, vary_mu), when one was run.
  std::optional<double> reference_norm;
  bool reference_converged = false;
  [[nodiscard]] bool all_converged() const;
};

StudyResult study_vary_N(const StudySpec& spec);
StudyResult study_vary_M(const StudySpec& spec);
StudyResult study_vary_mu(const StudySpec& spec);
/// Runs the sweep named by spec.parameter.
StudyResult run_study(const StudySpec& spec);

inline constexpr std::string_view kStudyCsvHeader =
    "control,L2,Linf,norm,kkt,violation,converged,seconds";

/// CSV with the fixed header; numbers in shortest round-trip form.
std::string to_csv(const StudyResult& result);
nlohmann::json to_json(const StudyRow& row);
nlohmann::json to_json(const StudyResult& result);

}  // namespace optrec
