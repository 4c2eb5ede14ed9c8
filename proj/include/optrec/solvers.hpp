#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "optrec/problem.hpp"
#include "optrec/rkhs.hpp"

namespace optrec {

struct SolverConfig {
  int max_iters = 200;
  double tol_constraint = 1e-8;
  double tol_stationarity = 1e-6;
  double penalty_init = 1.0;
  double penalty_growth = 10.0;
  double linesearch_shrink = 0.5;
  /// Regularization weight of the fidelity term; the norm is weighted by 1/mu.
  double mu = 1e6;
  std::uint64_t seed = 0;
  /// Start from the minimum-norm solution of the constraints linearized at u = 0.
  bool warm_start = false;

  /// Throws InputError naming the offending field.
  void validate() const;
};

struct IterationRecord {
  double objective = 0.0;
  double violation = 0.0;
};

struct SolveReport {
  bool converged = false;
  int iters = 0;
  double final_constraint_violation = 0.0;
  double final_stationarity = 0.0;
  /// sqrt(lambda^T (K + nugget I) lambda): the norm the solver minimizes.
  double objective = 0.0;
  std::vector<IterationRecord> history;
};

struct RecoverySolution {
  RkhsFunction fn;
  SolveReport report;
  /// One per constraint, in the sign convention 2 K lambda = J^T nu at a KKT point.
  Eigen::VectorXd multipliers;
};

/// min lambda^T K lambda s.t. r(lambda) = 0 by damped Gauss-Newton SQP.
/// Throws InputError unless problem.kind is Equality.
RecoverySolution solve_min_norm_equality(const RecoveryProblem& problem, const SolverConfig& cfg);

/// min ||r(lambda)||^2 + (1/mu) lambda^T K lambda by Levenberg-Marquardt with
/// damping measured in the U norm. Tolerances of the problem are ignored.
RecoverySolution solve_regularized(const RecoveryProblem& problem, const SolverConfig& cfg);

/// min lambda^T K lambda s.t. |r_n| <= eps_n by a squared-hinge exterior penalty
/// with geometric penalty growth and Gauss-Newton inner solves.
/// Throws InputError unless problem.kind is Relaxed.
RecoverySolution solve_min_norm_inequality(const RecoveryProblem& problem, const SolverConfig& cfg);

struct KktResidual {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
};

/// stationarity = ||2 K lambda - J^T nu|| / (1 + ||lambda||), feasibility = max_n (|r_n| - eps_n)^+,
/// complementarity = max_n |nu_n| (eps_n - |r_n|)^+ (zero for equality problems).
KktResidual kkt_residual(const RecoveryProblem& problem, const RecoverySolution& solution);

/// Distance between two solutions over the same basis in the solver's metric
/// (K + nugget I); falls back to rkhs_distance when the bases differ.
double solution_distance(const RecoveryProblem& problem, const RecoverySolution& a,
                         const RecoverySolution& b);

}  // namespace optrec
