#include "optrec/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "optrec/errors.hpp"

namespace optrec {
namespace {

// Every iterate is described by lambda, the basis values z = K lambda and the
// constraint linearization at z.
struct Iterate {
  Eigen::VectorXd lambda;
  Eigen::VectorXd z;
  ConstraintLinearization lin;
};

Iterate evaluate(const RecoveryProblem& p, Eigen::VectorXd lambda) {
  Iterate it;
  it.z = p.gram.regularized() * lambda;
  it.lin = linearize_constraints(p, it.z);
  it.lambda = std::move(lambda);
  return it;
}

double squared_norm(const RecoveryProblem& p, const Eigen::VectorXd& lambda) {
  return std::max(0.0, lambda.dot(p.gram.regularized() * lambda));
}

// Solves (G_S K G_S^T + shift I) eta = rhs; returns eta. The representer
// coefficients of the step are then G_S^T eta.
Eigen::VectorXd reduced_solve(const RecoveryProblem& p, const Eigen::MatrixXd& g,
                              const Eigen::VectorXd& rhs, double shift) {
  const Eigen::MatrixXd kg = p.gram.regularized() * g.transpose();
  const Eigen::MatrixXd a = g * kg;
  return spd_solve_with_escalation(a, rhs, shift);
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

double max_violation(const Eigen::VectorXd& r, const Eigen::VectorXd& eps) {
  double v = 0.0;
  for (Eigen::Index n = 0; n < r.size(); ++n) v = std::max(v, std::abs(r[n]) - eps[n]);
  return std::max(v, 0.0);
}

// ||2 K lambda - J^T nu|| / (1 + ||lambda||) with J = G K.
double stationarity(const RecoveryProblem& p, const Eigen::VectorXd& lambda,
                    const Eigen::MatrixXd& g, const Eigen::VectorXd& nu) {
  const Eigen::VectorXd inner = 2.0 * lambda - g.transpose() * nu;
  return (p.gram.regularized() * inner).norm() / (1.0 + lambda.norm());
}

Eigen::VectorXd initial_lambda(const RecoveryProblem& p, const SolverConfig& cfg) {
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(p.basis_size());
  if (!cfg.warm_start || p.constraint_count() == 0) return lambda;
  // Minimum-norm solution of the constraints linearized at u = 0.
  const Iterate zero = evaluate(p, lambda);
  const Eigen::VectorXd eta = reduced_solve(p, zero.lin.dr_dz, -zero.lin.residual, 0.0);
  return zero.lin.dr_dz.transpose() * eta;
}

RecoverySolution package(const RecoveryProblem& p, const Eigen::VectorXd& lambda, SolveReport report,
                         Eigen::VectorXd multipliers) {
  RecoverySolution s;
  s.fn = RkhsFunction{p.basis, lambda, p.kernel};
  report.objective = std::sqrt(squared_norm(p, lambda));
  s.report = std::move(report);
  s.multipliers = std::move(multipliers);
  return s;
}

}  // namespace

void SolverConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& rule) {
    throw InputError("solver." + field + " " + rule);
  };
  if (max_iters < 0) fail("max_iters", "must be nonnegative");
  if (!(tol_constraint > 0.0)) fail("tol_constraint", "must be positive");
  if (!(tol_stationarity > 0.0)) fail("tol_stationarity", "must be positive");
  if (!(penalty_init > 0.0)) fail("penalty_init", "must be positive");
  if (!(penalty_growth > 1.0)) fail("penalty_growth", "must be greater than 1");
  if (!(linesearch_shrink > 0.0 && linesearch_shrink < 1.0)) fail("linesearch_shrink", "must lie in (0,1)");
  if (!(mu > 0.0)) fail("mu", "must be positive");
}

RecoverySolution solve_min_norm_equality(const RecoveryProblem& problem, const SolverConfig& cfg) {
  cfg.validate();
  if (problem.kind != ProblemKind::Equality) {
    throw InputError("solve_min_norm_equality requires an equality problem");
  }
  const Eigen::MatrixXd& k = problem.gram.regularized();
  SolveReport report;
  Iterate cur = evaluate(problem, initial_lambda(problem, cfg));
  double penalty = cfg.penalty_init;
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(problem.constraint_count());

  auto merit = [&](const Iterate& it) {
    return squared_norm(problem, it.lambda) + penalty * it.lin.residual.norm();
  };

  for (int iter = 0;; ++iter) {
    const Eigen::MatrixXd& g = cur.lin.dr_dz;
    const Eigen::VectorXd& r = cur.lin.residual;
    // Full SQP step: the minimum-norm lambda satisfying the linearized constraints
    // lies in the row space of G, lambda_next = G^T eta.
    const Eigen::VectorXd eta = reduced_solve(problem, g, g * cur.z - r, 0.0);
    const Eigen::VectorXd next = g.transpose() * eta;
    nu = 2.0 * eta;

    const double viol = r.cwiseAbs().maxCoeff();
    const double stat = stationarity(problem, cur.lambda, g, nu);
    report.history.push_back({std::sqrt(squared_norm(problem, cur.lambda)), viol});
    report.iters = iter;
    report.final_constraint_violation = viol;
    report.final_stationarity = stat;
    if (viol <= cfg.tol_constraint && stat <= cfg.tol_stationarity) {
      report.converged = true;
      break;
    }
    if (iter >= cfg.max_iters) break;

    // l2 exact-penalty merit; the penalty must dominate the multiplier norm.
    penalty = std::max(penalty, 1.1 * nu.norm());
    const Eigen::VectorXd d = next - cur.lambda;
    const double slope = 2.0 * cur.lambda.dot(k * d) - penalty * r.norm();
    const double m0 = merit(cur);
    double alpha = 1.0;
    Iterate trial = evaluate(problem, cur.lambda + d);
    while (merit(trial) > m0 + 1e-4 * alpha * std::min(slope, 0.0) && alpha > 1e-10) {
      alpha *= cfg.linesearch_shrink;
      trial = evaluate(problem, cur.lambda + alpha * d);
    }
    cur = std::move(trial);
  }
  return package(problem, cur.lambda, std::move(report), nu);
}

RecoverySolution solve_regularized(const RecoveryProblem& problem, const SolverConfig& cfg) {
  cfg.validate();
  const double inv_mu = 1.0 / cfg.mu;
  SolveReport report;
  Iterate cur = evaluate(problem, initial_lambda(problem, cfg));
  auto objective = [&](const Iterate& it) {
    return it.lin.residual.squaredNorm() + inv_mu * squared_norm(problem, it.lambda);
  };

  double damping = 0.0;
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(problem.constraint_count());
  const Eigen::MatrixXd a0 = [&] {
    const Eigen::MatrixXd& g = cur.lin.dr_dz;
    return Eigen::MatrixXd(g * problem.gram.regularized() * g.transpose());
  }();
  const double damping_floor =
      1e-8 * std::max(a0.size() > 0 ? a0.diagonal().mean() : 1.0, std::numeric_limits<double>::min());

  for (int iter = 0;; ++iter) {
    const Eigen::MatrixXd& g = cur.lin.dr_dz;
    const Eigen::VectorXd& r = cur.lin.residual;
    const Eigen::VectorXd gz = g * cur.z;
    // Undamped Gauss-Newton step doubles as the multiplier estimate nu = 2 eta = -2 mu r.
    const Eigen::VectorXd eta_gn = reduced_solve(problem, g, gz - r, inv_mu);
    nu = 2.0 * eta_gn;
    const double stat = stationarity(problem, cur.lambda, g, nu);
    report.history.push_back({std::sqrt(squared_norm(problem, cur.lambda)), r.cwiseAbs().maxCoeff()});
    report.iters = iter;
    report.final_stationarity = stat;
    if (stat <= cfg.tol_stationarity) {
      report.converged = true;
      break;
    }
    if (iter >= cfg.max_iters) break;

    const double f0 = objective(cur);
    bool accepted = false;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      const double s = damping / (inv_mu + damping);
      Eigen::VectorXd lambda_next;
      if (damping == 0.0) {
        lambda_next = g.transpose() * eta_gn;
      } else {
        const Eigen::VectorXd eta = reduced_solve(problem, g, (1.0 - s) * gz - r, inv_mu + damping);
        lambda_next = s * cur.lambda + g.transpose() * eta;
      }
      Iterate trial = evaluate(problem, std::move(lambda_next));
      if (objective(trial) <= f0) {
        cur = std::move(trial);
        damping *= cfg.linesearch_shrink;
        if (damping < damping_floor) damping = 0.0;
        accepted = true;
      } else {
        damping = damping == 0.0 ? damping_floor : damping / cfg.linesearch_shrink;
      }
    }
    if (!accepted) break;
  }
  // No hard constraints: residuals are part of the objective.
  report.final_constraint_violation = 0.0;
  return package(problem, cur.lambda, std::move(report), nu);
}

RecoverySolution solve_min_norm_inequality(const RecoveryProblem& problem, const SolverConfig& cfg) {
  cfg.validate();
  if (problem.kind != ProblemKind::Relaxed) {
    throw InputError("solve_min_norm_inequality requires a relaxed problem");
  }
  const Eigen::VectorXd eps = problem.tolerances();
  const Eigen::MatrixXd& k = problem.gram.regularized();
  SolveReport report;
  Iterate cur = evaluate(problem, initial_lambda(problem, cfg));
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(problem.constraint_count());
  double rho = cfg.penalty_init;
  int iters = 0;

  auto hinge = [&](const Eigen::VectorXd& r) {
    Eigen::VectorXd h(r.size());
    for (Eigen::Index n = 0; n < r.size(); ++n) h[n] = std::max(0.0, std::abs(r[n]) - eps[n]);
    return h;
  };
  auto penalized = [&](const Iterate& it) {
    return squared_norm(problem, it.lambda) + rho * hinge(it.lin.residual).squaredNorm();
  };

  double stat = 0.0;
  double viol = 0.0;
  bool out_of_budget = false;
  // After a penalty increase the old point can already pass the stationarity
  // test, so at least one step is taken at the new penalty.
  bool force_step = false;
  while (true) {
    // Inner semi-smooth Gauss-Newton on the penalized objective for fixed rho.
    while (true) {
      const Eigen::MatrixXd& g = cur.lin.dr_dz;
      const Eigen::VectorXd& r = cur.lin.residual;
      const Eigen::VectorXd h = hinge(r);
      std::vector<Eigen::Index> active;
      for (Eigen::Index n = 0; n < r.size(); ++n) {
        if (h[n] > 0.0) active.push_back(n);
      }
      Eigen::VectorXd next = Eigen::VectorXd::Zero(problem.basis_size());
      nu.setZero();
      if (!active.empty()) {
        const Eigen::MatrixXd gs = select_rows(g, active);
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(active.size()));
        for (std::size_t i = 0; i < active.size(); ++i) {
          const Eigen::Index n = active[i];
          const double sign = r[n] > 0.0 ? 1.0 : -1.0;
          rhs[static_cast<Eigen::Index>(i)] = sign * eps[n] - r[n] + g.row(n).dot(cur.z);
        }
        const Eigen::VectorXd eta = reduced_solve(problem, gs, rhs, 1.0 / rho);
        next = gs.transpose() * eta;
        // At a fixed point eta_n = -rho sign(r_n) h_n, so nu = 2 eta is the
        // exterior-penalty multiplier in the 2 K lambda = J^T nu convention.
        for (std::size_t i = 0; i < active.size(); ++i) nu[active[i]] = 2.0 * eta[static_cast<Eigen::Index>(i)];
      }
      viol = h.size() > 0 ? h.maxCoeff() : 0.0;
      stat = stationarity(problem, cur.lambda, g, nu);
      report.history.push_back({std::sqrt(squared_norm(problem, cur.lambda)), viol});
      if (stat <= cfg.tol_stationarity && !force_step) break;
      if (iters >= cfg.max_iters) {
        out_of_budget = true;
        break;
      }
      ++iters;
      force_step = false;

      const Eigen::VectorXd d = next - cur.lambda;
      Eigen::VectorXd signed_h(h.size());
      for (Eigen::Index n = 0; n < h.size(); ++n) signed_h[n] = (r[n] > 0.0 ? 1.0 : -1.0) * h[n];
      const Eigen::VectorXd grad = 2.0 * (k * cur.lambda) + 2.0 * rho * (k * (g.transpose() * signed_h));
      const double slope = grad.dot(d);
      const double f0 = penalized(cur);
      double alpha = 1.0;
      Iterate trial = evaluate(problem, cur.lambda + d);
      while (penalized(trial) > f0 + 1e-4 * alpha * std::min(slope, 0.0) && alpha > 1e-10) {
        alpha *= cfg.linesearch_shrink;
        trial = evaluate(problem, cur.lambda + alpha * d);
      }
      cur = std::move(trial);
    }
    report.iters = iters;
    report.final_constraint_violation = viol;
    report.final_stationarity = stat;
    if (viol <= cfg.tol_constraint && stat <= cfg.tol_stationarity) {
      report.converged = true;
      break;
    }
    if (out_of_budget || !std::isfinite(rho * cfg.penalty_growth)) break;
    rho *= cfg.penalty_growth;
    force_step = true;
  }
  return package(problem, cur.lambda, std::move(report), nu);
}

KktResidual kkt_residual(const RecoveryProblem& problem, const RecoverySolution& solution) {
  const Eigen::VectorXd& lambda = solution.fn.coeffs;
  if (lambda.size() != problem.basis_size()) throw InputError("solution does not match the problem basis");
  if (solution.multipliers.size() != problem.constraint_count()) {
    throw InputError("solution has the wrong number of multipliers");
  }
  const Iterate it = evaluate(problem, lambda);
  const Eigen::VectorXd eps = problem.kind == ProblemKind::Regularized
                                  ? Eigen::VectorXd::Zero(problem.constraint_count())
                                  : problem.tolerances();
  KktResidual out;
  out.stationarity = stationarity(problem, lambda, it.lin.dr_dz, solution.multipliers);
  out.feasibility = max_violation(it.lin.residual, eps);
  if (problem.kind == ProblemKind::Relaxed) {
    for (Eigen::Index n = 0; n < eps.size(); ++n) {
      const double slack = std::max(0.0, eps[n] - std::abs(it.lin.residual[n]));
      out.complementarity = std::max(out.complementarity, std::abs(solution.multipliers[n]) * slack);
    }
  }
  return out;
}

double solution_distance(const RecoveryProblem& problem, const RecoverySolution& a,
                         const RecoverySolution& b) {
  if (a.fn.basis == problem.basis && b.fn.basis == problem.basis) {
    return std::sqrt(squared_norm(problem, a.fn.coeffs - b.fn.coeffs));
  }
  return rkhs_distance(a.fn, b.fn);
}

}  // namespace optrec
