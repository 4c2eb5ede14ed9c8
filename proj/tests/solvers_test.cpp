#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "optrec/errors.hpp"
#include "optrec/solvers.hpp"

namespace optrec {
namespace {

const KernelSpec kSpec{KernelFamily::Gaussian, 0.2, 1.0, 1};
const Box kUnit = Box::unit(1);

std::vector<Point> grid(int n) {
  std::vector<Point> pts;
  for (int i = 1; i <= n; ++i) pts.emplace_back(static_cast<double>(i) / (n + 1));
  return pts;
}

/// A smooth function in the RKHS with a known norm, used to manufacture realizable data.
RkhsFunction reference_function() {
  return RkhsFunction{{Functional::single(OperatorTag::identity(), Point(0.2)),
                       Functional::single(OperatorTag::identity(), Point(0.5)),
                       Functional::single(OperatorTag::identity(), Point(0.85))},
                      Eigen::Vector3d(0.3, -0.2, 0.25),
                      kSpec};
}

std::vector<double> cubic_data(const RkhsFunction& u, const std::vector<Point>& pts) {
  std::vector<double> t;
  for (const auto& x : pts) {
    const double v = rkhs_eval(u, OperatorTag::identity(), x);
    t.push_back(rkhs_eval(u, OperatorTag::neg_laplacian(), x) + v * v * v);
  }
  return t;
}

RecoveryProblem cubic_points(int n) {
  const auto pts = grid(n);
  return assemble_point_problem(PointwiseOp::cubic_reaction_diffusion(1), pts, cubic_data(reference_function(), pts),
                                kSpec);
}

RecoveryProblem relaxed_cubic(double eps) {
  std::vector<MeasurementTarget> ms;
  const auto u = reference_function();
  const auto op = PointwiseOp::cubic_reaction_diffusion(1);
  for (int k = 1; k <= 4; ++k) {
    const auto phi = TestFunction::fourier_sine(kUnit, {k, 1});
    auto approx = approximate_test_function(phi, 24);
    double target = 0.0;
    for (std::size_t m = 0; m < approx.points.size(); ++m) {
      target += approx.coeffs[m] * cubic_data(u, {approx.points[m]})[0];
    }
    ms.push_back({phi, target, eps, std::move(approx)});
  }
  return assemble_relaxed_problem(op, ms, kSpec);
}

TEST(SolverConfig, ValidationNamesField) {
  auto expect_field = [](SolverConfig cfg, const std::string& field) {
    try {
      cfg.validate();
      FAIL() << "expected InputError for " << field;
    } catch (const InputError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  SolverConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_iters = -1;
  expect_field(c, "max_iters");
  c = {};
  c.mu = 0.0;
  expect_field(c, "mu");
  c = {};
  c.tol_constraint = -1.0;
  expect_field(c, "tol_constraint");
  c = {};
  c.penalty_growth = 1.0;
  expect_field(c, "penalty_growth");
  c = {};
  c.linesearch_shrink = 1.0;
  expect_field(c, "linesearch_shrink");
}

TEST(Solvers, RejectWrongProblemKind) {
  const auto eq = cubic_points(3);
  const auto rel = relaxed_cubic(0.1);
  EXPECT_THROW(solve_min_norm_equality(rel, {}), InputError);
  EXPECT_THROW(solve_min_norm_inequality(eq, {}), InputError);
}

TEST(Equality, ZeroDataGivesZeroFunction) {
  const auto p = assemble_point_problem(PointwiseOp::cubic_reaction_diffusion(1), grid(6), std::vector<double>(6, 0.0),
                                        kSpec);
  const auto sol = solve_min_norm_equality(p, {});
  EXPECT_TRUE(sol.report.converged);
  EXPECT_EQ(sol.fn.coeffs.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(sol.report.objective, 0.0);
}

TEST(Equality, LinearMatchesDenseOracle) {
  // -u'' = y at points: lambda = (K + nugget I)^{-1} y with K built from Hermite formulas.
  const auto pts = grid(8);
  std::vector<double> y;
  for (const auto& x : pts) y.push_back(std::sin(3.0 * x[0]) + 0.5);
  const auto p = assemble_point_problem(PointwiseOp::linear(OperatorTag::neg_laplacian(), 1), pts, y, kSpec);
  const auto sol = solve_min_norm_equality(p, {});
  ASSERT_TRUE(sol.report.converged);
  EXPECT_LE(sol.report.iters, 2);

  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K(i, j) = testing::gaussian_1d(OperatorTag::neg_laplacian(), OperatorTag::neg_laplacian(),
                                     pts[static_cast<std::size_t>(i)][0], pts[static_cast<std::size_t>(j)][0], 0.2);
    }
  }
  K.diagonal().array() += p.gram.nugget();
  const Eigen::VectorXd expected = K.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(y.data(), n));
  EXPECT_LE((sol.fn.coeffs - expected).norm(), 1e-6 * expected.norm());
}

TEST(Equality, NormBoundedByAnyFeasibleFunction) {
  const auto p = cubic_points(10);
  const auto sol = solve_min_norm_equality(p, {});
  ASSERT_TRUE(sol.report.converged);
  EXPECT_LE(sol.report.final_constraint_violation, 1e-8);
  EXPECT_LE(rkhs_norm(sol.fn), rkhs_norm(reference_function()) * (1.0 + 1e-6));
}

TEST(Equality, KktResidualProperties) {
  const auto pts = grid(6);
  std::vector<double> y(6, 1.0);
  const auto p = assemble_point_problem(PointwiseOp::linear(OperatorTag::neg_laplacian(), 1), pts, y, kSpec);
  const auto sol = solve_min_norm_equality(p, {});
  const auto kkt = kkt_residual(p, sol);
  EXPECT_LE(kkt.stationarity, 1e-8);
  EXPECT_LE(kkt.feasibility, 1e-8);
  EXPECT_EQ(kkt.complementarity, 0.0);

  auto perturbed = sol;
  perturbed.fn.coeffs[2] += 1e-3 * (1.0 + std::abs(sol.fn.coeffs[2]));
  EXPECT_GT(kkt_residual(p, perturbed).stationarity, kkt.stationarity);

  auto zero = sol;
  zero.fn.coeffs.setZero();
  EXPECT_GT(kkt_residual(p, zero).feasibility, 0.0);
}

TEST(Equality, CubicKktStationarity) {
  const auto p = cubic_points(8);
  const auto sol = solve_min_norm_equality(p, {});
  ASSERT_TRUE(sol.report.converged);
  EXPECT_LE(kkt_residual(p, sol).stationarity, SolverConfig{}.tol_stationarity);
}

TEST(Equality, ContradictoryDataDoesNotConverge) {
  const auto id = PointwiseOp::linear(OperatorTag::identity(), 1);
  const auto p = assemble_point_problem(id, {Point(0.5), Point(0.5)}, {0.0, 1.0}, kSpec);
  ASSERT_EQ(p.basis_size(), 1);
  SolverConfig cfg;
  cfg.max_iters = 20;
  const auto sol = solve_min_norm_equality(p, cfg);
  EXPECT_FALSE(sol.report.converged);
  EXPECT_GE(sol.report.final_constraint_violation, 0.5 - 1e-9);
}

TEST(Equality, Deterministic) {
  const auto p = cubic_points(10);
  const auto a = solve_min_norm_equality(p, {});
  const auto b = solve_min_norm_equality(p, {});
  EXPECT_EQ(a.fn.coeffs, b.fn.coeffs);
  EXPECT_EQ(a.report.iters, b.report.iters);
}

TEST(Regularized, SmallMuGivesNearZeroFunction) {
  auto p = cubic_points(10);
  p.kind = ProblemKind::Regularized;
  SolverConfig cfg;
  cfg.mu = 1e-8;
  const auto sol = solve_regularized(p, cfg);
  EXPECT_LE(sol.report.objective, 1e-3);
}

TEST(Regularized, NormGrowsWithMuAndApproachesEquality) {
  auto p = cubic_points(10);
  const auto exact = solve_min_norm_equality(p, {});
  ASSERT_TRUE(exact.report.converged);
  p.kind = ProblemKind::Regularized;
  double prev = 0.0;
  double last_distance = 0.0;
  for (double mu : {1e0, 1e2, 1e4, 1e6, 1e8}) {
    SolverConfig cfg;
    cfg.mu = mu;
    const auto sol = solve_regularized(p, cfg);
    EXPECT_TRUE(sol.report.converged) << "mu=" << mu;
    EXPECT_GE(sol.report.objective, prev * (1.0 - 1e-9)) << "mu=" << mu;
    EXPECT_LE(sol.report.objective, exact.report.objective * (1.0 + 1e-6)) << "mu=" << mu;
    prev = sol.report.objective;
    last_distance = solution_distance(p, sol, exact);
  }
  EXPECT_LE(last_distance, 1e-3 * exact.report.objective);
}

TEST(Inequality, HugeToleranceGivesZeroFunction) {
  const auto p = relaxed_cubic(1e6);
  const auto sol = solve_min_norm_inequality(p, {});
  EXPECT_TRUE(sol.report.converged);
  EXPECT_EQ(sol.report.objective, 0.0);
}

TEST(Inequality, ZeroToleranceMatchesEqualitySolve) {
  const auto p = relaxed_cubic(0.0);
  const auto relaxed = solve_min_norm_inequality(p, {});
  const auto exact = solve_min_norm_equality(as_equality(p), {});
  ASSERT_TRUE(exact.report.converged);
  EXPECT_TRUE(relaxed.report.converged);
  EXPECT_LE(solution_distance(p, relaxed, exact), 1e-6 * std::max(1.0, exact.report.objective));
}

TEST(Inequality, ObjectiveMonotoneInTolerance) {
  double prev = -1.0;
  for (double eps : {0.4, 0.2, 0.1, 0.05, 0.025}) {
    const auto p = relaxed_cubic(eps);
    const auto sol = solve_min_norm_inequality(p, {});
    ASSERT_TRUE(sol.report.converged) << "eps=" << eps;
    const auto kkt = kkt_residual(p, sol);
    EXPECT_LE(kkt.feasibility, SolverConfig{}.tol_constraint);
    EXPECT_GE(sol.report.objective, prev * (1.0 - 1e-6)) << "eps=" << eps;
    prev = sol.report.objective;
  }
}

}  // namespace
}  // namespace optrec
