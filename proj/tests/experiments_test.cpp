#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "optrec/errors.hpp"
#include "optrec/experiments.hpp"

namespace optrec {
namespace {

constexpr double kPi = std::numbers::pi;

StudySpec cubic_spec(double lengthscale = 0.2) {
  StudySpec spec;
  spec.problem_case = battery_case("cubic_dirichlet_1d");
  spec.kernel = KernelSpec{KernelFamily::Gaussian, lengthscale, 1.0, 1};
  return spec;
}

TEST(ManufactureRhs, CubicOneDimensional) {
  const auto c = battery_case("cubic_dirichlet_1d");
  const auto f = manufacture_rhs(c.u_star, c.strong);
  EXPECT_NEAR(f(Point(0.5)), kPi * kPi + 1.0, 1e-12);
  const double s = std::sin(kPi * 0.3);
  EXPECT_NEAR(f(Point(0.3)), kPi * kPi * s + s * s * s, 1e-12);
  EXPECT_NEAR(manufacture_rhs(c.u_star, c.weak)(Point(0.3)), f(Point(0.3)), 1e-12);
}

TEST(ManufactureRhs, CubicTwoDimensional) {
  const auto c = battery_case("cubic_dirichlet_2d");
  const double s = std::sin(kPi * 0.3) * std::sin(kPi * 0.7);
  EXPECT_NEAR(manufacture_rhs(c.u_star, c.strong)(Point(0.3, 0.7)), 2.0 * kPi * kPi * s + s * s * s, 1e-12);
}

TEST(ManufactureRhs, MissingDerivativeIsCapabilityError) {
  ManufacturedField u{[](const Point& x) { return x[0]; }, nullptr, nullptr};
  EXPECT_THROW(manufacture_rhs(u, PointwiseOp::cubic_reaction_diffusion(1)), CapabilityError);
  EXPECT_THROW(static_cast<void>(u.apply(OperatorTag::gradient(0), Point(0.5))), CapabilityError);
  EXPECT_NEAR(manufacture_rhs(u, PointwiseOp::cube(1))(Point(0.5)), 0.125, 1e-15);
}

TEST(Battery, AllCasesValidate) {
  const auto names = battery_case_names();
  EXPECT_GE(names.size(), 5U);
  for (const auto& n : names) {
    const auto c = battery_case(n);
    EXPECT_EQ(c.name, n);
    EXPECT_NO_THROW(c.validate()) << n;
    EXPECT_TRUE(c.supports(c.default_formulation)) << n;
  }
  EXPECT_THROW(battery_case("no_such_case"), InputError);
}

TEST(Battery, BrokenForcingFailsValidation) {
  auto c = battery_case("cubic_dirichlet_1d");
  c.f = [](const Point& x) { return std::sin(kPi * x[0]); };
  EXPECT_THROW(c.validate(), InputError);
}

TEST(Battery, RobinCaseDataMatchesField) {
  const auto c = battery_case("cubic_robin_1d");
  ASSERT_EQ(c.boundary, BoundaryKind::Robin);
  for (double x : {0.0, 1.0}) {
    const double n = x == 0.0 ? -1.0 : 1.0;
    const double expected = c.u_star.value(Point(x)) + n * c.u_star.gradient(Point(x))[0];
    EXPECT_NEAR(c.g_boundary(Point(x)), expected, 1e-12);
  }
}

TEST(ErrorMetrics, ZeroSolution) {
  RecoverySolution zero{RkhsFunction{{}, Eigen::VectorXd(), KernelSpec{}}, {}, Eigen::VectorXd()};
  const auto e = error_metrics(zero, [](const Point& x) { return std::sin(kPi * x[0]); }, Box::unit(1), 1000);
  EXPECT_NEAR(e.L2, 1.0 / std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(e.Linf, 1.0, 1e-12);
  EXPECT_GE(e.Linf, e.L2);
}

TEST(BuildProblem, DiracCountsIncludeBoundary) {
  auto spec = cubic_spec();
  spec.sweep = {7};
  const auto bp = build_problem(spec, 7, 16);
  EXPECT_EQ(bp.problem.constraint_count(), 9);
  EXPECT_EQ(bp.problem.kind, ProblemKind::Equality);
  spec.plan.extra = {{Point(0.5), 1.0, 0.0}};
  EXPECT_EQ(build_problem(spec, 7, 16).problem.constraint_count(), 10);
}

TEST(BuildProblem, RelaxedToleranceFollowsDualError) {
  auto spec = cubic_spec();
  spec.formulation = Formulation::Relaxed;
  spec.plan.family = TestFamily::FourierSine;
  spec.sweep = {4};
  const auto coarse = build_problem(spec, 4, 8);
  const auto fine = build_problem(spec, 4, 32);
  EXPECT_EQ(coarse.problem.kind, ProblemKind::Relaxed);
  for (Eigen::Index n = 0; n < 4; ++n) {
    EXPECT_GT(coarse.problem.constraints[static_cast<std::size_t>(n)].tolerance, 0.0);
    EXPECT_LT(fine.problem.constraints[static_cast<std::size_t>(n)].tolerance,
              coarse.problem.constraints[static_cast<std::size_t>(n)].tolerance);
  }
}

TEST(StudySpec, InvalidSpecsNameTheField) {
  auto expect_field = [](const StudySpec& s, const std::string& field) {
    try {
      s.validate();
      FAIL() << "expected InputError for " << field;
    } catch (const InputError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  auto s = cubic_spec();
  s.sweep = {};
  expect_field(s, "sweep.values");
  s.sweep = {10, 5};
  expect_field(s, "sweep.values");
  s.sweep = {2.5};
  expect_field(s, "sweep.values");
  s = cubic_spec();
  s.sweep = {5};
  s.plan.family = TestFamily::FourierSine;
  expect_field(s, "measurements.family");
  s = cubic_spec();
  s.sweep = {5};
  s.parameter = SweepParameter::M;
  expect_field(s, "sweep.parameter");
  s = cubic_spec();
  s.sweep = {5};
  s.problem_case = battery_case("cubic_robin_1d");
  expect_field(s, "formulation");
}

TEST(VaryN, ErrorDecreasesAndMatchesFiniteDifferenceOracle) {
  auto spec = cubic_spec();
  spec.sweep = {5, 10, 20, 40};
  const auto result = study_vary_N(spec);
  ASSERT_EQ(result.rows.size(), 4U);
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    EXPECT_TRUE(result.rows[i].converged);
    EXPECT_LE(result.rows[i].kkt, spec.solver.tol_stationarity);
    if (i > 0) {
      EXPECT_LT(result.rows[i].L2, result.rows[i - 1].L2);
    }
  }
  EXPECT_LE(result.rows.back().L2, 1e-4);

  // Independent discretization of the same boundary value problem.
  const auto c = spec.problem_case;
  const auto fd = testing::fd_cubic_dirichlet([&](double x) { return c.f(Point(x)); }, 4000);
  const auto bp = build_problem(spec, 40, spec.plan.approx_points);
  const auto sol = solve_formulation(spec, bp.problem, spec.solver);
  double gap = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double x = i / 100.0;
    gap = std::max(gap, std::abs(rkhs_eval(sol.fn, OperatorTag::identity(), Point(x)) - testing::interpolate(fd, x)));
  }
  EXPECT_LE(gap, 1e-4);
}

TEST(VaryM, DistanceToReferenceShrinks) {
  auto spec = cubic_spec();
  spec.formulation = Formulation::Relaxed;
  spec.plan.family = TestFamily::FourierSine;
  spec.plan.count = 5;
  spec.parameter = SweepParameter::M;
  spec.sweep = {8, 16, 32, 64};
  spec.reference_approx_points = 256;
  spec.eval_grid = 200;
  const auto result = study_vary_M(spec);
  ASSERT_EQ(result.rows.size(), 4U);
  ASSERT_TRUE(result.reference_norm.has_value());
  EXPECT_TRUE(result.reference_converged);
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& row = result.rows[i];
    EXPECT_TRUE(row.converged);
    ASSERT_TRUE(row.distance_to_reference.has_value());
    // Five interior pairings plus the two boundary point constraints.
    EXPECT_EQ(row.tolerances.size(), 7U);
    if (i > 0) {
      EXPECT_LT(*row.distance_to_reference, *result.rows[i - 1].distance_to_reference);
      EXPECT_LE(row.tolerances[0], result.rows[i - 1].tolerances[0]);
    }
  }
}

TEST(VaryMu, NormsBoundedByReferenceAndDistancesShrink) {
  auto spec = cubic_spec(0.1);
  spec.formulation = Formulation::Regularized;
  spec.plan.count = 20;
  spec.parameter = SweepParameter::Mu;
  spec.sweep = {1e2, 1e4, 1e6, 1e8};
  spec.eval_grid = 200;
  const auto result = study_vary_mu(spec);
  ASSERT_TRUE(result.reference_norm.has_value());
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& row = result.rows[i];
    EXPECT_TRUE(row.converged);
    EXPECT_LE(row.norm, *result.reference_norm * (1.0 + 1e-6));
    ASSERT_TRUE(row.distance_to_reference.has_value());
    if (i > 0) {
      EXPECT_GE(row.norm, result.rows[i - 1].norm * (1.0 - 1e-9));
      EXPECT_LE(*row.distance_to_reference, *result.rows[i - 1].distance_to_reference);
    }
  }
}

TEST(Formulations, DecomposedDiracMatchesPointProblem) {
  auto nor = cubic_spec();
  nor.sweep = {12};
  auto dec = nor;
  dec.formulation = Formulation::Decomposed;
  const auto a = solve_formulation(nor, build_problem(nor, 12, 16).problem, nor.solver);
  const auto b = solve_formulation(dec, build_problem(dec, 12, 16).problem, dec.solver);
  ASSERT_TRUE(a.report.converged && b.report.converged);
  EXPECT_LE(rkhs_distance(a.fn, b.fn), 1e-6 * std::max(1.0, rkhs_norm(a.fn)));
}

TEST(Formulations, RobinHatsRecover) {
  StudySpec spec;
  spec.problem_case = battery_case("cubic_robin_1d");
  spec.formulation = Formulation::MultiDomain;
  spec.plan.family = TestFamily::HatFunction;
  spec.kernel = KernelSpec{KernelFamily::Gaussian, 0.2, 1.0, 1};
  spec.sweep = {20};
  const auto result = study_vary_N(spec);
  ASSERT_EQ(result.rows.size(), 1U);
  EXPECT_TRUE(result.rows[0].converged);
  EXPECT_LE(result.rows[0].L2, 1e-4);
}

TEST(Csv, HeaderAndRows) {
  StudyResult r;
  r.parameter = SweepParameter::N;
  StudyRow row;
  row.control = 5;
  row.L2 = 0.1;
  row.converged = true;
  r.rows = {row, row};
  r.rows[1].converged = false;
  const std::string csv = to_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kStudyCsvHeader);
  std::getline(in, line);
  EXPECT_EQ(line, "5,0.1,0,0,0,0,true,0");
  std::getline(in, line);
  EXPECT_NE(line.find(",false,"), std::string::npos);
  EXPECT_FALSE(std::getline(in, line));
}

TEST(Csv, NumbersRoundTrip) {
  StudyResult r;
  StudyRow row;
  row.L2 = 1.0 / 3.0;
  row.Linf = 5.155e-6;
  r.rows = {row};
  const std::string csv = to_csv(r);
  const auto second = csv.substr(csv.find('\n') + 1);
  std::istringstream in(second);
  std::string field;
  std::getline(in, field, ',');
  std::getline(in, field, ',');
  EXPECT_EQ(std::stod(field), 1.0 / 3.0);
  std::getline(in, field, ',');
  EXPECT_EQ(std::stod(field), 5.155e-6);
}

TEST(Json, RowCarriesOptionalFields) {
  StudyRow row;
  row.distance_to_reference = 0.5;
  row.tolerances = {0.1, 0.2};
  const auto j = to_json(row);
  EXPECT_EQ(j.at("distance_to_reference").get<double>(), 0.5);
  EXPECT_EQ(j.at("tolerances").size(), 2U);
}

}  // namespace
}  // namespace optrec
