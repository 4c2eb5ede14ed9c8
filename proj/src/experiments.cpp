#include "optrec/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "optrec/errors.hpp"

namespace optrec {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kInteriorTag = 0;
constexpr int kBoundaryTag = 1;

void require_derivatives(const ManufacturedField& u, const OperatorTag& op) {
  if (!u.value) throw CapabilityError("manufactured field has no value function");
  switch (op.kind()) {
    case OperatorKind::Identity:
      return;
    case OperatorKind::NegLaplacian:
      if (!u.laplacian) throw CapabilityError("manufactured field has no Laplacian");
      return;
    case OperatorKind::NormalDerivative:
    case OperatorKind::Gradient:
      if (!u.gradient) throw CapabilityError("manufactured field has no gradient");
      return;
  }
}

double eval_pointwise(const PointwiseOp& op, const ManufacturedField& u, const Point& x) {
  std::vector<double> z(static_cast<std::size_t>(op.Q()));
  for (std::size_t q = 0; q < z.size(); ++q) z[q] = u.apply(op.ops()[q], x);
  return op.F(z, x);
}

std::vector<Point> boundary_points(const Box& box, int per_edge) {
  if (box.dim() == 1) return {box.lo, box.hi};
  std::vector<Point> pts;
  const double lx = box.lo[0], hx = box.hi[0], ly = box.lo[1], hy = box.hi[1];
  for (int k = 0; k < per_edge; ++k) {
    const double t = static_cast<double>(k) / per_edge;
    pts.emplace_back(lx + t * (hx - lx), ly);
    pts.emplace_back(hx, ly + t * (hy - ly));
    pts.emplace_back(hx - t * (hx - lx), hy);
    pts.emplace_back(lx, hy - t * (hy - ly));
  }
  return pts;
}

/// Uniform interior grid with n points per axis, or n^dim seeded random points.
std::vector<Point> interior_points(const Box& box, int n, PointLayout layout, std::uint64_t seed) {
  std::vector<Point> pts;
  const int dim = box.dim();
  if (layout == PointLayout::Random) {
    std::mt19937_64 rng(seed);
    const int total = dim == 1 ? n : n * n;
    for (int i = 0; i < total; ++i) {
      Point p = box.lo;
      for (int d = 0; d < dim; ++d) {
        std::uniform_real_distribution<double> dist(box.lo[d], box.hi[d]);
        double v = dist(rng);
        while (v == box.lo[d]) v = dist(rng);
        p[d] = v;
      }
      pts.push_back(p);
    }
    return pts;
  }
  auto coord = [&](int d, int i) {
    return box.lo[d] + (box.hi[d] - box.lo[d]) * static_cast<double>(i) / (n + 1);
  };
  if (dim == 1) {
    for (int i = 1; i <= n; ++i) pts.emplace_back(coord(0, i));
  } else {
    for (int i = 1; i <= n; ++i) {
      for (int j = 1; j <= n; ++j) pts.emplace_back(coord(0, i), coord(1, j));
    }
  }
  return pts;
}

std::vector<TestFunction> test_functions(const Box& box, TestFamily family, int n, bool boundary_hats) {
  std::vector<TestFunction> out;
  const int dim = box.dim();
  if (family == TestFamily::FourierSine) {
    if (dim == 1) {
      for (int k = 1; k <= n; ++k) out.push_back(TestFunction::fourier_sine(box, {k, 1}));
    } else {
      for (int k = 1; k <= n; ++k) {
        for (int l = 1; l <= n; ++l) out.push_back(TestFunction::fourier_sine(box, {k, l}));
      }
    }
    return out;
  }
  // Hat functions on a uniform node grid; with boundary_hats the grid includes
  // the faces and the half hats there carry the boundary pairing.
  std::vector<std::vector<double>> nodes(static_cast<std::size_t>(dim));
  std::array<double, 2> width{};
  for (int d = 0; d < dim; ++d) {
    const double L = box.hi[d] - box.lo[d];
    auto& axis = nodes[static_cast<std::size_t>(d)];
    if (boundary_hats) {
      if (n < 2) throw InputError("measurements.count must be at least 2 for boundary hat functions");
      width[static_cast<std::size_t>(d)] = L / (n - 1);
      for (int i = 0; i < n; ++i) axis.push_back(box.lo[d] + L * i / (n - 1));
    } else {
      width[static_cast<std::size_t>(d)] = L / (n + 1);
      for (int i = 1; i <= n; ++i) axis.push_back(box.lo[d] + L * i / (n + 1));
    }
  }
  if (dim == 1) {
    for (double c : nodes[0]) out.push_back(TestFunction::hat(box, Point(c), width));
  } else {
    for (double cx : nodes[0]) {
      for (double cy : nodes[1]) out.push_back(TestFunction::hat(box, Point(cx, cy), width));
    }
  }
  return out;
}

/// Composite Gauss-Legendre rule respecting every breakpoint of the test functions.
Quadrature domain_quadrature(const Box& box, const std::vector<MeasurementTarget>& ms, int cells) {
  std::array<std::set<double>, 2> breaks;
  int max_mode = 1;
  for (int d = 0; d < box.dim(); ++d) {
    breaks[static_cast<std::size_t>(d)].insert(box.lo[d]);
    breaks[static_cast<std::size_t>(d)].insert(box.hi[d]);
  }
  for (const auto& m : ms) {
    if (m.test_fn.family() == TestFamily::DiracPoint) continue;
    const auto b = m.test_fn.breakpoints();
    for (int d = 0; d < box.dim(); ++d) {
      breaks[static_cast<std::size_t>(d)].insert(b[static_cast<std::size_t>(d)].begin(),
                                                 b[static_cast<std::size_t>(d)].end());
    }
    if (m.test_fn.family() == TestFamily::FourierSine) {
      max_mode = std::max({max_mode, m.test_fn.modes()[0], box.dim() == 2 ? m.test_fn.modes()[1] : 1});
    }
  }
  std::array<std::vector<double>, 2> axes;
  for (int d = 0; d < box.dim(); ++d) {
    axes[static_cast<std::size_t>(d)].assign(breaks[static_cast<std::size_t>(d)].begin(),
                                             breaks[static_cast<std::size_t>(d)].end());
  }
  return gauss_legendre(axes, box.dim(), cells * max_mode);
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

int as_count(double v, const char* field) {
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e6) {
    throw InputError(std::string(field) + " must hold positive integers");
  }
  return static_cast<int>(v);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

StudyRow fill_row(const StudySpec& spec, double control, const RecoveryProblem& problem,
                  const RecoverySolution& sol, double seconds) {
  StudyRow row;
  row.control = control;
  const auto err = error_metrics(sol, spec.problem_case.u_star.value, spec.problem_case.domain,
                                 spec.eval_grid, Execution::Serial);
  row.L2 = err.L2;
  row.Linf = err.Linf;
  row.norm = sol.report.objective;
  if (problem.kind == ProblemKind::Regularized) {
    row.kkt = sol.report.final_stationarity;
  } else {
    row.kkt = kkt_residual(problem, sol).stationarity;
  }
  row.violation = sol.report.final_constraint_violation;
  row.converged = sol.report.converged;
  row.iters = sol.report.iters;
  row.seconds = spec.record_timing ? seconds : 0.0;
  const Eigen::VectorXd tol = problem.tolerances();
  row.tolerances.assign(tol.data(), tol.data() + tol.size());
  return row;
}

StudyRow failed_row(double control) {
  StudyRow row;
  row.control = control;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  row.L2 = row.Linf = row.norm = row.kkt = row.violation = nan;
  row.converged = false;
  return row;
}

/// Runs body(i) for every sweep index, in parallel when requested; rows keep sweep order.
template <class Body>
void for_each_row(std::size_t n, Execution exec, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long>(n);
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    for (long i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

double ManufacturedField::apply(const OperatorTag& op, const Point& x) const {
  require_derivatives(*this, op);
  switch (op.kind()) {
    case OperatorKind::Identity:
      return value(x);
    case OperatorKind::NegLaplacian:
      return -laplacian(x);
    case OperatorKind::NormalDerivative:
    case OperatorKind::Gradient: {
      const auto g = gradient(x);
      double s = 0.0;
      for (int d = 0; d < x.dim(); ++d) s += g[static_cast<std::size_t>(d)] * op.direction()[static_cast<std::size_t>(d)];
      return s;
    }
  }
  return 0.0;
}

ScalarField manufacture_rhs(const ManufacturedField& u_star, const PointwiseOpPtr& op) {
  if (!op) throw InputError("manufacture_rhs: operator is null");
  for (const auto& q : op->ops()) require_derivatives(u_star, q);
  return [u = u_star, op](const Point& x) { return eval_pointwise(*op, u, x); };
}

ScalarField manufacture_rhs(const ManufacturedField& u_star, const DecomposedOp& op) {
  require_derivatives(u_star, op.linear);
  if (op.nonlinear) {
    for (const auto& q : op.nonlinear->ops()) require_derivatives(u_star, q);
  }
  return [u = u_star, op](const Point& x) {
    double v = u.apply(op.linear, x);
    if (op.nonlinear) v += eval_pointwise(*op.nonlinear, u, x);
    return v;
  };
}

std::string_view to_string(Formulation f) {
  switch (f) {
    case Formulation::NorPoints: return "nor_points";
    case Formulation::Relaxed: return "relaxed";
    case Formulation::Decomposed: return "decomposed";
    case Formulation::MultiDomain: return "multidomain";
    case Formulation::Regularized: return "regularized";
  }
  return "unknown";
}

Formulation formulation_from_string(std::string_view s) {
  for (auto f : {Formulation::NorPoints, Formulation::Relaxed, Formulation::Decomposed,
                 Formulation::MultiDomain, Formulation::Regularized}) {
    if (s == to_string(f)) return f;
  }
  throw InputError("unknown formulation '" + std::string(s) +
                   "' (expected nor_points, relaxed, decomposed, multidomain or regularized)");
}

std::string_view to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::N: return "N";
    case SweepParameter::M: return "M";
    case SweepParameter::Mu: return "mu";
  }
  return "unknown";
}

SweepParameter sweep_parameter_from_string(std::string_view s) {
  if (s == "N") return SweepParameter::N;
  if (s == "M") return SweepParameter::M;
  if (s == "mu") return SweepParameter::Mu;
  throw InputError("unknown sweep parameter '" + std::string(s) + "' (expected N, M or mu)");
}

bool ManufacturedCase::supports(Formulation f) const {
  return std::find(formulations.begin(), formulations.end(), f) != formulations.end();
}

void ManufacturedCase::validate() const {
  if (dim != 1 && dim != 2) throw InputError("case " + name + ": dim must be 1 or 2");
  if (domain.dim() != dim) throw InputError("case " + name + ": domain dimension differs from dim");
  if (!u_star.value || !f) throw InputError("case " + name + ": u_star and f are required");
  if (!strong) throw InputError("case " + name + ": strong-form operator is required");

  const auto bpts = boundary_points(domain, 100);
  if (boundary == BoundaryKind::Dirichlet0) {
    for (const auto& p : bpts) {
      if (std::abs(u_star.value(p)) > 1e-12) {
        throw InputError("case " + name + ": u_star does not vanish on the boundary");
      }
    }
  } else {
    if (!g_boundary || !u_star.gradient) {
      throw InputError("case " + name + ": Robin cases need g_boundary and the gradient of u_star");
    }
    for (const auto& p : bpts) {
      const double expect = u_star.value(p) + u_star.apply(OperatorTag::normal_derivative(outward_normal(domain, p)), p);
      if (std::abs(g_boundary(p) - expect) > 1e-8 * std::max(1.0, std::abs(expect))) {
        throw InputError("case " + name + ": g_boundary differs from u + du/dn");
      }
    }
  }

  const ScalarField fs = manufacture_rhs(u_star, strong);
  const ScalarField fw = manufacture_rhs(u_star, weak);
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 100; ++i) {
    Point x = domain.lo;
    for (int d = 0; d < dim; ++d) {
      std::uniform_real_distribution<double> dist(domain.lo[d], domain.hi[d]);
      x[d] = dist(rng);
    }
    const double ref = f(x);
    const double scale = std::max(1.0, std::abs(ref));
    if (std::abs(fs(x) - ref) > 1e-8 * scale || std::abs(fw(x) - ref) > 1e-8 * scale) {
      throw InputError("case " + name + ": f does not match the operator applied to u_star");
    }
  }
}

std::vector<std::string> battery_case_names() {
  return {"linear_poisson_1d", "cubic_dirichlet_1d", "cubic_dirichlet_2d", "cubic_decomposed_1d",
          "cubic_robin_1d"};
}

ManufacturedCase battery_case(std::string_view name) {
  ManufacturedCase c;
  c.name = std::string(name);
  const std::vector<Formulation> dirichlet_forms{Formulation::NorPoints, Formulation::Relaxed,
                                                 Formulation::Decomposed, Formulation::MultiDomain,
                                                 Formulation::Regularized};
  ManufacturedField sin1d{
      [](const Point& x) { return std::sin(kPi * x[0]); },
      [](const Point& x) { return std::array<double, 2>{kPi * std::cos(kPi * x[0]), 0.0}; },
      [](const Point& x) { return -kPi * kPi * std::sin(kPi * x[0]); }};

  if (name == "linear_poisson_1d") {
    c.dim = 1;
    c.u_star = sin1d;
    c.strong = PointwiseOp::linear(OperatorTag::neg_laplacian(), 1);
    c.weak = DecomposedOp{OperatorTag::neg_laplacian(), nullptr};
    c.f = [](const Point& x) { return kPi * kPi * std::sin(kPi * x[0]); };
    // Keeps the N = 20 Gram well enough conditioned to agree with the dense linear solve.
    c.default_lengthscale = 0.12;
  } else if (name == "cubic_dirichlet_1d" || name == "cubic_decomposed_1d") {
    c.dim = 1;
    c.u_star = sin1d;
    c.f = [](const Point& x) {
      const double s = std::sin(kPi * x[0]);
      return kPi * kPi * s + s * s * s;
    };
    if (name == "cubic_decomposed_1d") {
      c.default_formulation = Formulation::Decomposed;
    }
  } else if (name == "cubic_dirichlet_2d") {
    c.dim = 2;
    c.default_lengthscale = 0.3;
    c.u_star = ManufacturedField{
        [](const Point& x) { return std::sin(kPi * x[0]) * std::sin(kPi * x[1]); },
        [](const Point& x) {
          return std::array<double, 2>{kPi * std::cos(kPi * x[0]) * std::sin(kPi * x[1]),
                                       kPi * std::sin(kPi * x[0]) * std::cos(kPi * x[1])};
        },
        [](const Point& x) { return -2.0 * kPi * kPi * std::sin(kPi * x[0]) * std::sin(kPi * x[1]); }};
    c.f = [](const Point& x) {
      const double u = std::sin(kPi * x[0]) * std::sin(kPi * x[1]);
      return 2.0 * kPi * kPi * u + u * u * u;
    };
  } else if (name == "cubic_robin_1d") {
    c.dim = 1;
    c.boundary = BoundaryKind::Robin;
    c.u_star = ManufacturedField{
        [](const Point& x) { return std::sin(kPi * x[0]) + 0.5; },
        sin1d.gradient,
        sin1d.laplacian};
    c.f = [](const Point& x) {
      const double u = std::sin(kPi * x[0]) + 0.5;
      return kPi * kPi * std::sin(kPi * x[0]) + u * u * u;
    };
    c.g_boundary = [](const Point&) { return 0.5 - kPi; };
    c.default_formulation = Formulation::MultiDomain;
    c.formulations = {Formulation::MultiDomain};
  } else {
    throw InputError("unknown case '" + std::string(name) + "'");
  }
  c.domain = Box::unit(c.dim);
  if (!c.strong) {
    c.strong = PointwiseOp::cubic_reaction_diffusion(c.dim);
    c.weak = DecomposedOp{OperatorTag::neg_laplacian(), PointwiseOp::cube(c.dim)};
  }
  if (c.formulations.empty()) c.formulations = dirichlet_forms;
  if (!c.g_boundary) c.g_boundary = [](const Point&) { return 0.0; };
  return c;
}

void StudySpec::validate() const {
  problem_case.validate();
  if (!problem_case.supports(formulation)) {
    throw InputError("formulation: case " + problem_case.name + " does not support " +
                     std::string(to_string(formulation)));
  }
  kernel.validate();
  if (kernel.dim != problem_case.dim) throw InputError("kernel.dim: differs from the case dimension");
  solver.validate();
  if (nugget && !(*nugget >= 0.0)) throw InputError("kernel.nugget: must be nonnegative");
  if (plan.count < 1) throw InputError("measurements.count: must be positive");
  if (plan.approx_points < 1) throw InputError("measurements.approx_points: must be positive");
  if (plan.boundary_points < 1) throw InputError("measurements.boundary_points: must be positive");
  if (plan.pairing_cells < 1) throw InputError("measurements.pairing_cells: must be positive");
  if (plan.c_hat && !(*plan.c_hat > 0.0)) throw InputError("measurements.c_hat: must be positive");
  if (eval_grid < 2) throw InputError("eval_grid: must be at least 2");
  if (reference_approx_points && *reference_approx_points < 1) {
    throw InputError("sweep.reference_approx_points: must be positive");
  }
  const bool point_family = plan.family == TestFamily::DiracPoint;
  if ((formulation == Formulation::NorPoints || formulation == Formulation::Regularized) && !point_family) {
    throw InputError("measurements.family: " + std::string(to_string(formulation)) +
                     " needs dirac measurements");
  }
  if (problem_case.boundary == BoundaryKind::Robin && plan.family != TestFamily::HatFunction) {
    throw InputError("measurements.family: Robin cases need hat measurements");
  }
  for (const auto& e : plan.extra) {
    if (e.point.dim() != problem_case.dim || !problem_case.domain.contains(e.point)) {
      throw InputError("measurements.extra: point outside the domain");
    }
    if (!(e.tolerance >= 0.0) || !std::isfinite(e.target)) {
      throw InputError("measurements.extra: needs a finite target and nonnegative tolerance");
    }
  }
  if (sweep.empty()) throw InputError("sweep.values: must not be empty");
  if (!strictly_increasing(sweep)) throw InputError("sweep.values: must be strictly increasing");
  switch (parameter) {
    case SweepParameter::N:
      for (double v : sweep) as_count(v, "sweep.values");
      break;
    case SweepParameter::M:
      for (double v : sweep) as_count(v, "sweep.values");
      if (formulation != Formulation::Relaxed && formulation != Formulation::Decomposed &&
          formulation != Formulation::MultiDomain) {
        throw InputError("sweep.parameter: M sweeps need a relaxed, decomposed or multidomain formulation");
      }
      break;
    case SweepParameter::Mu:
      for (double v : sweep) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InputError("sweep.values: mu must be positive");
      }
      if (formulation != Formulation::Regularized) {
        throw InputError("sweep.parameter: mu sweeps need the regularized formulation");
      }
      break;
  }
}

BuiltProblem build_problem(const StudySpec& spec, int N, int M) {
  const ManufacturedCase& mc = spec.problem_case;
  const Box& box = mc.domain;
  const Formulation form = spec.formulation;
  const bool weak = form == Formulation::Decomposed || form == Formulation::MultiDomain;
  const bool robin = mc.boundary == BoundaryKind::Robin;

  BuiltProblem out;
  auto& ms = out.measurements;

  // Interior measurements.
  if (spec.plan.family == TestFamily::DiracPoint) {
    for (const auto& p : interior_points(box, N, spec.plan.layout, spec.solver.seed)) {
      ms.push_back({TestFunction::dirac(box, p), mc.f(p), 0.0, std::nullopt});
    }
  } else {
    const auto probes = default_probes(box);
    const Quadrature bq = boundary_quadrature(box);
    const PointwiseOpPtr approximated = weak ? mc.weak.nonlinear : mc.strong;
    double c_hat = spec.plan.c_hat.value_or(0.0);
    for (auto& phi : test_functions(box, spec.plan.family, N, robin)) {
      MeasurementTarget m{phi, pair_data(mc.f, phi, pairing_quadrature(phi, 16)), 0.0, std::nullopt};
      if (robin) m.target += bq.integrate([&](const Point& x) { return mc.g_boundary(x) * phi.value(x); });
      if (approximated) {
        m.point_approx = approximate_test_function(phi, M, probes);
        if (!spec.plan.c_hat) {
          for (const auto& x : m.point_approx->points) {
            c_hat = std::max(c_hat, 2.0 * std::abs(eval_pointwise(*approximated, mc.u_star, x)));
          }
        }
      }
      ms.push_back(std::move(m));
    }
    for (auto& m : ms) {
      if (m.point_approx && c_hat > 0.0) {
        m.tolerance = epsilon_schedule(m.point_approx->dual_error_estimate, c_hat);
      }
    }
  }

  // Homogeneous Dirichlet data as boundary point evaluations.
  if (!robin) {
    for (const auto& p : boundary_points(box, spec.plan.boundary_points)) {
      ms.push_back({TestFunction::dirac(box, p), 0.0, 0.0, std::nullopt});
    }
  }
  for (const auto& e : spec.plan.extra) {
    ms.push_back({TestFunction::dirac(box, e.point), e.target, e.tolerance, std::nullopt});
  }

  MultiDomainOp md;
  md.domain = box;
  if (weak) {
    md.subdomains.push_back({kInteriorTag, Region::Interior, mc.weak});
  } else {
    md.subdomains.push_back({kInteriorTag, Region::Interior, mc.strong});
  }
  md.subdomains.push_back({kBoundaryTag, Region::Boundary, OperatorTag::identity()});

  AssemblyOptions opts;
  opts.nugget = spec.nugget;
  opts.exec = spec.exec;
  const Quadrature quad = domain_quadrature(box, ms, spec.plan.pairing_cells);
  out.problem = assemble_multidomain_problem(md, ms, quad, spec.kernel, opts);

  if (form == Formulation::Regularized) {
    out.problem.kind = ProblemKind::Regularized;
  } else if (out.problem.tolerances().cwiseAbs().maxCoeff() == 0.0) {
    out.problem = as_equality(std::move(out.problem));
  }
  return out;
}

RecoverySolution solve_formulation(const StudySpec&, const RecoveryProblem& problem, const SolverConfig& cfg) {
  switch (problem.kind) {
    case ProblemKind::Equality: return solve_min_norm_equality(problem, cfg);
    case ProblemKind::Relaxed: return solve_min_norm_inequality(problem, cfg);
    case ProblemKind::Regularized: return solve_regularized(problem, cfg);
  }
  throw InputError("unknown problem kind");
}

ErrorMetrics error_metrics(const RecoverySolution& solution, const ScalarField& u_star, const Box& domain,
                           int resolution, Execution exec) {
  if (resolution < 1) throw InputError("error_metrics: resolution must be positive");
  const Quadrature q = trapezoid_rule(domain, resolution);
  const auto u = rkhs_eval_many(solution.fn, OperatorTag::identity(), q.nodes, exec);
  ErrorMetrics m;
  double sum = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double e = u[j] - u_star(q.nodes[j]);
    sum += q.weights[j] * e * e;
    m.Linf = std::max(m.Linf, std::abs(e));
  }
  m.L2 = std::sqrt(sum);
  return m;
}

bool StudyResult::all_converged() const {
  return std::all_of(rows.begin(), rows.end(), [](const StudyRow& r) { return r.converged; });
}

StudyResult study_vary_N(const StudySpec& spec) {
  spec.validate();
  if (spec.parameter != SweepParameter::N) throw InputError("sweep.parameter: expected N");
  StudyResult result;
  result.parameter = SweepParameter::N;
  result.rows.resize(spec.sweep.size());
  for_each_row(spec.sweep.size(), spec.exec, [&](std::size_t i) {
    const double control = spec.sweep[i];
    const auto t0 = Clock::now();
    const BuiltProblem bp = build_problem(spec, as_count(control, "sweep.values"), spec.plan.approx_points);
    try {
      const RecoverySolution sol = solve_formulation(spec, bp.problem, spec.solver);
      result.rows[i] = fill_row(spec, control, bp.problem, sol, elapsed(t0));
    } catch (const ConditioningError&) {
      result.rows[i] = failed_row(control);
    }
  });
  return result;
}

StudyResult study_vary_M(const StudySpec& spec) {
  spec.validate();
  if (spec.parameter != SweepParameter::M) throw InputError("sweep.parameter: expected M");
  StudyResult result;
  result.parameter = SweepParameter::M;
  result.rows.resize(spec.sweep.size());

  std::optional<RecoverySolution> reference;
  if (spec.reference_approx_points) {
    BuiltProblem ref = build_problem(spec, spec.plan.count, *spec.reference_approx_points);
    for (auto& c : ref.problem.constraints) c.tolerance = 0.0;
    ref.problem = as_equality(std::move(ref.problem));
    try {
      reference = solve_min_norm_equality(ref.problem, spec.solver);
      result.reference_norm = reference->report.objective;
      result.reference_converged = reference->report.converged;
    } catch (const ConditioningError&) {
      result.reference_converged = false;
    }
  }

  for_each_row(spec.sweep.size(), spec.exec, [&](std::size_t i) {
    const double control = spec.sweep[i];
    const auto t0 = Clock::now();
    const BuiltProblem bp = build_problem(spec, spec.plan.count, as_count(control, "sweep.values"));
    try {
      const RecoverySolution sol = solve_formulation(spec, bp.problem, spec.solver);
      result.rows[i] = fill_row(spec, control, bp.problem, sol, elapsed(t0));
      if (reference) result.rows[i].distance_to_reference = rkhs_distance(sol.fn, reference->fn);
    } catch (const ConditioningError&) {
      result.rows[i] = failed_row(control);
    }
  });
  return result;
}

StudyResult study_vary_mu(const StudySpec& spec) {
  spec.validate();
  if (spec.parameter != SweepParameter::Mu) throw InputError("sweep.parameter: expected mu");
  StudyResult result;
  result.parameter = SweepParameter::Mu;
  result.rows.resize(spec.sweep.size());

  const BuiltProblem bp = build_problem(spec, spec.plan.count, spec.plan.approx_points);
  std::optional<RecoverySolution> reference;
  try {
    reference = solve_min_norm_equality(as_equality(bp.problem), spec.solver);
    result.reference_norm = reference->report.objective;
    result.reference_converged = reference->report.converged;
  } catch (const ConditioningError&) {
    result.reference_converged = false;
  }

  for_each_row(spec.sweep.size(), spec.exec, [&](std::size_t i) {
    const double control = spec.sweep[i];
    const auto t0 = Clock::now();
    SolverConfig cfg = spec.solver;
    cfg.mu = control;
    try {
      const RecoverySolution sol = solve_regularized(bp.problem, cfg);
      result.rows[i] = fill_row(spec, control, bp.problem, sol, elapsed(t0));
      if (reference) result.rows[i].distance_to_reference = solution_distance(bp.problem, sol, *reference);
    } catch (const ConditioningError&) {
      result.rows[i] = failed_row(control);
    }
  });
  return result;
}

StudyResult run_study(const StudySpec& spec) {
  switch (spec.parameter) {
    case SweepParameter::N: return study_vary_N(spec);
    case SweepParameter::M: return study_vary_M(spec);
    case SweepParameter::Mu: return study_vary_mu(spec);
  }
  throw InputError("unknown sweep parameter");
}

std::string to_csv(const StudyResult& result) {
  std::string out(kStudyCsvHeader);
  out += '\n';
  for (const auto& r : result.rows) {
    out += format_number(r.control) + ',' + format_number(r.L2) + ',' + format_number(r.Linf) + ',' +
           format_number(r.norm) + ',' + format_number(r.kkt) + ',' + format_number(r.violation) + ',' +
           (r.converged ? "true" : "false") + ',' + format_number(r.seconds) + '\n';
  }
  return out;
}

nlohmann::json to_json(const StudyRow& row) {
  nlohmann::json j{{"control", row.control}, {"L2", row.L2},       {"Linf", row.Linf},
                   {"norm", row.norm},       {"kkt", row.kkt},     {"violation", row.violation},
                   {"converged", row.converged}, {"seconds", row.seconds}, {"iters", row.iters},
                   {"tolerances", row.tolerances}};
  j["distance_to_reference"] = row.distance_to_reference ? nlohmann::json(*row.distance_to_reference)
                                                         : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const StudyResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) rows.push_back(to_json(r));
  nlohmann::json j{{"parameter", std::string(to_string(result.parameter))}, {"rows", rows}};
  j["reference_norm"] = result.reference_norm ? nlohmann::json(*result.reference_norm) : nlohmann::json(nullptr);
  j["reference_converged"] = result.reference_converged;
  return j;
}

}  // namespace optrec
