#include "optrec/problem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "optrec/errors.hpp"

namespace optrec {
namespace {

constexpr int kInteriorTag = 0;

class ProblemBuilder {
 public:
  ProblemBuilder(const KernelSpec& kernel, const AssemblyOptions& options)
      : kernel_(kernel), options_(options) {
    kernel_.validate();
  }

  Eigen::Index add(Functional f) {
    detail::check_functional(kernel_, f);
    if (options_.deduplicate) {
      auto it = index_.find(f);
      if (it != index_.end()) return it->second;
    }
    const auto idx = static_cast<Eigen::Index>(basis_.size());
    if (options_.deduplicate) index_.emplace(f, idx);
    basis_.push_back(std::move(f));
    return idx;
  }

  void add_pointwise(Constraint& c, const PointwiseOpPtr& op, const Point& x, double coeff, int tag) {
    if (!op) return;
    Constraint::NonlinearTerm term{op, {}, x, coeff};
    for (const auto& q : op->ops()) term.slots.push_back(add(Functional::single(q, x, tag)));
    c.nonlinear.push_back(std::move(term));
  }

  void add_point_approx(Constraint& c, const PointwiseOpPtr& op, const PointApproximation& approx,
                        int tag) {
    if (!op) return;
    if (approx.points.size() != approx.coeffs.size()) {
      throw InputError("point approximation has mismatched points and coefficients");
    }
    for (std::size_t m = 0; m < approx.points.size(); ++m) {
      add_pointwise(c, op, approx.points[m], approx.coeffs[m], tag);
    }
  }

  void add_linear_point(Constraint& c, const OperatorTag& op, const Point& x, int tag) {
    c.linear.push_back({add(Functional::single(op, x, tag)), 1.0});
  }

  /// Quadrature realization of [L u, phi]; NegLaplacian in weak form int grad u . grad phi.
  void add_linear_pairing(Constraint& c, const OperatorTag& op, const TestFunction& phi,
                          const Quadrature& quad, int tag) {
    Functional composite;
    for (std::size_t j = 0; j < quad.size(); ++j) {
      const Point& x = quad.nodes[j];
      const double w = quad.weights[j];
      if (op.kind() == OperatorKind::NegLaplacian) {
        const auto g = phi.gradient(x);
        for (int comp = 0; comp < phi.dim(); ++comp) {
          const double weight = w * g[static_cast<std::size_t>(comp)];
          if (weight != 0.0) composite.terms.push_back({{OperatorTag::gradient(comp), x, tag}, weight});
        }
      } else {
        const double weight = w * phi.value(x);
        if (weight != 0.0) composite.terms.push_back({{op, x, tag}, weight});
      }
    }
    if (!composite.terms.empty()) c.linear.push_back({add(std::move(composite)), 1.0});
  }

  void push(Constraint c) { constraints_.push_back(std::move(c)); }

  RecoveryProblem finish(ProblemKind kind) {
    if (basis_.empty()) throw InputError("assembled problem has an empty basis");
    RecoveryProblem p;
    p.kernel = kernel_;
    p.gram = gram(kernel_, basis_, options_.nugget, options_.exec);
    p.basis = std::move(basis_);
    p.constraints = std::move(constraints_);
    p.kind = kind;
    return p;
  }

 private:
  KernelSpec kernel_;
  AssemblyOptions options_;
  std::vector<Functional> basis_;
  std::map<Functional, Eigen::Index> index_;
  std::vector<Constraint> constraints_;
};

void check_measurement(const MeasurementTarget& m) {
  if (!(m.tolerance >= 0.0) || !std::isfinite(m.tolerance)) {
    throw InputError("measurement tolerance must be finite and nonnegative");
  }
  if (!std::isfinite(m.target)) throw InputError("measurement target must be finite");
}

const PointApproximation& require_approx(const MeasurementTarget& m) {
  if (!m.point_approx) {
    throw InputError("measurement on " + std::string(to_string(m.test_fn.family())) +
                     " test function is missing its point approximation");
  }
  return *m.point_approx;
}

}  // namespace

PointwiseOp::PointwiseOp(std::vector<OperatorTag> ops, Map F, Partials dF, int dim)
    : ops_(std::move(ops)), F_(std::move(F)), dF_(std::move(dF)), dim_(dim) {
  if (ops_.empty()) throw InputError("PointwiseOp needs at least one operator");
  if (dim != 1 && dim != 2) throw InputError("PointwiseOp dimension must be 1 or 2");
  if (!F_ || !dF_) throw InputError("PointwiseOp needs both F and its partials");

  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> zdist(-2.0, 2.0);
  std::uniform_real_distribution<double> xdist(0.0, 1.0);
  const auto q = static_cast<std::size_t>(Q());
  std::vector<double> z(q), grad(q), zp(q), zm(q);
  for (int probe = 0; probe < 100; ++probe) {
    for (auto& v : z) v = zdist(rng);
    const Point x = dim == 1 ? Point(xdist(rng)) : Point(xdist(rng), xdist(rng));
    dF_(z, x, grad);
    for (std::size_t l = 0; l < q; ++l) {
      const double h = 1e-6 * std::max(1.0, std::abs(z[l]));
      zp = z;
      zm = z;
      zp[l] += h;
      zm[l] -= h;
      const double fd = (F_(zp, x) - F_(zm, x)) / (2.0 * h);
      if (std::abs(fd - grad[l]) > 1e-5 * std::max(1.0, std::abs(grad[l]))) {
        throw InputError("PointwiseOp: partial " + std::to_string(l) +
                         " disagrees with finite differences (" + std::to_string(grad[l]) +
                         " vs " + std::to_string(fd) + ")");
      }
    }
  }
}

std::shared_ptr<const PointwiseOp> PointwiseOp::linear(OperatorTag op, int dim) {
  return sum_of({op}, dim);
}

std::shared_ptr<const PointwiseOp> PointwiseOp::sum_of(std::vector<OperatorTag> ops, int dim) {
  return std::make_shared<const PointwiseOp>(
      std::move(ops),
      [](std::span<const double> z, const Point&) {
        double s = 0.0;
        for (double v : z) s += v;
        return s;
      },
      [](std::span<const double>, const Point&, std::span<double> out) {
        std::fill(out.begin(), out.end(), 1.0);
      },
      dim);
}

std::shared_ptr<const PointwiseOp> PointwiseOp::cubic_reaction_diffusion(int dim) {
  return std::make_shared<const PointwiseOp>(
      std::vector<OperatorTag>{OperatorTag::neg_laplacian(), OperatorTag::identity()},
      [](std::span<const double> z, const Point&) { return z[0] + z[1] * z[1] * z[1]; },
      [](std::span<const double> z, const Point&, std::span<double> out) {
        out[0] = 1.0;
        out[1] = 3.0 * z[1] * z[1];
      },
      dim);
}

std::shared_ptr<const PointwiseOp> PointwiseOp::cube(int dim) {
  return std::make_shared<const PointwiseOp>(
      std::vector<OperatorTag>{OperatorTag::identity()},
      [](std::span<const double> z, const Point&) { return z[0] * z[0] * z[0]; },
      [](std::span<const double> z, const Point&, std::span<double> out) { out[0] = 3.0 * z[0] * z[0]; },
      dim);
}

void MultiDomainOp::validate() const {
  if (subdomains.empty()) throw InputError("multi-domain operator has no subdomains");
  for (std::size_t i = 0; i < subdomains.size(); ++i) {
    for (std::size_t j = i + 1; j < subdomains.size(); ++j) {
      if (subdomains[i].tag == subdomains[j].tag) throw InputError("duplicate subdomain tag");
      if (subdomains[i].region == subdomains[j].region) {
        throw InputError("subdomain regions overlap");
      }
    }
  }
}

Eigen::VectorXd RecoveryProblem::tolerances() const {
  Eigen::VectorXd t(constraint_count());
  for (Eigen::Index n = 0; n < t.size(); ++n) t[n] = constraints[static_cast<std::size_t>(n)].tolerance;
  return t;
}

Eigen::VectorXd RecoveryProblem::targets() const {
  Eigen::VectorXd t(constraint_count());
  for (Eigen::Index n = 0; n < t.size(); ++n) t[n] = constraints[static_cast<std::size_t>(n)].target;
  return t;
}

RecoveryProblem assemble_point_problem(const PointwiseOpPtr& op, const std::vector<Point>& points,
                                       const std::vector<double>& targets, const KernelSpec& kernel,
                                       const AssemblyOptions& options) {
  if (!op) throw InputError("assemble_point_problem: operator is null");
  if (points.empty()) throw InputError("assemble_point_problem: no collocation points");
  if (points.size() != targets.size()) {
    throw InputError("assemble_point_problem: points and targets differ in length");
  }
  ProblemBuilder b(kernel, options);
  for (std::size_t n = 0; n < points.size(); ++n) {
    Constraint c;
    c.target = targets[n];
    b.add_pointwise(c, op, points[n], 1.0, kInteriorTag);
    b.push(std::move(c));
  }
  return b.finish(ProblemKind::Equality);
}

RecoveryProblem assemble_relaxed_problem(const PointwiseOpPtr& op,
                                         const std::vector<MeasurementTarget>& measurements,
                                         const KernelSpec& kernel, const AssemblyOptions& options) {
  if (!op) throw InputError("assemble_relaxed_problem: operator is null");
  if (measurements.empty()) throw InputError("assemble_relaxed_problem: no measurements");
  ProblemBuilder b(kernel, options);
  for (const auto& m : measurements) {
    check_measurement(m);
    Constraint c;
    c.target = m.target;
    c.tolerance = m.tolerance;
    b.add_point_approx(c, op, require_approx(m), kInteriorTag);
    b.push(std::move(c));
  }
  return b.finish(ProblemKind::Relaxed);
}

RecoveryProblem assemble_decomposed_problem(const DecomposedOp& op,
                                            const std::vector<MeasurementTarget>& measurements,
                                            const Quadrature& quad, const KernelSpec& kernel,
                                            const AssemblyOptions& options) {
  MultiDomainOp md;
  md.domain = measurements.empty() ? Box::unit(kernel.dim) : measurements.front().test_fn.domain();
  md.subdomains.push_back({kInteriorTag, Region::Interior, op});
  return assemble_multidomain_problem(md, measurements, quad, kernel, options);
}

RecoveryProblem assemble_multidomain_problem(const MultiDomainOp& op,
                                             const std::vector<MeasurementTarget>& measurements,
                                             const Quadrature& quad, const KernelSpec& kernel,
                                             const AssemblyOptions& options) {
  op.validate();
  if (measurements.empty()) throw InputError("assemble_multidomain_problem: no measurements");
  const MultiDomainOp::Subdomain* interior = nullptr;
  const MultiDomainOp::Subdomain* boundary = nullptr;
  for (const auto& s : op.subdomains) (s.region == Region::Interior ? interior : boundary) = &s;

  const Quadrature boundary_quad = boundary_quadrature(op.domain, op.boundary_cells);
  ProblemBuilder b(kernel, options);

  for (const auto& m : measurements) {
    check_measurement(m);
    const TestFunction& phi = m.test_fn;
    Constraint c;
    c.target = m.target;
    c.tolerance = m.tolerance;

    if (phi.family() == TestFamily::DiracPoint) {
      const bool on_bdry = op.domain.on_boundary(phi.point());
      const auto* sub = on_bdry ? boundary : interior;
      if (sub == nullptr) {
        throw InputError(std::string("Dirac measurement lies in an uncovered ") +
                         (on_bdry ? "boundary" : "interior") + " region");
      }
      std::visit(
          [&](const auto& sop) {
            using T = std::decay_t<decltype(sop)>;
            if constexpr (std::is_same_v<T, PointwiseOpPtr>) {
              b.add_pointwise(c, sop, phi.point(), 1.0, sub->tag);
            } else if constexpr (std::is_same_v<T, DecomposedOp>) {
              b.add_linear_point(c, sop.linear, phi.point(), sub->tag);
              b.add_pointwise(c, sop.nonlinear, phi.point(), 1.0, sub->tag);
            } else {
              b.add_linear_point(c, sop, phi.point(), sub->tag);
            }
          },
          sub->op);
      b.push(std::move(c));
      continue;
    }

    if (interior == nullptr) throw InputError("measurement supported on an uncovered interior region");
    std::visit(
        [&](const auto& sop) {
          using T = std::decay_t<decltype(sop)>;
          if constexpr (std::is_same_v<T, PointwiseOpPtr>) {
            b.add_point_approx(c, sop, require_approx(m), interior->tag);
          } else if constexpr (std::is_same_v<T, DecomposedOp>) {
            b.add_linear_pairing(c, sop.linear, phi, quad, interior->tag);
            if (sop.nonlinear) b.add_point_approx(c, sop.nonlinear, require_approx(m), interior->tag);
          } else {
            b.add_linear_pairing(c, sop, phi, quad, interior->tag);
          }
        },
        interior->op);

    if (!phi.vanishes_on_boundary()) {
      if (boundary == nullptr) throw InputError("measurement supported on an uncovered boundary region");
      const auto* lin = std::get_if<OperatorTag>(&boundary->op);
      if (lin == nullptr) {
        throw CapabilityError("boundary pairings are only available for linear boundary operators");
      }
      b.add_linear_pairing(c, *lin, phi, boundary_quad, boundary->tag);
    }
    b.push(std::move(c));
  }
  return b.finish(ProblemKind::Relaxed);
}

RecoveryProblem as_equality(RecoveryProblem problem) {
  for (const auto& c : problem.constraints) {
    if (c.tolerance != 0.0) throw InputError("as_equality: problem has nonzero tolerances");
  }
  problem.kind = ProblemKind::Equality;
  return problem;
}

ConstraintLinearization linearize_constraints(const RecoveryProblem& problem, const Eigen::VectorXd& z) {
  if (z.size() != problem.basis_size()) throw InputError("basis value vector has the wrong size");
  const Eigen::Index n = problem.constraint_count();
  ConstraintLinearization out{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, problem.basis_size())};
  std::vector<double> zq;
  std::vector<double> grad;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Constraint& c = problem.constraints[static_cast<std::size_t>(i)];
    double r = -c.target;
    for (const auto& t : c.linear) {
      r += t.coeff * z[t.basis];
      out.dr_dz(i, t.basis) += t.coeff;
    }
    for (const auto& t : c.nonlinear) {
      zq.resize(t.slots.size());
      grad.resize(t.slots.size());
      for (std::size_t q = 0; q < t.slots.size(); ++q) zq[q] = z[t.slots[q]];
      r += t.coeff * t.op->F(zq, t.x);
      t.op->dF(zq, t.x, grad);
      for (std::size_t q = 0; q < t.slots.size(); ++q) out.dr_dz(i, t.slots[q]) += t.coeff * grad[q];
    }
    out.residual[i] = r;
  }
  return out;
}

ResidualJacobian residual_and_jacobian(const RecoveryProblem& problem, const Eigen::VectorXd& lambda) {
  if (lambda.size() != problem.basis_size()) throw InputError("coefficient vector has the wrong size");
  const Eigen::MatrixXd& k = problem.gram.regularized();
  const Eigen::VectorXd z = k * lambda;
  auto lin = linearize_constraints(problem, z);
  return {std::move(lin.residual), lin.dr_dz * k};
}

}  // namespace optrec
