#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "optrec/gram.hpp"
#include "optrec/kernel.hpp"
#include "optrec/measurements.hpp"

namespace optrec {

/// Pointwise nonlinear operator F(L_1 u(x), ..., L_Q u(x), x) with its partials.
class PointwiseOp {
 public:
  using Map = std::function<double(std::span<const double> z, const Point& x)>;
  using Partials = std::function<void(std::span<const double> z, const Point& x, std::span<double> out)>;

  /// Checks dF against central differences of F on 100 seeded probes
  /// (z in [-2,2]^Q, x in [0,1]^dim); throws InputError on mismatch.
  PointwiseOp(std::vector<OperatorTag> ops, Map F, Partials dF, int dim);

  /// F(z) = z_1 for a single linear operator.
  static std::shared_ptr<const PointwiseOp> linear(OperatorTag op, int dim);
  /// F(z) = z_1 + z_2^3 with ops (NegLaplacian, Identity): -Lap u + u^3.
  static std::shared_ptr<const PointwiseOp> cubic_reaction_diffusion(int dim);
  /// F(z) = z_1^3 with ops (Identity): the nonlinear part of the cubic example.
  static std::shared_ptr<const PointwiseOp> cube(int dim);
  /// F(z) = sum_q z_q.
  static std::shared_ptr<const PointwiseOp> sum_of(std::vector<OperatorTag> ops, int dim);

  [[nodiscard]] int Q() const noexcept { return static_cast<int>(ops_.size()); }
  [[nodiscard]] const std::vector<OperatorTag>& ops() const noexcept { return ops_; }
  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] double F(std::span<const double> z, const Point& x) const { return F_(z, x); }
  void dF(std::span<const double> z, const Point& x, std::span<double> out) const { dF_(z, x, out); }

 private:
  std::vector<OperatorTag> ops_;
  Map F_;
  Partials dF_;
  int dim_;
};

using PointwiseOpPtr = std::shared_ptr<const PointwiseOp>;

/// [F(u), phi] = [L u, phi] + [F_hat(u), phi]; only F_hat is point-approximated.
struct DecomposedOp {
  OperatorTag linear;
  /// Null for a purely linear operator.
  PointwiseOpPtr nonlinear;
};

enum class Region { Interior, Boundary };

/// Operators per subdomain of a box: the open interior and/or its boundary.
struct MultiDomainOp {
  struct Subdomain {
    int tag = 0;
    Region region = Region::Interior;
    std::variant<PointwiseOpPtr, DecomposedOp, OperatorTag> op;
  };

  Box domain;
  std::vector<Subdomain> subdomains;
  /// Edge resolution of boundary pairings in 2D.
  int boundary_cells = 16;

  /// Throws InputError unless tags are unique and each region appears at most once.
  void validate() const;
};

enum class ProblemKind { Equality, Relaxed, Regularized };

/// One constraint: sum_lin coeff * z[basis] + sum_nl coeff * F(z[slots], x) - target,
/// with z = K lambda the values of the basis functionals.
struct Constraint {
  struct LinearTerm {
    Eigen::Index basis = 0;
    double coeff = 1.0;
  };
  struct NonlinearTerm {
    PointwiseOpPtr op;
    std::vector<Eigen::Index> slots;
    Point x;
    double coeff = 1.0;
  };

  std::vector<LinearTerm> linear;
  std::vector<NonlinearTerm> nonlinear;
  double target = 0.0;
  double tolerance = 0.0;
};

/// Assembled finite-dimensional recovery problem.
struct RecoveryProblem {
  KernelSpec kernel;
  std::vector<Functional> basis;
  GramMatrix gram;
  std::vector<Constraint> constraints;
  ProblemKind kind = ProblemKind::Equality;

  [[nodiscard]] Eigen::Index basis_size() const noexcept {
    return static_cast<Eigen::Index>(basis.size());
  }
  [[nodiscard]] Eigen::Index constraint_count() const noexcept {
    return static_cast<Eigen::Index>(constraints.size());
  }
  [[nodiscard]] Eigen::VectorXd tolerances() const;
  [[nodiscard]] Eigen::VectorXd targets() const;
};

struct AssemblyOptions {
  std::optional<double> nugget;
  bool deduplicate = true;
  Execution exec = Execution::Parallel;
};

/// F(u)(x_n) = targets_n at every point; basis {(ops[q], x_n)}.
RecoveryProblem assemble_point_problem(const PointwiseOpPtr& op, const std::vector<Point>& points,
                                       const std::vector<double>& targets, const KernelSpec& kernel,
                                       const AssemblyOptions& options = {});

/// |sum_m c_mn F(u)(x_mn) - target_n| <= tolerance_n.
RecoveryProblem assemble_relaxed_problem(const PointwiseOpPtr& op,
                                         const std::vector<MeasurementTarget>& measurements,
                                         const KernelSpec& kernel, const AssemblyOptions& options = {});

/// |[L u, phi_n] + sum_m c_mn F_hat(u)(x_mn) - target_n| <= tolerance_n, with the
/// linear pairing realized by quad as one composite functional per measurement.
RecoveryProblem assemble_decomposed_problem(const DecomposedOp& op,
                                            const std::vector<MeasurementTarget>& measurements,
                                            const Quadrature& quad, const KernelSpec& kernel,
                                            const AssemblyOptions& options = {});

/// Sum of per-subdomain pairings for each measurement. Dirac measurements are
/// routed to the subdomain containing their point.
RecoveryProblem assemble_multidomain_problem(const MultiDomainOp& op,
                                             const std::vector<MeasurementTarget>& measurements,
                                             const Quadrature& quad, const KernelSpec& kernel,
                                             const AssemblyOptions& options = {});

/// Same problem with kind Equality; throws InputError if any tolerance is nonzero.
RecoveryProblem as_equality(RecoveryProblem problem);

/// Residuals r(z) and their partials G = dr/dz at basis values z.
struct ConstraintLinearization {
  Eigen::VectorXd residual;
  Eigen::MatrixXd dr_dz;
};
ConstraintLinearization linearize_constraints(const RecoveryProblem& problem, const Eigen::VectorXd& z);

/// r(lambda) and J = dr/dlambda = G K, with z = K lambda and K the nugget-regularized Gram.
struct ResidualJacobian {
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
};
ResidualJacobian residual_and_jacobian(const RecoveryProblem& problem, const Eigen::VectorXd& lambda);

}  // namespace optrec
