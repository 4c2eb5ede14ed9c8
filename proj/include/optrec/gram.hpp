#pragma once

#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "optrec/kernel.hpp"
#include "optrec/parallel.hpp"

namespace optrec {

/// Raw pairwise inner products <psi_i, psi_j>_U, symmetrized.
/// If asymmetry is non-null it receives max|K - K^T| / max|K| measured
/// before symmetrization.
Eigen::MatrixXd gram_entries(const KernelSpec& spec, const std::vector<Functional>& basis,
                             Execution exec = Execution::Parallel, double* asymmetry = nullptr);

/// <psi_a_i, psi_b_j>_U for two different bases.
Eigen::MatrixXd cross_gram(const KernelSpec& spec, const std::vector<Functional>& a,
                           const std::vector<Functional>& b, Execution exec = Execution::Parallel);

/// Gram matrix of a representer basis with a nugget on the diagonal and a
/// cached Cholesky factorization of (entries + nugget * I). Immutable.
class GramMatrix {
 public:
  GramMatrix() = default;
  GramMatrix(Eigen::MatrixXd entries, double nugget, double asymmetry);

  [[nodiscard]] Eigen::Index size() const noexcept { return entries_.rows(); }
  /// Kernel inner products without the nugget.
  [[nodiscard]] const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  /// entries + nugget * I; the matrix every solver works with.
  [[nodiscard]] const Eigen::MatrixXd& regularized() const noexcept { return regularized_; }
  [[nodiscard]] double nugget() const noexcept { return nugget_; }
  [[nodiscard]] double asymmetry() const noexcept { return asymmetry_; }

  /// Solves (entries + nugget I) x = rhs with the cached factorization.
  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  /// 1e-10 * trace / size.
  static double default_nugget(const Eigen::MatrixXd& entries);

 private:
  Eigen::MatrixXd entries_;
  Eigen::MatrixXd regularized_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double nugget_ = 0.0;
  double asymmetry_ = 0.0;
};

/// Assembles and factors the Gram matrix of basis. With no nugget given the
/// default 1e-10 * trace / size is used. A failed factorization is retried with
/// 10x the nugget up to three times; then ConditioningError is thrown.
GramMatrix gram(const KernelSpec& spec, const std::vector<Functional>& basis,
                std::optional<double> nugget = std::nullopt, Execution exec = Execution::Parallel);

/// Symmetric positive-definite solve with the same escalation policy as gram().
/// Returns the solution and writes the shift actually used.
Eigen::VectorXd spd_solve_with_escalation(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs,
                                          double initial_shift, double* used_shift = nullptr);

}  // namespace optrec
