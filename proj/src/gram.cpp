#include "optrec/gram.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "optrec/errors.hpp"

namespace optrec {
namespace {

void fill_serial(const KernelSpec& spec, const std::vector<Functional>& a,
                 const std::vector<Functional>& b, Eigen::MatrixXd& out) {
  for (std::size_t j = 0; j < b.size(); ++j) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          pair_functionals(spec, a[i], b[j]);
    }
  }
}

void fill_parallel(const KernelSpec& spec, const std::vector<Functional>& a,
                   const std::vector<Functional>& b, Eigen::MatrixXd& out) {
  const auto rows = static_cast<std::int64_t>(a.size());
  const auto cols = static_cast<std::int64_t>(b.size());
  const std::int64_t total = rows * cols;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t k = 0; k < total; ++k) {
    const std::int64_t i = k % rows;
    const std::int64_t j = k / rows;
    out(i, j) = pair_functionals(spec, a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]);
  }
}

double smallest_ldlt_pivot(const Eigen::MatrixXd& m) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  return ldlt.vectorD().minCoeff();
}

}  // namespace

Eigen::MatrixXd gram_entries(const KernelSpec& spec, const std::vector<Functional>& basis,
                             Execution exec, double* asymmetry) {
  spec.validate();
  for (const auto& f : basis) detail::check_functional(spec, f);
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd k(n, n);
  if (exec == Execution::Serial) {
    fill_serial(spec, basis, basis, k);
  } else {
    fill_parallel(spec, basis, basis, k);
  }
  if (asymmetry != nullptr) {
    const double scale = n > 0 ? k.cwiseAbs().maxCoeff() : 0.0;
    const double skew = n > 0 ? (k - k.transpose()).cwiseAbs().maxCoeff() : 0.0;
    *asymmetry = scale > 0.0 ? skew / scale : 0.0;
  }
  const Eigen::MatrixXd sym = 0.5 * (k + k.transpose());
  return sym;
}

Eigen::MatrixXd cross_gram(const KernelSpec& spec, const std::vector<Functional>& a,
                           const std::vector<Functional>& b, Execution exec) {
  spec.validate();
  for (const auto& f : a) detail::check_functional(spec, f);
  for (const auto& f : b) detail::check_functional(spec, f);
  Eigen::MatrixXd k(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  if (exec == Execution::Serial) {
    fill_serial(spec, a, b, k);
  } else {
    fill_parallel(spec, a, b, k);
  }
  return k;
}

GramMatrix::GramMatrix(Eigen::MatrixXd entries, double nugget, double asymmetry)
    : entries_(std::move(entries)), nugget_(nugget), asymmetry_(asymmetry) {
  regularized_ = entries_;
  regularized_.diagonal().array() += nugget_;
  llt_.compute(regularized_);
  if (llt_.info() != Eigen::Success) {
    throw ConditioningError("Gram matrix is not positive definite with nugget " +
                                std::to_string(nugget_),
                            smallest_ldlt_pivot(regularized_));
  }
}

Eigen::VectorXd GramMatrix::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != size()) throw InputError("right-hand side size does not match the Gram matrix");
  return llt_.solve(rhs);
}

double GramMatrix::default_nugget(const Eigen::MatrixXd& entries) {
  if (entries.rows() == 0) return 0.0;
  return 1e-10 * entries.trace() / static_cast<double>(entries.rows());
}

GramMatrix gram(const KernelSpec& spec, const std::vector<Functional>& basis,
                std::optional<double> nugget, Execution exec) {
  if (basis.empty()) throw InputError("gram: basis must be nonempty");
  if (nugget && (!(*nugget >= 0.0) || !std::isfinite(*nugget))) {
    throw InputError("gram: nugget must be nonnegative");
  }
  double asym = 0.0;
  Eigen::MatrixXd k = gram_entries(spec, basis, exec, &asym);
  double shift = nugget.value_or(GramMatrix::default_nugget(k));
  constexpr int kRetries = 3;
  for (int attempt = 0;; ++attempt) {
    try {
      return GramMatrix(k, shift, asym);
    } catch (const ConditioningError& e) {
      if (attempt == kRetries) {
        throw ConditioningError("Gram factorization failed after " + std::to_string(kRetries) +
                                    " nugget escalations (last nugget " + std::to_string(shift) +
                                    ", smallest pivot " + std::to_string(e.smallest_pivot()) + ")",
                                e.smallest_pivot());
      }
      // Escalate from the default when the caller asked for no nugget at all.
      shift = shift > 0.0 ? 10.0 * shift : 10.0 * GramMatrix::default_nugget(k);
    }
  }
}

Eigen::VectorXd spd_solve_with_escalation(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs,
                                          double initial_shift, double* used_shift) {
  double shift = initial_shift;
  const double base = a.rows() > 0 ? std::max(1e-14 * a.diagonal().cwiseAbs().maxCoeff(), 1e-300) : 0.0;
  constexpr int kRetries = 3;
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd m = a;
    m.diagonal().array() += shift;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd x = llt.solve(rhs);
      // Two sweeps of iterative refinement against the shifted system.
      for (int sweep = 0; sweep < 2; ++sweep) {
        const Eigen::VectorXd res = rhs - m * x;
        x += llt.solve(res);
      }
      if (used_shift != nullptr) *used_shift = shift;
      return x;
    }
    if (attempt == kRetries) {
      const double pivot = smallest_ldlt_pivot(m);
      throw ConditioningError("linear system is not positive definite after shift " +
                                  std::to_string(shift) + " (smallest pivot " +
                                  std::to_string(pivot) + ")",
                              pivot);
    }
    shift = shift > 0.0 ? 10.0 * shift : base;
  }
}

}  // namespace optrec
