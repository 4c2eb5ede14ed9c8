#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "optrec/kernel.hpp"

namespace optrec {

/// Signature of apply_operators; lets the check run against alternative evaluators.
using OperatorPairEvaluator = std::function<double(const KernelSpec&, const OperatorTag&,
                                                   const OperatorTag&, const Point&, const Point&)>;

/// Richardson-extrapolated central differences of eval_kernel: opR is applied
/// in y, then opL in x. Step is a fraction of the lengthscale.
double finite_difference_operators(const KernelSpec& spec, const OperatorTag& opL,
                                   const OperatorTag& opR, const Point& x, const Point& y,
                                   double relative_step = 0.05);

struct KernelCheckRow {
  std::string left;
  std::string right;
  bool supported = true;
  /// max_k |closed_form - fd| / max(|fd|, scale) where scale is the largest
  /// |fd| seen for this pair over all trials.
  double max_rel_error = 0.0;
  bool passed = true;
};

struct KernelCheckReport {
  std::vector<KernelCheckRow> rows;
  [[nodiscard]] bool all_passed() const;
};

/// Operators exercised for a kernel of the given dimension: identity,
/// neg_laplacian, gradient along every axis and one oblique normal derivative.
std::vector<OperatorTag> operators_under_test(int dim);

/// Compares every (opL, opR) pair against the finite-difference oracle on
/// `trials` random point pairs. Pairs whose evaluator throws CapabilityError
/// are reported as unsupported rather than failed.
KernelCheckReport check_kernel_derivatives(const KernelSpec& spec, int trials = 100,
                                           std::uint64_t seed = 0, double tolerance = 1e-5,
                                           const OperatorPairEvaluator& evaluator = apply_operators);

std::string describe(const OperatorTag& op);

}  // namespace optrec
