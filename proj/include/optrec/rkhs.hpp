#pragma once

#include <vector>

#include <Eigen/Core>

#include "optrec/kernel.hpp"
#include "optrec/parallel.hpp"

namespace optrec {

/// u = sum_i coeffs_i psi_i, where psi_i represents basis[i].
struct RkhsFunction {
  std::vector<Functional> basis;
  Eigen::VectorXd coeffs;
  KernelSpec kernel;
};

/// (probe_op u)(x) = sum_i coeffs_i <L_probe delta_x, psi_i>.
double rkhs_eval(const RkhsFunction& fn, const OperatorTag& probe_op, const Point& x);

/// rkhs_eval at many points; the parallel path splits over points.
std::vector<double> rkhs_eval_many(const RkhsFunction& fn, const OperatorTag& probe_op,
                                   const std::vector<Point>& xs,
                                   Execution exec = Execution::Parallel);

/// sqrt(max(lambda^T K lambda, 0)) with the nugget-free Gram of fn.basis.
double rkhs_norm(const RkhsFunction& fn);

/// ||a - b||_U for functions over arbitrary (possibly different) bases.
double rkhs_distance(const RkhsFunction& a, const RkhsFunction& b);

}  // namespace optrec
