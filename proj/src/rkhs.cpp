#include "optrec/rkhs.hpp"

#include <algorithm>
#include <cmath>

#include "optrec/errors.hpp"
#include "optrec/gram.hpp"

namespace optrec {
namespace {

void check_fn(const RkhsFunction& fn) {
  if (fn.coeffs.size() != static_cast<Eigen::Index>(fn.basis.size())) {
    throw InputError("RkhsFunction: coefficient count does not match basis size");
  }
}

double eval_unchecked(const RkhsFunction& fn, const OperatorTag& probe, const Point& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < fn.basis.size(); ++i) {
    const double c = fn.coeffs[static_cast<Eigen::Index>(i)];
    if (c == 0.0) continue;
    double v = 0.0;
    for (const auto& t : fn.basis[i].terms) {
      v += t.weight * detail::apply_operators_unchecked(fn.kernel, probe, t.atom.op, x, t.atom.point);
    }
    s += c * v;
  }
  return s;
}

}  // namespace

double rkhs_eval(const RkhsFunction& fn, const OperatorTag& probe_op, const Point& x) {
  check_fn(fn);
  detail::check_functional(fn.kernel, Functional::single(probe_op, x));
  return eval_unchecked(fn, probe_op, x);
}

std::vector<double> rkhs_eval_many(const RkhsFunction& fn, const OperatorTag& probe_op,
                                   const std::vector<Point>& xs, Execution exec) {
  check_fn(fn);
  for (const auto& x : xs) detail::check_functional(fn.kernel, Functional::single(probe_op, x));
  std::vector<double> out(xs.size());
  if (exec == Execution::Serial) {
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = eval_unchecked(fn, probe_op, xs[i]);
  } else {
    const auto n = static_cast<std::int64_t>(xs.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] = eval_unchecked(fn, probe_op, xs[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

double rkhs_norm(const RkhsFunction& fn) {
  check_fn(fn);
  if (fn.basis.empty()) return 0.0;
  const Eigen::MatrixXd k = gram_entries(fn.kernel, fn.basis);
  const double q = fn.coeffs.dot(k * fn.coeffs);
  return std::sqrt(std::max(q, 0.0));
}

double rkhs_distance(const RkhsFunction& a, const RkhsFunction& b) {
  check_fn(a);
  check_fn(b);
  RkhsFunction joint{a.basis, Eigen::VectorXd(a.coeffs.size() + b.coeffs.size()), a.kernel};
  joint.basis.insert(joint.basis.end(), b.basis.begin(), b.basis.end());
  joint.coeffs << a.coeffs, -b.coeffs;
  return rkhs_norm(joint);
}

}  // namespace optrec
