#include "optrec/kernel_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "optrec/errors.hpp"

namespace optrec {
namespace {

using ScalarOfPoint = std::function<double(const Point&)>;

Point shifted(const Point& p, const std::array<double, 2>& dir, double h) {
  Point q = p;
  for (int i = 0; i < p.dim(); ++i) q[i] += h * dir[static_cast<std::size_t>(i)];
  return q;
}

/// Two levels of Richardson extrapolation for a symmetric O(h^2) estimate.
double richardson(const std::function<double(double)>& estimate, double h) {
  const double e1 = estimate(h), e2 = estimate(0.5 * h), e4 = estimate(0.25 * h);
  const double r1 = (4.0 * e2 - e1) / 3.0;
  const double r2 = (4.0 * e4 - e2) / 3.0;
  return (16.0 * r2 - r1) / 15.0;
}

double apply_fd(const OperatorTag& op, const ScalarOfPoint& g, const Point& p, double h) {
  switch (op.kind()) {
    case OperatorKind::Identity:
      return g(p);
    case OperatorKind::NormalDerivative:
    case OperatorKind::Gradient: {
      const auto& v = op.direction();
      return richardson(
          [&](double s) { return (g(shifted(p, v, s)) - g(shifted(p, v, -s))) / (2.0 * s); }, h);
    }
    case OperatorKind::NegLaplacian: {
      double lap = 0.0;
      for (int c = 0; c < p.dim(); ++c) {
        std::array<double, 2> e{};
        e[static_cast<std::size_t>(c)] = 1.0;
        lap += richardson(
            [&](double s) {
              return (g(shifted(p, e, s)) - 2.0 * g(p) + g(shifted(p, e, -s))) / (s * s);
            },
            h);
      }
      return -lap;
    }
  }
  throw CapabilityError("unknown operator kind");
}

}  // namespace

double finite_difference_operators(const KernelSpec& spec, const OperatorTag& opL,
                                   const OperatorTag& opR, const Point& x, const Point& y,
                                   double relative_step) {
  const double h = relative_step * spec.lengthscale;
  const ScalarOfPoint right_applied = [&](const Point& xx) {
    return apply_fd(opR, [&](const Point& yy) { return eval_kernel(spec, xx, yy); }, y, h);
  };
  return apply_fd(opL, right_applied, x, h);
}

bool KernelCheckReport::all_passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const KernelCheckRow& r) { return r.passed; });
}

std::vector<OperatorTag> operators_under_test(int dim) {
  std::vector<OperatorTag> ops{OperatorTag::identity(), OperatorTag::neg_laplacian()};
  for (int c = 0; c < dim; ++c) ops.push_back(OperatorTag::gradient(c));
  if (dim == 1) {
    ops.push_back(OperatorTag::normal_derivative(Point(-1.0)));
  } else {
    ops.push_back(OperatorTag::normal_derivative(Point(0.6, -0.8)));
  }
  return ops;
}

std::string describe(const OperatorTag& op) {
  std::string s(to_string(op.kind()));
  if (op.is_directional()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "(%g,%g)", op.direction()[0], op.direction()[1]);
    s += buf;
  }
  return s;
}

KernelCheckReport check_kernel_derivatives(const KernelSpec& spec, int trials, std::uint64_t seed,
                                           double tolerance, const OperatorPairEvaluator& evaluator) {
  spec.validate();
  if (trials < 1) throw InputError("kernel check needs at least one trial");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> offset(-2.0, 2.0);

  std::vector<std::pair<Point, Point>> pairs;
  pairs.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    Point x = spec.dim == 1 ? Point(unit(rng)) : Point(unit(rng), unit(rng));
    Point y = x;
    for (int i = 0; i < spec.dim; ++i) y[i] += spec.lengthscale * offset(rng);
    pairs.emplace_back(x, y);
  }

  KernelCheckReport report;
  const auto ops = operators_under_test(spec.dim);
  for (const auto& left : ops) {
    for (const auto& right : ops) {
      KernelCheckRow row{describe(left), describe(right)};
      std::vector<double> exact;
      std::vector<double> approx;
      try {
        for (const auto& [x, y] : pairs) {
          exact.push_back(evaluator(spec, left, right, x, y));
          approx.push_back(finite_difference_operators(spec, left, right, x, y));
        }
      } catch (const CapabilityError&) {
        row.supported = false;
        row.passed = true;
        report.rows.push_back(row);
        continue;
      }
      double scale = 0.0;
      for (double a : approx) scale = std::max(scale, std::abs(a));
      for (std::size_t k = 0; k < exact.size(); ++k) {
        const double denom = std::max({std::abs(approx[k]), scale, 1e-300});
        row.max_rel_error = std::max(row.max_rel_error, std::abs(exact[k] - approx[k]) / denom);
      }
      row.passed = std::isfinite(row.max_rel_error) && row.max_rel_error <= tolerance;
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace optrec
