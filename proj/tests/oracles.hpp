#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "optrec/kernel.hpp"

namespace optrec::testing {

/// Probabilists' Hermite polynomial He_n(s).
inline double hermite(int n, double s) {
  double h0 = 1.0, h1 = s;
  if (n == 0) return h0;
  for (int k = 1; k < n; ++k) {
    const double h2 = s * h1 - k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

/// 1D Gaussian kernel with operators applied, written through
/// d^n/ds^n exp(-s^2/2) = (-1)^n He_n(s) exp(-s^2/2), s = (x - y)/l.
/// Only Identity, NegLaplacian and Gradient(0) are handled.
inline double gaussian_1d(const OperatorTag& left, const OperatorTag& right, double x, double y, double l,
                          double a = 1.0) {
  auto order = [](const OperatorTag& op) {
    switch (op.kind()) {
      case OperatorKind::Identity: return 0;
      case OperatorKind::NegLaplacian: return 2;
      default: return 1;
    }
  };
  auto sign = [](const OperatorTag& op, bool in_y) {
    switch (op.kind()) {
      case OperatorKind::Identity: return 1.0;
      case OperatorKind::NegLaplacian: return -1.0;
      default: return in_y ? -op.direction()[0] : op.direction()[0];
    }
  };
  const int n = order(left) + order(right);
  const double s = (x - y) / l;
  const double dn = ((n % 2) ? -1.0 : 1.0) * hermite(n, s) * std::exp(-0.5 * s * s);
  return a * sign(left, false) * sign(right, true) * dn / std::pow(l, n);
}

/// Finite-difference solution of -u'' + u^3 = f on [0,1], u(0) = u(1) = 0,
/// by Newton's method with a tridiagonal (Thomas) solve. Returns nodal values
/// on cells + 1 uniform nodes.
inline std::vector<double> fd_cubic_dirichlet(const std::function<double(double)>& f, int cells) {
  const int n = cells - 1;
  const double h = 1.0 / cells;
  const double h2 = h * h;
  std::vector<double> u(static_cast<std::size_t>(cells + 1), 0.0);
  std::vector<double> fx(u.size()), res(static_cast<std::size_t>(n)), diag(res.size()), c(res.size()),
      d(res.size());
  for (int i = 0; i <= cells; ++i) fx[static_cast<std::size_t>(i)] = f(i * h);
  for (int it = 0; it < 50; ++it) {
    double norm = 0.0;
    for (int i = 1; i <= n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      res[k - 1] = (2.0 * u[k] - u[k - 1] - u[k + 1]) / h2 + u[k] * u[k] * u[k] - fx[k];
      diag[k - 1] = 2.0 / h2 + 3.0 * u[k] * u[k];
      norm = std::max(norm, std::abs(res[k - 1]));
    }
    if (norm < 1e-10) break;
    // Thomas algorithm with off-diagonals -1/h^2.
    const double off = -1.0 / h2;
    c[0] = off / diag[0];
    d[0] = -res[0] / diag[0];
    for (std::size_t i = 1; i < res.size(); ++i) {
      const double m = diag[i] - off * c[i - 1];
      c[i] = off / m;
      d[i] = (-res[i] - off * d[i - 1]) / m;
    }
    for (std::size_t i = res.size(); i-- > 0;) {
      if (i + 1 < res.size()) d[i] -= c[i] * d[i + 1];
      u[i + 1] += d[i];
    }
  }
  return u;
}

/// Piecewise-linear interpolation of nodal values on [0,1].
inline double interpolate(const std::vector<double>& u, double x) {
  const int cells = static_cast<int>(u.size()) - 1;
  const double t = std::clamp(x, 0.0, 1.0) * cells;
  const int i = std::min(static_cast<int>(t), cells - 1);
  const double w = t - i;
  return (1.0 - w) * u[static_cast<std::size_t>(i)] + w * u[static_cast<std::size_t>(i + 1)];
}

}  // namespace optrec::testing
