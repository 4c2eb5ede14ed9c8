#include "optrec/measurements.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "optrec/errors.hpp"

namespace optrec {
namespace {

constexpr double kPi = std::numbers::pi;

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
void legendre_rule(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

// 1D composite rule over consecutive breakpoints.
void composite_1d(const std::vector<double>& breaks, int cells_per_piece, int order,
                  std::vector<double>& nodes, std::vector<double>& weights) {
  std::vector<double> gx;
  std::vector<double> gw;
  legendre_rule(order, gx, gw);
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p];
    const double b = breaks[p + 1];
    if (!(b > a)) continue;
    const double h = (b - a) / cells_per_piece;
    for (int c = 0; c < cells_per_piece; ++c) {
      const double mid = a + (c + 0.5) * h;
      for (std::size_t q = 0; q < gx.size(); ++q) {
        nodes.push_back(mid + 0.5 * h * gx[q]);
        weights.push_back(0.5 * h * gw[q]);
      }
    }
  }
}

Quadrature tensor(const std::vector<double>& x0, const std::vector<double>& w0,
                  const std::vector<double>& x1, const std::vector<double>& w1, int dim) {
  Quadrature q;
  if (dim == 1) {
    for (std::size_t i = 0; i < x0.size(); ++i) {
      q.nodes.emplace_back(x0[i]);
      q.weights.push_back(w0[i]);
    }
    return q;
  }
  for (std::size_t j = 0; j < x1.size(); ++j) {
    for (std::size_t i = 0; i < x0.size(); ++i) {
      q.nodes.emplace_back(x0[i], x1[j]);
      q.weights.push_back(w0[i] * w1[j]);
    }
  }
  return q;
}

double hat_1d(double x, double c, double w) { return std::max(0.0, 1.0 - std::abs(x - c) / w); }

double hat_1d_slope(double x, double c, double w) {
  const double r = std::abs(x - c);
  if (r >= w) return 0.0;
  if (x > c) return -1.0 / w;
  if (x < c) return 1.0 / w;
  return 0.0;
}

void check_domain(const Box& domain) {
  if (domain.dim() != 1 && domain.dim() != 2) throw InputError("domain must be 1D or 2D");
  if (domain.hi.dim() != domain.dim()) throw InputError("domain corners differ in dimension");
  for (int i = 0; i < domain.dim(); ++i) {
    if (!(domain.hi[i] > domain.lo[i])) throw InputError("domain must have positive extent");
  }
}

}  // namespace

std::string_view to_string(TestFamily family) {
  switch (family) {
    case TestFamily::FourierSine: return "fourier_sine";
    case TestFamily::HatFunction: return "hat";
    case TestFamily::DiracPoint: return "dirac";
  }
  return "unknown";
}

TestFunction TestFunction::fourier_sine(const Box& domain, std::array<int, 2> modes) {
  check_domain(domain);
  for (int i = 0; i < domain.dim(); ++i) {
    if (modes[static_cast<std::size_t>(i)] < 1) throw InputError("Fourier mode must be >= 1");
  }
  TestFunction t;
  t.family_ = TestFamily::FourierSine;
  t.domain_ = domain;
  t.modes_ = modes;
  t.point_ = domain.lo;
  return t;
}

TestFunction TestFunction::hat(const Box& domain, const Point& center,
                               std::array<double, 2> half_width) {
  check_domain(domain);
  if (!domain.contains(center)) throw InputError("hat center must lie in the closed domain");
  for (int i = 0; i < domain.dim(); ++i) {
    if (!(half_width[static_cast<std::size_t>(i)] > 0.0)) {
      throw InputError("hat half-width must be positive");
    }
  }
  TestFunction t;
  t.family_ = TestFamily::HatFunction;
  t.domain_ = domain;
  t.point_ = center;
  t.half_width_ = half_width;
  return t;
}

TestFunction TestFunction::dirac(const Box& domain, const Point& point) {
  check_domain(domain);
  if (!domain.contains(point)) throw InputError("Dirac point must lie in the closed domain");
  TestFunction t;
  t.family_ = TestFamily::DiracPoint;
  t.domain_ = domain;
  t.point_ = point;
  return t;
}

double TestFunction::value(const Point& x) const {
  switch (family_) {
    case TestFamily::FourierSine: {
      double v = 1.0;
      for (int i = 0; i < dim(); ++i) {
        const double len = domain_.hi[i] - domain_.lo[i];
        v *= std::sin(modes_[static_cast<std::size_t>(i)] * kPi * (x[i] - domain_.lo[i]) / len);
      }
      return v;
    }
    case TestFamily::HatFunction: {
      if (!domain_.contains(x)) return 0.0;
      double v = 1.0;
      for (int i = 0; i < dim(); ++i) v *= hat_1d(x[i], point_[i], half_width_[static_cast<std::size_t>(i)]);
      return v;
    }
    case TestFamily::DiracPoint:
      break;
  }
  throw CapabilityError("a Dirac point has no pointwise values");
}

std::array<double, 2> TestFunction::gradient(const Point& x) const {
  std::array<double, 2> g{};
  switch (family_) {
    case TestFamily::FourierSine: {
      for (int i = 0; i < dim(); ++i) {
        double v = 1.0;
        for (int j = 0; j < dim(); ++j) {
          const double len = domain_.hi[j] - domain_.lo[j];
          const double a = modes_[static_cast<std::size_t>(j)] * kPi / len;
          const double s = a * (x[j] - domain_.lo[j]);
          v *= (i == j) ? a * std::cos(s) : std::sin(s);
        }
        g[static_cast<std::size_t>(i)] = v;
      }
      return g;
    }
    case TestFamily::HatFunction: {
      if (!domain_.contains(x)) return g;
      for (int i = 0; i < dim(); ++i) {
        double v = 1.0;
        for (int j = 0; j < dim(); ++j) {
          const double w = half_width_[static_cast<std::size_t>(j)];
          v *= (i == j) ? hat_1d_slope(x[j], point_[j], w) : hat_1d(x[j], point_[j], w);
        }
        g[static_cast<std::size_t>(i)] = v;
      }
      return g;
    }
    case TestFamily::DiracPoint:
      break;
  }
  throw CapabilityError("a Dirac point has no gradient");
}

Box TestFunction::support() const {
  switch (family_) {
    case TestFamily::FourierSine:
      return domain_;
    case TestFamily::HatFunction: {
      Box b = domain_;
      for (int i = 0; i < dim(); ++i) {
        const double w = half_width_[static_cast<std::size_t>(i)];
        b.lo[i] = std::max(domain_.lo[i], point_[i] - w);
        b.hi[i] = std::min(domain_.hi[i], point_[i] + w);
      }
      return b;
    }
    case TestFamily::DiracPoint:
      return Box{point_, point_};
  }
  return domain_;
}

std::array<std::vector<double>, 2> TestFunction::breakpoints() const {
  std::array<std::vector<double>, 2> br;
  const Box s = support();
  for (int i = 0; i < dim(); ++i) {
    auto& axis = br[static_cast<std::size_t>(i)];
    axis.push_back(s.lo[i]);
    if (family_ == TestFamily::HatFunction && point_[i] > s.lo[i] && point_[i] < s.hi[i]) {
      axis.push_back(point_[i]);
    }
    axis.push_back(s.hi[i]);
  }
  return br;
}

bool TestFunction::vanishes_on_boundary() const {
  switch (family_) {
    case TestFamily::FourierSine:
      return true;
    case TestFamily::HatFunction: {
      for (int i = 0; i < dim(); ++i) {
        const double w = half_width_[static_cast<std::size_t>(i)];
        if (point_[i] - w < domain_.lo[i] || point_[i] + w > domain_.hi[i]) return false;
      }
      return true;
    }
    case TestFamily::DiracPoint:
      return !domain_.on_boundary(point_);
  }
  return true;
}

double Quadrature::integrate(const ScalarField& g) const {
  double s = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) s += weights[j] * g(nodes[j]);
  return s;
}

Quadrature gauss_legendre(const std::array<std::vector<double>, 2>& breaks, int dim,
                          int cells_per_piece, int order) {
  if (cells_per_piece < 1 || order < 1) throw InputError("quadrature needs at least one cell and node");
  std::vector<double> x0, w0, x1, w1;
  composite_1d(breaks[0], cells_per_piece, order, x0, w0);
  if (dim == 2) composite_1d(breaks[1], cells_per_piece, order, x1, w1);
  return tensor(x0, w0, x1, w1, dim);
}

Quadrature gauss_legendre(const Box& box, int cells, int order) {
  std::array<std::vector<double>, 2> br;
  for (int i = 0; i < box.dim(); ++i) br[static_cast<std::size_t>(i)] = {box.lo[i], box.hi[i]};
  return gauss_legendre(br, box.dim(), cells, order);
}

Quadrature midpoint_rule(const Box& box, int m) {
  if (m < 1) throw InputError("midpoint rule needs at least one cell");
  std::array<std::vector<double>, 2> x, w;
  for (int i = 0; i < box.dim(); ++i) {
    const double h = (box.hi[i] - box.lo[i]) / m;
    for (int k = 0; k < m; ++k) {
      x[static_cast<std::size_t>(i)].push_back(box.lo[i] + (k + 0.5) * h);
      w[static_cast<std::size_t>(i)].push_back(h);
    }
  }
  return tensor(x[0], w[0], x[1], w[1], box.dim());
}

Quadrature trapezoid_rule(const Box& box, int m) {
  if (m < 1) throw InputError("trapezoid rule needs at least one cell");
  std::array<std::vector<double>, 2> x, w;
  for (int i = 0; i < box.dim(); ++i) {
    const double h = (box.hi[i] - box.lo[i]) / m;
    for (int k = 0; k <= m; ++k) {
      x[static_cast<std::size_t>(i)].push_back(k == m ? box.hi[i] : box.lo[i] + k * h);
      w[static_cast<std::size_t>(i)].push_back((k == 0 || k == m) ? 0.5 * h : h);
    }
  }
  return tensor(x[0], w[0], x[1], w[1], box.dim());
}

Quadrature pairing_quadrature(const TestFunction& phi, int cells_per_piece) {
  if (phi.family() == TestFamily::DiracPoint) {
    return Quadrature{{phi.point()}, {1.0}};
  }
  return gauss_legendre(phi.breakpoints(), phi.dim(), cells_per_piece);
}

Quadrature boundary_quadrature(const Box& box, int cells_per_edge) {
  Quadrature q;
  if (box.dim() == 1) {
    q.nodes = {box.lo, box.hi};
    q.weights = {1.0, 1.0};
    return q;
  }
  std::vector<double> gx, gw;
  for (int axis = 0; axis < 2; ++axis) {
    const int other = 1 - axis;
    gx.clear();
    gw.clear();
    composite_1d({box.lo[axis], box.hi[axis]}, cells_per_edge, 5, gx, gw);
    for (double fixed : {box.lo[other], box.hi[other]}) {
      for (std::size_t k = 0; k < gx.size(); ++k) {
        Point p(0.0, 0.0);
        p[axis] = gx[k];
        p[other] = fixed;
        q.nodes.push_back(p);
        q.weights.push_back(gw[k]);
      }
    }
  }
  return q;
}

Point outward_normal(const Box& box, const Point& x) {
  constexpr double tol = 1e-12;
  for (int i = 0; i < box.dim(); ++i) {
    Point n = box.dim() == 1 ? Point(0.0) : Point(0.0, 0.0);
    if (std::abs(x[i] - box.lo[i]) <= tol) {
      n[i] = -1.0;
      return n;
    }
    if (std::abs(x[i] - box.hi[i]) <= tol) {
      n[i] = 1.0;
      return n;
    }
  }
  throw InputError("outward_normal: point is not on the boundary");
}

double pair_data(const ScalarField& f, const TestFunction& phi, const Quadrature& quad) {
  if (phi.family() == TestFamily::DiracPoint) return f(phi.point());
  double s = 0.0;
  for (std::size_t j = 0; j < quad.size(); ++j) {
    s += quad.weights[j] * f(quad.nodes[j]) * phi.value(quad.nodes[j]);
  }
  return s;
}

std::vector<Probe> default_probes(const Box& box) {
  check_domain(box);
  std::vector<Probe> probes;
  const int dim = box.dim();
  auto len = [&](int i) { return box.hi[i] - box.lo[i]; };
  // One trigonometric factor per axis: kind 0 = sin(k pi t), kind 1 = cos(k pi t).
  struct Factor {
    int kind;
    int k;
  };
  auto add = [&](std::array<Factor, 2> f) {
    double integral = 1.0;
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
      const auto& fi = f[static_cast<std::size_t>(i)];
      const double a = fi.k * kPi / len(i);
      integral *= (fi.kind == 1 && fi.k == 0) ? len(i) : 0.5 * len(i);
      s += a * a;
    }
    const double norm = std::sqrt(integral * (1.0 + s + s * s));
    Box b = box;
    probes.push_back(Probe{[f, b, dim](const Point& x) {
                             double v = 1.0;
                             for (int i = 0; i < dim; ++i) {
                               const auto& fi = f[static_cast<std::size_t>(i)];
                               const double t = fi.k * kPi * (x[i] - b.lo[i]) / (b.hi[i] - b.lo[i]);
                               v *= fi.kind == 0 ? std::sin(t) : std::cos(t);
                             }
                             return v;
                           },
                           norm});
  };
  if (dim == 1) {
    for (int k = 1; k <= 10; ++k) add({Factor{0, k}, Factor{0, 0}});
    for (int k = 0; k <= 9; ++k) add({Factor{1, k}, Factor{0, 0}});
  } else {
    for (int k = 1; k <= 3; ++k)
      for (int l = 1; l <= 3; ++l) add({Factor{0, k}, Factor{0, l}});
    for (int k = 0; k <= 2; ++k)
      for (int l = 0; l <= 2; ++l) add({Factor{1, k}, Factor{1, l}});
    add({Factor{0, 4}, Factor{0, 1}});
    add({Factor{1, 3}, Factor{1, 0}});
  }
  return probes;
}

double estimate_dual_error(const PointApproximation& approx, const TestFunction& phi,
                           const std::vector<Probe>& probes) {
  if (probes.empty()) throw InputError("estimate_dual_error: probe set is empty");
  if (approx.points.size() != approx.coeffs.size()) {
    throw InputError("estimate_dual_error: points and coefficients differ in length");
  }
  const Quadrature ref = pairing_quadrature(phi, 16);
  double worst = 0.0;
  for (const auto& p : probes) {
    if (!(p.norm > 0.0)) throw InputError("estimate_dual_error: probe with zero norm surrogate");
    double approx_pairing = 0.0;
    for (std::size_t m = 0; m < approx.points.size(); ++m) {
      approx_pairing += approx.coeffs[m] * p.g(approx.points[m]);
    }
    const double exact = pair_data(p.g, phi, ref);
    worst = std::max(worst, std::abs(approx_pairing - exact) / p.norm);
  }
  return worst;
}

PointApproximation approximate_test_function(const TestFunction& phi, int M,
                                             const std::vector<Probe>& probes) {
  if (M < 1) throw InputError("approximate_test_function: M must be >= 1, got " + std::to_string(M));
  PointApproximation approx;
  if (phi.family() == TestFamily::DiracPoint) {
    approx.points = {phi.point()};
    approx.coeffs = {1.0};
    approx.dual_error_estimate = 0.0;
    return approx;
  }
  const Quadrature q = midpoint_rule(phi.support(), M);
  for (std::size_t m = 0; m < q.size(); ++m) {
    approx.points.push_back(q.nodes[m]);
    approx.coeffs.push_back(q.weights[m] * phi.value(q.nodes[m]));
  }
  approx.dual_error_estimate = estimate_dual_error(approx, phi, probes);
  return approx;
}

PointApproximation approximate_test_function(const TestFunction& phi, int M) {
  if (phi.family() == TestFamily::DiracPoint) return approximate_test_function(phi, M, {});
  return approximate_test_function(phi, M, default_probes(phi.domain()));
}

double epsilon_schedule(double dual_error, double c_hat) {
  if (!(c_hat > 0.0)) throw InputError("epsilon_schedule: c_hat must be positive");
  if (!(dual_error >= 0.0)) throw InputError("epsilon_schedule: dual error must be nonnegative");
  return c_hat * dual_error;
}

}  // namespace optrec
