#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "optrec/geometry.hpp"

namespace optrec {

using ScalarField = std::function<double(const Point&)>;

enum class TestFamily { FourierSine, HatFunction, DiracPoint };

std::string_view to_string(TestFamily family);

/// A test function phi_n on a box domain.
///
/// FourierSine: prod_i sin(k_i pi (x_i - lo_i) / L_i), vanishing on the boundary.
/// HatFunction: prod_i max(0, 1 - |x_i - c_i| / w_i), truncated to the domain.
/// DiracPoint:  point evaluation at a location in the closed domain.
class TestFunction {
 public:
  static TestFunction fourier_sine(const Box& domain, std::array<int, 2> modes);
  static TestFunction hat(const Box& domain, const Point& center, std::array<double, 2> half_width);
  static TestFunction dirac(const Box& domain, const Point& point);

  [[nodiscard]] TestFamily family() const noexcept { return family_; }
  [[nodiscard]] const Box& domain() const noexcept { return domain_; }
  [[nodiscard]] int dim() const noexcept { return domain_.dim(); }
  /// Evaluation point of a DiracPoint, center of a HatFunction.
  [[nodiscard]] const Point& point() const noexcept { return point_; }
  [[nodiscard]] const std::array<int, 2>& modes() const noexcept { return modes_; }
  [[nodiscard]] const std::array<double, 2>& half_width() const noexcept { return half_width_; }

  /// phi(x); for DiracPoint this is undefined and throws CapabilityError.
  [[nodiscard]] double value(const Point& x) const;
  [[nodiscard]] std::array<double, 2> gradient(const Point& x) const;

  /// Closed box outside which phi vanishes (domain for FourierSine).
  [[nodiscard]] Box support() const;
  /// Per-axis breakpoints splitting the support into pieces on which phi is smooth.
  [[nodiscard]] std::array<std::vector<double>, 2> breakpoints() const;
  [[nodiscard]] bool vanishes_on_boundary() const;

 private:
  TestFamily family_ = TestFamily::DiracPoint;
  Box domain_;
  Point point_;
  std::array<int, 2> modes_{1, 1};
  std::array<double, 2> half_width_{0.0, 0.0};
};

struct Quadrature {
  std::vector<Point> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
  /// sum_j w_j g(x_j).
  [[nodiscard]] double integrate(const ScalarField& g) const;
};

/// Composite Gauss-Legendre rule (order points per cell and axis) on a
/// tensor grid whose axis i is split at breaks[i] and then into cells_per_piece cells.
Quadrature gauss_legendre(const std::array<std::vector<double>, 2>& breaks, int dim,
                          int cells_per_piece, int order = 5);
/// Composite Gauss-Legendre on cells x cells uniform cells of box.
Quadrature gauss_legendre(const Box& box, int cells, int order = 5);
/// Midpoint rule with m cells per axis.
Quadrature midpoint_rule(const Box& box, int m);
/// Trapezoid rule with m cells per axis (m + 1 nodes per axis).
Quadrature trapezoid_rule(const Box& box, int m);
/// Gauss-Legendre over phi's smooth pieces; exact up to quadrature order on each piece.
Quadrature pairing_quadrature(const TestFunction& phi, int cells_per_piece = 8);
/// Surface rule on the boundary of box: the two endpoints (weight 1) in 1D,
/// composite Gauss-Legendre on each edge in 2D.
Quadrature boundary_quadrature(const Box& box, int cells_per_edge = 16);

/// Outward unit normal at a boundary point (the first matching face in 2D corners).
Point outward_normal(const Box& box, const Point& x);

/// [f, phi] = sum_j w_j f(x_j) phi(x_j); f(point) for DiracPoint, ignoring quad.
double pair_data(const ScalarField& f, const TestFunction& phi, const Quadrature& quad);

/// Smooth probe field with a precomputed H^2-type norm surrogate
/// sqrt(int g^2 + |grad g|^2 + |Hess g|_F^2).
struct Probe {
  ScalarField g;
  double norm = 1.0;
};

/// Twenty trigonometric probes on box with analytic norms.
std::vector<Probe> default_probes(const Box& box);

/// sum_m c_m delta_{x_m} approximating a test function.
struct PointApproximation {
  std::vector<Point> points;
  std::vector<double> coeffs;
  double dual_error_estimate = 0.0;
};

/// max over probes of |sum_m c_m g(x_m) - [g, phi]| / ||g||.
/// Throws InputError for empty probes or a probe with zero norm.
double estimate_dual_error(const PointApproximation& approx, const TestFunction& phi,
                           const std::vector<Probe>& probes);

/// Midpoint nodes on phi's support (M per axis) with c_m = w_m phi(x_m).
/// DiracPoint returns itself with coefficient 1 and zero error.
/// Throws InputError for M < 1.
PointApproximation approximate_test_function(const TestFunction& phi, int M);
PointApproximation approximate_test_function(const TestFunction& phi, int M,
                                             const std::vector<Probe>& probes);

/// Relaxation tolerance eps = c_hat * dual_error. Throws InputError unless c_hat > 0.
double epsilon_schedule(double dual_error, double c_hat);

/// One measurement [F(u), phi] = target with |.| <= tolerance.
struct MeasurementTarget {
  TestFunction test_fn;
  double target = 0.0;
  double tolerance = 0.0;
  std::optional<PointApproximation> point_approx;

  [[nodiscard]] bool is_equality() const noexcept { return tolerance == 0.0; }
};

}  // namespace optrec
