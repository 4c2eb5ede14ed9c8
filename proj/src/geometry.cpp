#include "optrec/geometry.hpp"

#include <cmath>
#include <string>

#include "optrec/errors.hpp"

namespace optrec {

Point Point::from(std::span<const double> coords) {
  if (coords.size() == 1) return Point(coords[0]);
  if (coords.size() == 2) return Point(coords[0], coords[1]);
  throw InputError("point must have 1 or 2 coordinates, got " + std::to_string(coords.size()));
}

double Box::measure() const noexcept {
  double m = 1.0;
  for (int i = 0; i < dim(); ++i) m *= hi[i] - lo[i];
  return m;
}

bool Box::contains(const Point& p, double tol) const noexcept {
  if (p.dim() != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (p[i] < lo[i] - tol || p[i] > hi[i] + tol) return false;
  }
  return true;
}

bool Box::on_boundary(const Point& p, double tol) const noexcept {
  if (!contains(p, tol)) return false;
  for (int i = 0; i < dim(); ++i) {
    if (std::abs(p[i] - lo[i]) <= tol || std::abs(p[i] - hi[i]) <= tol) return true;
  }
  return false;
}

Box Box::unit(int dim) {
  if (dim == 1) return Box{Point(0.0), Point(1.0)};
  if (dim == 2) return Box{Point(0.0, 0.0), Point(1.0, 1.0)};
  throw InputError("dimension must be 1 or 2");
}

}  // namespace optrec
