#pragma once

#include <array>
#include <compare>
#include <span>

namespace optrec {

/// A coordinate in R^1 or R^2. Unused trailing components stay zero.
class Point {
 public:
  static constexpr int kMaxDim = 2;

  Point() = default;
  explicit Point(double x) : c_{x, 0.0}, dim_(1) {}
  Point(double x, double y) : c_{x, y}, dim_(2) {}
  /// Throws InputError unless coords has 1 or 2 entries.
  static Point from(std::span<const double> coords);

  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] double operator[](int i) const noexcept { return c_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) noexcept { return c_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] std::span<const double> coords() const noexcept {
    return {c_.data(), static_cast<std::size_t>(dim_)};
  }

  friend auto operator<=>(const Point&, const Point&) = default;

 private:
  std::array<double, kMaxDim> c_{};
  int dim_ = 1;
};

/// Axis-aligned box [lo, hi]; an interval in 1D.
struct Box {
  Point lo;
  Point hi;

  [[nodiscard]] int dim() const noexcept { return lo.dim(); }
  [[nodiscard]] double measure() const noexcept;
  [[nodiscard]] bool contains(const Point& p, double tol = 1e-14) const noexcept;
  /// True when p lies in the closed box and on one of its faces.
  [[nodiscard]] bool on_boundary(const Point& p, double tol = 1e-14) const noexcept;

  static Box unit(int dim);
};

}  // namespace optrec
