#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "optrec/geometry.hpp"

namespace optrec {

enum class KernelFamily { Gaussian, InverseMultiquadric };

/// Radial reproducing kernel k(x,y) = amplitude * profile(|x-y|^2 / lengthscale^2).
///
/// Gaussian:            a * exp(-r^2 / (2 l^2))
/// InverseMultiquadric: a * (1 + r^2 / l^2)^(-1/2)
///
/// Both are infinitely differentiable, so every operator pair below exists.
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double lengthscale = 1.0;
  double amplitude = 1.0;
  int dim = 1;

  /// Throws InputError on non-positive hyperparameters or dim outside {1,2}.
  void validate() const;
};

std::string_view to_string(KernelFamily family);
/// Accepts "gaussian" and "inverse_multiquadric" (case-sensitive). Throws InputError.
KernelFamily kernel_family_from_string(std::string_view name);

enum class OperatorKind {
  Identity,
  NegLaplacian,
  /// Directional derivative along an outward unit normal.
  NormalDerivative,
  /// Partial derivative along a coordinate axis; used by weak-form pairings.
  Gradient,
};

/// A linear differential operator applied to one kernel argument.
class OperatorTag {
 public:
  OperatorTag() = default;

  static OperatorTag identity() { return OperatorTag(OperatorKind::Identity, {}); }
  static OperatorTag neg_laplacian() { return OperatorTag(OperatorKind::NegLaplacian, {}); }
  /// Throws InputError unless |normal| = 1 within 1e-12.
  static OperatorTag normal_derivative(const Point& normal);
  /// Throws InputError for component outside [0, Point::kMaxDim).
  static OperatorTag gradient(int component);

  [[nodiscard]] OperatorKind kind() const noexcept { return kind_; }
  /// Derivative direction; meaningful only for NormalDerivative and Gradient.
  [[nodiscard]] const std::array<double, 2>& direction() const noexcept { return dir_; }
  [[nodiscard]] bool is_directional() const noexcept {
    return kind_ == OperatorKind::NormalDerivative || kind_ == OperatorKind::Gradient;
  }
  /// Differential order of the operator (0, 1 or 2).
  [[nodiscard]] int order() const noexcept;

  friend auto operator<=>(const OperatorTag&, const OperatorTag&) = default;

 private:
  OperatorTag(OperatorKind kind, std::array<double, 2> dir) : kind_(kind), dir_(dir) {}

  OperatorKind kind_ = OperatorKind::Identity;
  std::array<double, 2> dir_{};
};

std::string_view to_string(OperatorKind kind);

/// "Apply op, then evaluate at point" on subdomain domain_tag.
struct OperatorFunctional {
  OperatorTag op;
  Point point;
  int domain_tag = 0;

  friend auto operator<=>(const OperatorFunctional&, const OperatorFunctional&) = default;
};

/// A finite weighted sum of operator functionals. Quadrature-realized pairings
/// such as the weak Laplacian are composites; point functionals have one term.
struct Functional {
  struct Term {
    OperatorFunctional atom;
    double weight = 1.0;

    friend auto operator<=>(const Term&, const Term&) = default;
  };

  std::vector<Term> terms;

  static Functional single(OperatorFunctional atom) { return Functional{{Term{atom, 1.0}}}; }
  static Functional single(OperatorTag op, const Point& x, int domain_tag = 0) {
    return single(OperatorFunctional{op, x, domain_tag});
  }

  friend auto operator<=>(const Functional&, const Functional&) = default;
};

/// k(x, y). Throws InputError if x or y do not have spec.dim coordinates.
double eval_kernel(const KernelSpec& spec, const Point& x, const Point& y);

/// (opL in the first argument)(opR in the second argument) k, evaluated at (x, y).
/// Throws InputError on dimension mismatch and CapabilityError when a
/// directional operator points outside the kernel's dimension.
double apply_operators(const KernelSpec& spec, const OperatorTag& opL, const OperatorTag& opR,
                       const Point& x, const Point& y);

/// <psi_a, psi_b>_U for two (possibly composite) functionals.
double pair_functionals(const KernelSpec& spec, const Functional& a, const Functional& b);

namespace detail {

/// Unchecked hot-path variant of apply_operators.
double apply_operators_unchecked(const KernelSpec& spec, const OperatorTag& opL,
                                 const OperatorTag& opR, const Point& x, const Point& y) noexcept;

/// Validates dimensions and operator directions of every term against spec.
void check_functional(const KernelSpec& spec, const Functional& f);

}  // namespace detail
}  // namespace optrec
