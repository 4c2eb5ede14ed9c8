#include "optrec/kernel.hpp"

#include <cmath>
#include <string>

#include "optrec/errors.hpp"

namespace optrec {
namespace {

// Derivatives f^(k)(rho), k = 0..4, of the radial profile in rho = |x - y|^2.
struct Profile {
  double f0, f1, f2, f3, f4;
};

Profile radial_profile(const KernelSpec& spec, double rho) noexcept {
  const double a = spec.amplitude;
  const double l2 = spec.lengthscale * spec.lengthscale;
  if (spec.family == KernelFamily::Gaussian) {
    const double c = -0.5 / l2;
    const double e = a * std::exp(c * rho);
    return {e, c * e, c * c * e, c * c * c * e, c * c * c * c * e};
  }
  // (1 + rho/l^2)^(-1/2): the k-th derivative is (-1/2)_k (1 + rho/l^2)^(-1/2-k) / l^(2k).
  const double t = 1.0 + rho / l2;
  const double inv_t = 1.0 / t;
  const double g0 = a / std::sqrt(t);
  const double g1 = -0.5 * g0 * inv_t / l2;
  const double g2 = -1.5 * g1 * inv_t / l2;
  const double g3 = -2.5 * g2 * inv_t / l2;
  const double g4 = -3.5 * g3 * inv_t / l2;
  return {g0, g1, g2, g3, g4};
}

double dot(const std::array<double, 2>& v, const double* d, int dim) noexcept {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += v[static_cast<std::size_t>(i)] * d[i];
  return s;
}

void check_dim(const KernelSpec& spec, const Point& p, const char* what) {
  if (p.dim() != spec.dim) {
    throw InputError(std::string(what) + " has dimension " + std::to_string(p.dim()) +
                     " but the kernel has dimension " + std::to_string(spec.dim));
  }
}

void check_op(const KernelSpec& spec, const OperatorTag& op) {
  if (!op.is_directional()) return;
  for (int i = spec.dim; i < Point::kMaxDim; ++i) {
    if (op.direction()[static_cast<std::size_t>(i)] != 0.0) {
      throw CapabilityError(std::string(to_string(op.kind())) +
                            " direction has components outside the kernel dimension " +
                            std::to_string(spec.dim));
    }
  }
}

}  // namespace

void KernelSpec::validate() const {
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw InputError("kernel.lengthscale must be positive, got " + std::to_string(lengthscale));
  }
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
    throw InputError("kernel.amplitude must be positive, got " + std::to_string(amplitude));
  }
  if (dim != 1 && dim != 2) {
    throw InputError("kernel.dim must be 1 or 2, got " + std::to_string(dim));
  }
}

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::InverseMultiquadric: return "inverse_multiquadric";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "gaussian") return KernelFamily::Gaussian;
  if (name == "inverse_multiquadric") return KernelFamily::InverseMultiquadric;
  throw InputError("unknown kernel family '" + std::string(name) + "'");
}

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Identity: return "identity";
    case OperatorKind::NegLaplacian: return "neg_laplacian";
    case OperatorKind::NormalDerivative: return "normal_derivative";
    case OperatorKind::Gradient: return "gradient";
  }
  return "unknown";
}

OperatorTag OperatorTag::normal_derivative(const Point& normal) {
  double n2 = 0.0;
  for (int i = 0; i < normal.dim(); ++i) n2 += normal[i] * normal[i];
  if (std::abs(std::sqrt(n2) - 1.0) > 1e-12) {
    throw InputError("normal derivative direction must have unit length");
  }
  return OperatorTag(OperatorKind::NormalDerivative, {normal[0], normal.dim() > 1 ? normal[1] : 0.0});
}

OperatorTag OperatorTag::gradient(int component) {
  if (component < 0 || component >= Point::kMaxDim) {
    throw InputError("gradient component out of range: " + std::to_string(component));
  }
  std::array<double, 2> dir{};
  dir[static_cast<std::size_t>(component)] = 1.0;
  return OperatorTag(OperatorKind::Gradient, dir);
}

int OperatorTag::order() const noexcept {
  switch (kind_) {
    case OperatorKind::Identity: return 0;
    case OperatorKind::NegLaplacian: return 2;
    case OperatorKind::NormalDerivative:
    case OperatorKind::Gradient: return 1;
  }
  return 0;
}

double eval_kernel(const KernelSpec& spec, const Point& x, const Point& y) {
  check_dim(spec, x, "x");
  check_dim(spec, y, "y");
  double rho = 0.0;
  for (int i = 0; i < spec.dim; ++i) rho += (x[i] - y[i]) * (x[i] - y[i]);
  return radial_profile(spec, rho).f0;
}

double apply_operators(const KernelSpec& spec, const OperatorTag& opL, const OperatorTag& opR,
                       const Point& x, const Point& y) {
  check_dim(spec, x, "x");
  check_dim(spec, y, "y");
  check_op(spec, opL);
  check_op(spec, opR);
  return detail::apply_operators_unchecked(spec, opL, opR, x, y);
}

double pair_functionals(const KernelSpec& spec, const Functional& a, const Functional& b) {
  detail::check_functional(spec, a);
  detail::check_functional(spec, b);
  double s = 0.0;
  for (const auto& ta : a.terms) {
    for (const auto& tb : b.terms) {
      s += ta.weight * tb.weight *
           detail::apply_operators_unchecked(spec, ta.atom.op, tb.atom.op, ta.atom.point,
                                             tb.atom.point);
    }
  }
  return s;
}

namespace detail {

void check_functional(const KernelSpec& spec, const Functional& f) {
  for (const auto& t : f.terms) {
    check_dim(spec, t.atom.point, "functional point");
    check_op(spec, t.atom.op);
  }
}

double apply_operators_unchecked(const KernelSpec& spec, const OperatorTag& opL,
                                 const OperatorTag& opR, const Point& x, const Point& y) noexcept {
  const int dim = spec.dim;
  double d[2] = {0.0, 0.0};
  double rho = 0.0;
  for (int i = 0; i < dim; ++i) {
    d[i] = x[i] - y[i];
    rho += d[i] * d[i];
  }
  const Profile p = radial_profile(spec, rho);
  const double D = dim;
  // Laplacian of the profile in d, and its rho-derivative.
  const double lap = 4.0 * rho * p.f2 + 2.0 * D * p.f1;
  const double lap_prime = (4.0 + 2.0 * D) * p.f2 + 4.0 * rho * p.f3;

  const OperatorKind kl = opL.kind();
  const OperatorKind kr = opR.kind();
  const bool dl = opL.is_directional();
  const bool dr = opR.is_directional();

  if (kl == OperatorKind::Identity && kr == OperatorKind::Identity) return p.f0;
  if (kl == OperatorKind::Identity && dr) return -2.0 * p.f1 * dot(opR.direction(), d, dim);
  if (dl && kr == OperatorKind::Identity) return 2.0 * p.f1 * dot(opL.direction(), d, dim);
  if ((kl == OperatorKind::Identity && kr == OperatorKind::NegLaplacian) ||
      (kl == OperatorKind::NegLaplacian && kr == OperatorKind::Identity)) {
    return -lap;
  }
  if (dl && dr) {
    const double vd = dot(opL.direction(), d, dim);
    const double wd = dot(opR.direction(), d, dim);
    double vw = 0.0;
    for (std::size_t i = 0; i < 2; ++i) vw += opL.direction()[i] * opR.direction()[i];
    return -(4.0 * p.f2 * vd * wd + 2.0 * p.f1 * vw);
  }
  if (dl && kr == OperatorKind::NegLaplacian) {
    return -2.0 * lap_prime * dot(opL.direction(), d, dim);
  }
  if (kl == OperatorKind::NegLaplacian && dr) {
    return 2.0 * lap_prime * dot(opR.direction(), d, dim);
  }
  // NegLaplacian in both arguments: the bi-Laplacian of the profile.
  return 16.0 * rho * rho * p.f4 + (32.0 + 16.0 * D) * rho * p.f3 + (8.0 * D + 4.0 * D * D) * p.f2;
}

}  // namespace detail
}  // namespace optrec
