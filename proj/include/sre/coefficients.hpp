#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "sre/errors.hpp"

namespace sre {

struct Interval {
  double lo;
  double hi;
};

/// A diffusion coefficient with its first two derivatives and the declared
/// regularity constants: delta in (0,1] with delta < value < 1/delta, and
/// max(|first|, |second|) < L, both strict.
class CoefficientSpec {
 public:
  using Fn = std::function<double(double)>;

  CoefficientSpec(std::string name, Fn value, Fn deriv1, Fn deriv2, double declared_delta,
                  double declared_L, bool constant = false)
      : name_(std::move(name)),
        value_(std::move(value)),
        deriv1_(std::move(deriv1)),
        deriv2_(std::move(deriv2)),
        delta_(declared_delta),
        L_(declared_L),
        constant_(constant) {
    if (!(delta_ > 0.0) || delta_ > 1.0)
      throw DomainError("CoefficientSpec: declared delta must lie in (0,1]");
    if (!(L_ > 0.0)) throw DomainError("CoefficientSpec: declared L must be positive");
  }

  double value(double x) const { return value_(x); }
  double deriv1(double x) const { return deriv1_(x); }
  double deriv2(double x) const { return deriv2_(x); }

  double declared_delta() const { return delta_; }
  double declared_L() const { return L_; }
  const std::string& name() const { return name_; }

  // True for coefficients known constant in space; lets hot loops skip the
  // inverse-transform machinery (drift vanishes, the transform is linear).
  bool is_constant() const { return constant_; }

  // Same functions under different declared bounds (monotonicity tests,
  // deliberately failing certifications).
  CoefficientSpec with_declared(double delta, double L) const {
    return CoefficientSpec(name_, value_, deriv1_, deriv2_, delta, L, constant_);
  }

  static CoefficientSpec constant(double c, double delta, double L) {
    return CoefficientSpec("constant(" + std::to_string(c) + ")",
                           [c](double) { return c; }, [](double) { return 0.0; },
                           [](double) { return 0.0; }, delta, L, true);
  }

  static CoefficientSpec sinusoidal(double a, double b, double omega, double delta, double L) {
    return CoefficientSpec(
        "sinusoidal(" + std::to_string(a) + "+" + std::to_string(b) + "*sin(" +
            std::to_string(omega) + "x))",
        [a, b, omega](double x) { return a + b * std::sin(omega * x); },
        [b, omega](double x) { return b * omega * std::cos(omega * x); },
        [b, omega](double x) { return -b * omega * omega * std::sin(omega * x); }, delta, L);
  }

  static CoefficientSpec logistic(double a, double b, double delta, double L) {
    return CoefficientSpec(
        "logistic(" + std::to_string(a) + "+" + std::to_string(b) + "*tanh(x))",
        [a, b](double x) { return a + b * std::tanh(x); },
        [b](double x) {
          const double c = std::cosh(x);
          return b / (c * c);
        },
        [b](double x) {
          const double c = std::cosh(x);
          return -2.0 * b * std::tanh(x) / (c * c);
        },
        delta, L);
  }

 private:
  std::string name_;
  Fn value_, deriv1_, deriv2_;
  double delta_;
  double L_;
  bool constant_;
};

/// Validated (delta, L) pair with the derived envelope constants
/// C1 = L/(4 delta) and C2 = L/(4 delta) + L^2/8: both directions bound
/// (1/2)|sigma sigma''| by L/(2 delta), the lower one also pays b^2 <= L^2/4.
struct RegularityCertificate {
  double delta;
  double L;
  double C1;
  double C2;
  Interval checked_domain;
  int grid_points;
};

inline double eval_coeff(const CoefficientSpec& spec, double x, int order) {
  switch (order) {
    case 0: return spec.value(x);
    case 1: return spec.deriv1(x);
    case 2: return spec.deriv2(x);
    default: throw DomainError("eval_coeff: order must be 0, 1 or 2");
  }
}

/// Checks the declared bounds on a uniform grid over `domain` and derives the
/// envelope constants. The grid check is a sanity filter: the declared
/// constants are trusted as analytic ground truth once no grid point
/// contradicts them. Bounds are strict with zero slack.
inline RegularityCertificate validate_assumption(const CoefficientSpec& spec, Interval domain,
                                                 int grid_points) {
  if (grid_points < 2) throw DomainError("validate_assumption: need at least 2 grid points");
  if (!(domain.lo < domain.hi)) throw DomainError("validate_assumption: degenerate domain");

  const double delta = spec.declared_delta();
  const double L = spec.declared_L();
  const double inv_delta = 1.0 / delta;
  const double step = (domain.hi - domain.lo) / (grid_points - 1);

  for (int i = 0; i < grid_points; ++i) {
    const double x = i + 1 == grid_points ? domain.hi : domain.lo + i * step;
    const double v = spec.value(x);
    if (!(v > delta))
      throw BoundViolation(x, BoundViolation::Which::value_below_delta, v,
                           spec.name() + ": value " + std::to_string(v) + " at x=" +
                               std::to_string(x) + " not above delta=" + std::to_string(delta));
    if (!(v < inv_delta))
      throw BoundViolation(x, BoundViolation::Which::value_above_inv_delta, v,
                           spec.name() + ": value " + std::to_string(v) + " at x=" +
                               std::to_string(x) + " not below 1/delta=" +
                               std::to_string(inv_delta));
    const double d = std::max(std::abs(spec.deriv1(x)), std::abs(spec.deriv2(x)));
    if (!(d < L))
      throw BoundViolation(x, BoundViolation::Which::derivative_at_L, d,
                           spec.name() + ": derivative bound " + std::to_string(d) + " at x=" +
                               std::to_string(x) + " not below L=" + std::to_string(L));
  }
  return RegularityCertificate{delta, L, L / (4.0 * delta),
                               L / (4.0 * delta) + L * L / 8.0, domain, grid_points};
}

/// Integrand of the entropy rate formula: u - 1 - log u. Nonnegative, strictly
/// convex, zero only at u = 1.
inline double gamma_integrand(double u) {
  if (!(u > 0.0)) throw DomainError("gamma_integrand: argument must be positive");
  return u - 1.0 - std::log(u);
}

}  // namespace sre
