#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sre/coefficients.hpp"
#include "sre/errors.hpp"
#include "sre/quadrature.hpp"

namespace sre {

/// Geodesic distance induced by the coefficient: |integral of du/sigma(u)
/// from a to b|. Symmetric, zero iff a == b, and squeezed between
/// delta*|a-b| and |a-b|/delta.
inline double geodesic_distance(const CoefficientSpec& spec, double a, double b,
                                double quad_tol = 1e-10) {
  if (a == b) return 0.0;
  if (spec.is_constant()) return std::abs(b - a) / spec.value(0.0);
  return std::abs(integrate([&spec](double u) { return 1.0 / spec.value(u); }, a, b, quad_tol));
}

/// Space transform g(y) = integral of du/sigma(u) from base_point to y, its
/// inverse, and the drift of the transformed unit-diffusion SDE. g is
/// strictly increasing with g' = 1/sigma in (delta, 1/delta), so inversion
/// brackets are available in closed form.
class TransformContext {
 public:
  explicit TransformContext(CoefficientSpec spec, double base_point, double quad_tol = 1e-10,
                            double root_tol = 1e-10)
      : spec_(std::move(spec)), base_(base_point), quad_tol_(quad_tol), root_tol_(root_tol) {
    if (!(quad_tol > 0.0) || !(root_tol > 0.0))
      throw DomainError("TransformContext: tolerances must be positive");
  }

  const CoefficientSpec& spec() const { return spec_; }
  double base_point() const { return base_; }
  double quad_tol() const { return quad_tol_; }
  double root_tol() const { return root_tol_; }

  /// g(y), absolute error <= quad_tol. Values are memoized per context; the
  /// memo is filled with independent from-base quadratures so concurrent
  /// inserts of the same key are idempotent.
  double forward(double y) const {
    if (spec_.is_constant()) return (y - base_) / spec_.value(base_);
    if (y == base_) return 0.0;

    const std::uint64_t key = std::bit_cast<std::uint64_t>(y);
    {
      std::shared_lock lock(cache_mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    const double z =
        integrate([this](double u) { return 1.0 / spec_.value(u); }, base_, y, quad_tol_);
    {
      std::unique_lock lock(cache_mutex_);
      if (cache_.size() < kCacheCapacity) cache_.emplace(key, z);
    }
    return z;
  }

  /// g^{-1}(z): bracketed by the Lipschitz bounds of g, bisection-seeded,
  /// Newton-polished until |g(y) - z| <= root_tol.
  double inverse(double z) const {
    if (spec_.is_constant()) return base_ + z * spec_.value(base_);
    if (z == 0.0) return base_;

    const double delta = spec_.declared_delta();
    double lo, hi;
    if (z > 0.0) {
      lo = base_ + z * delta;
      hi = base_ + z / delta;
    } else {
      lo = base_ + z / delta;
      hi = base_ + z * delta;
    }
    double y = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
      const double r = forward(y) - z;
      if (std::abs(r) <= root_tol_) return y;
      if (r > 0.0) hi = y; else lo = y;
      // Newton step (g' = 1/sigma), clipped back into the bracket.
      double next = y - r * spec_.value(y);
      if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
      y = next;
    }
    throw RootFailure("lamperti inverse: iteration budget exhausted at z=" + std::to_string(z));
  }

  /// Drift of the transformed SDE: b(z) = -sigma'(g^{-1}(z))/2, |b| <= L/2.
  double drift(double z) const { return -0.5 * spec_.deriv1(inverse(z)); }

  /// b'(z) = -sigma''(m) * sigma(m) / 2 at m = g^{-1}(z).
  double drift_derivative(double z) const {
    const double m = inverse(z);
    return -0.5 * spec_.deriv2(m) * spec_.value(m);
  }

  // Drift values at a point already mapped back to the original coordinate.
  double drift_at_state(double m) const { return -0.5 * spec_.deriv1(m); }
  double drift_derivative_at_state(double m) const {
    return -0.5 * spec_.deriv2(m) * spec_.value(m);
  }

 private:
  static constexpr std::size_t kCacheCapacity = 1u << 20;

  CoefficientSpec spec_;
  double base_;
  double quad_tol_;
  double root_tol_;
  mutable std::shared_mutex cache_mutex_;
  mutable std::unordered_map<std::uint64_t, double> cache_;
};

inline double lamperti_forward(const TransformContext& ctx, double y) { return ctx.forward(y); }
inline double lamperti_inverse(const TransformContext& ctx, double z) { return ctx.inverse(z); }
inline double drift(const TransformContext& ctx, double z) { return ctx.drift(z); }
inline double drift_derivative(const TransformContext& ctx, double z) {
  return ctx.drift_derivative(z);
}

/// Sequential inverse-map tracker for simulation hot loops. Successive
/// targets z differ by small steps, so g^{-1} is advanced by one RK4 step of
/// dm/dz = sigma(m) per call; anchor() re-solves the inversion exactly to
/// stop error accumulation (called at coarse grid points). Construct with a
/// known exact pair (state, g(state)).
class InverseMapTracker {
 public:
  InverseMapTracker(const TransformContext& ctx, double state, double transform_value)
      : ctx_(ctx), m_(state), z_(transform_value),
        reference_m_(state), reference_g_(transform_value) {}

  double state() const { return m_; }

  double advance_to(double z_next) {
    const double h = z_next - z_;
    const auto& spec = ctx_.spec();
    if (spec.is_constant()) {
      m_ += h * spec.value(m_);
    } else {
      const double k1 = spec.value(m_);
      const double k2 = spec.value(m_ + 0.5 * h * k1);
      const double k3 = spec.value(m_ + 0.5 * h * k2);
      const double k4 = spec.value(m_ + h * k3);
      m_ += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    z_ = z_next;
    return m_;
  }

  /// Newton re-anchor: polish m until |g(m) - z| <= root_tol, integrating
  /// g increments only over the short correction segments.
  double anchor() {
    const auto& spec = ctx_.spec();
    if (spec.is_constant()) return m_;
    const auto integrand = [&spec](double u) { return 1.0 / spec.value(u); };
    const double jump = std::abs(m_ - reference_m_);
    double g_err = reference_g_ - z_ +
                   (jump < 0.25 ? integrate_panel(integrand, reference_m_, m_)
                                : integrate(integrand, reference_m_, m_, ctx_.quad_tol()));
    for (int iter = 0; std::abs(g_err) > ctx_.root_tol(); ++iter) {
      if (iter >= 60) throw RootFailure("inverse tracker: anchor budget exhausted");
      const double m_next = m_ - g_err * spec.value(m_);
      g_err += integrate_panel(integrand, m_, m_next);
      m_ = m_next;
    }
    reference_m_ = m_;
    reference_g_ = z_;
    return m_;
  }

 private:
  const TransformContext& ctx_;
  double m_;
  double z_;
  double reference_m_;
  double reference_g_;
};

/// Transforms a path observed on a grid: z[k] = g(values[k]), computed
/// incrementally between consecutive grid values. This is the bulk entry
/// point behind per-increment geodesic distances.
inline std::vector<double> transform_grid(const TransformContext& ctx,
                                          std::span<const double> values) {
  std::vector<double> z(values.size());
  if (values.empty()) return z;
  if (ctx.spec().is_constant()) {
    const double c = ctx.spec().value(0.0);
    for (std::size_t k = 0; k < values.size(); ++k) z[k] = (values[k] - ctx.base_point()) / c;
    return z;
  }
  const auto& spec = ctx.spec();
  const auto integrand = [&spec](double u) { return 1.0 / spec.value(u); };
  z[0] = ctx.forward(values[0]);
  for (std::size_t k = 1; k < values.size(); ++k) {
    const double step = std::abs(values[k] - values[k - 1]);
    // one K15 panel is exact to ~1e-16 for short smooth segments
    z[k] = z[k - 1] + (step < 0.25 ? integrate_panel(integrand, values[k - 1], values[k])
                                   : integrate(integrand, values[k - 1], values[k],
                                               ctx.quad_tol()));
  }
  return z;
}

}  // namespace sre
