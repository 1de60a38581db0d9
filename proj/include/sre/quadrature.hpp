#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <string>
#include <vector>

#include "sre/errors.hpp"

namespace sre {

namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1,1] (positive half; QUADPACK dqk15).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelResult {
  double kronrod;
  double err;  // |K15 - G7|, a conservative error proxy for smooth integrands
};

template <std::invocable<double> F>
PanelResult gk15_panel(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = kKronrodWeights[7] * fc;
  double resg = kGaussWeights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double x = h * kKronrodNodes[i];
    const double fsum = f(c - x) + f(c + x);
    resk += kKronrodWeights[i] * fsum;
    if (i % 2 == 1) resg += kGaussWeights[i / 2] * fsum;
  }
  return {resk * h, std::abs((resk - resg) * h)};
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (G7,K15) bisection with an absolute tolerance.
/// Signed: integrate(f, a, b) = -integrate(f, b, a). Throws QuadratureFailure
/// when the panel budget is exhausted before the tolerance is met.
template <std::invocable<double> F>
double integrate(F&& f, double a, double b, double abs_tol, int max_panels = 4096) {
  if (a == b) return 0.0;
  const double sign = a < b ? 1.0 : -1.0;
  if (sign < 0.0) std::swap(a, b);

  struct Seg {
    double a, b, value, err;
  };
  auto first = detail::gk15_panel(f, a, b);
  std::vector<Seg> stack{{a, b, first.kronrod, first.err}};
  double total = first.kronrod;
  double total_err = first.err;
  int panels = 1;

  while (total_err > abs_tol) {
    // split the segment with the largest error estimate
    std::size_t worst = 0;
    for (std::size_t i = 1; i < stack.size(); ++i)
      if (stack[i].err > stack[worst].err) worst = i;
    const Seg seg = stack[worst];
    if (seg.b - seg.a <= 1e-15 * (std::abs(seg.a) + std::abs(seg.b) + 1.0))
      throw QuadratureFailure("quadrature: interval collapsed below machine resolution");
    if (panels + 1 > max_panels)
      throw QuadratureFailure("quadrature: panel budget exhausted (" +
                              std::to_string(max_panels) + ")");
    const double mid = 0.5 * (seg.a + seg.b);
    auto left = detail::gk15_panel(f, seg.a, mid);
    auto right = detail::gk15_panel(f, mid, seg.b);
    total += left.kronrod + right.kronrod - seg.value;
    total_err += left.err + right.err - seg.err;
    stack[worst] = {seg.a, mid, left.kronrod, left.err};
    stack.push_back({mid, seg.b, right.kronrod, right.err});
    ++panels;
  }
  return sign * total;
}

/// Single unrefined K15 panel. Exact to near machine precision on short
/// smooth segments; used by the path transform hot loop.
template <std::invocable<double> F>
double integrate_panel(F&& f, double a, double b) {
  if (a == b) return 0.0;
  if (a < b) return detail::gk15_panel(f, a, b).kronrod;
  return -detail::gk15_panel(f, b, a).kronrod;
}

}  // namespace sre
