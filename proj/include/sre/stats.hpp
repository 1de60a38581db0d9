#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace sre {

/// Pairwise (fixed-tree) summation. The reduction order depends only on the
/// element order, never on worker count, so parallel producers that fill an
/// indexed buffer get bit-stable totals.
inline double pairwise_sum(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n <= 8) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x.subspan(0, half)) + pairwise_sum(x.subspan(half));
}

struct MeanSe {
  double mean;
  double std_error;  // of the mean
  std::size_t count;
};

/// Two-pass mean and standard error with pairwise reductions. A constant
/// sample short-circuits to (value, 0) so degenerate estimators report an
/// exactly zero spread.
inline MeanSe mean_and_se(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {0.0, 0.0, 0};
  bool constant = true;
  for (double v : x)
    if (v != x.front()) {
      constant = false;
      break;
    }
  if (constant) return {x.front(), 0.0, n};
  const double mean = pairwise_sum(x) / static_cast<double>(n);
  if (n == 1) return {mean, 0.0, 1};
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

inline double sample_variance(std::span<const double> x) {
  const MeanSe m = mean_and_se(x);
  return m.std_error * m.std_error * static_cast<double>(m.count);
}

/// Pearson correlation of two equally long samples.
inline double correlation(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const double mx = pairwise_sum(x) / static_cast<double>(n);
  const double my = pairwise_sum(y) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

struct LineFit {
  double slope;
  double intercept;
};

/// Least-squares line through (x_i, y_i); used for log-log decay exponents.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const double mx = pairwise_sum(x) / static_cast<double>(n);
  const double my = pairwise_sum(y) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

/// Uniform-grid trapezoid rule over values sampled at spacing dt.
inline double trapezoid_uniform(std::span<const double> values, double dt) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double s = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < n; ++i) s += values[i];
  return s * dt;
}

}  // namespace sre
