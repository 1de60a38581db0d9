#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sre/coefficients.hpp"
#include "sre/errors.hpp"
#include "sre/lamperti.hpp"
#include "sre/parallel.hpp"
#include "sre/paths.hpp"
#include "sre/rng.hpp"
#include "sre/stats.hpp"

namespace sre {

enum class DensityBackend { exact, surrogate, bridge_mc, fd_pde };

/// A transition-density value. std_error is 0 for deterministic backends.
struct DensityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  DensityBackend backend = DensityBackend::exact;
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

inline double gaussian_pdf(double z, double mean, double variance) {
  const double d = z - mean;
  return std::exp(-d * d / (2.0 * variance)) /
         std::sqrt(2.0 * std::numbers::pi * variance);
}

/// Exact kernel for a constant coefficient c: N(x, t c^2) evaluated at y.
inline DensityEstimate kernel_exact_constant(double c, double t, double x, double y) {
  if (!(t > 0.0)) throw DomainError("kernel_exact_constant: t must be positive");
  if (!(c > 0.0)) throw DomainError("kernel_exact_constant: coefficient must be positive");
  return {gaussian_pdf(y, x, t * c * c), 0.0, DensityBackend::exact, t, x, y};
}

namespace detail {
inline double log_surrogate(const CoefficientSpec& spec, double t, double geo_dist, double x,
                            double y) {
  return -0.5 * std::log(2.0 * std::numbers::pi * t) +
         0.5 * (std::log(spec.value(x)) - std::log(spec.value(y))) - std::log(spec.value(y)) -
         geo_dist * geo_dist / (2.0 * t);
}
}  // namespace detail

/// Geodesic Gaussian surrogate: the common central factor of the density
/// sandwich. The true density lies within [e^{-C2 t}, e^{C1 t}] times this.
inline DensityEstimate kernel_surrogate(const TransformContext& ctx, double t, double x,
                                        double y) {
  if (!(t > 0.0)) throw DomainError("kernel_surrogate: t must be positive");
  const double d = std::abs(ctx.forward(y) - ctx.forward(x));
  return {std::exp(detail::log_surrogate(ctx.spec(), t, d, x, y)), 0.0,
          DensityBackend::surrogate, t, x, y};
}

/// Exact bridge representation of the density: surrogate times
/// E[exp(-1/2 \int_0^t (b' + b^2)(beta_s) ds)] over Brownian bridges beta
/// from 0 to g(y)-g(x). The time integral uses the trapezoid rule on m+1
/// points; each bridge is exact, so the only bias is O(1/m^2) quadrature.
inline DensityEstimate kernel_bridge_mc(const TransformContext& ctx, double t, double x,
                                        double y, int m, std::int64_t n_inner,
                                        std::uint64_t seed) {
  if (!(t > 0.0)) throw DomainError("kernel_bridge_mc: t must be positive");
  if (n_inner < 1) throw DomainError("kernel_bridge_mc: need at least one bridge sample");
  const DensityEstimate surrogate = kernel_surrogate(ctx, t, x, y);

  if (ctx.spec().is_constant())  // drift vanishes: the functional is identically 1
    return {surrogate.value, 0.0, DensityBackend::bridge_mc, t, x, y};

  const double gx = ctx.forward(x);
  const double endpoint = ctx.forward(y) - gx;
  const double dt = t / m;

  std::vector<double> samples(static_cast<std::size_t>(n_inner));
  parallel_for(n_inner, [&](std::int64_t i) {
    const BridgePath bridge = brownian_bridge(t, endpoint, m, derive_seed(seed, i));
    InverseMapTracker tracker(ctx, x, gx);
    double trap = 0.0;
    for (int j = 0; j <= m; ++j) {
      double state = x;
      if (j > 0) {
        tracker.advance_to(gx + bridge.values[static_cast<std::size_t>(j)]);
        if (j % 16 == 0) tracker.anchor();
        state = tracker.state();
      }
      const double b = ctx.drift_at_state(state);
      const double v = ctx.drift_derivative_at_state(state) + b * b;
      trap += (j == 0 || j == m) ? 0.5 * v : v;
    }
    samples[static_cast<std::size_t>(i)] = std::exp(-0.5 * trap * dt);
  });
  const MeanSe stat = mean_and_se(samples);
  return {surrogate.value * stat.mean, surrogate.value * stat.std_error,
          DensityBackend::bridge_mc, t, x, y};
}

// InverseMapTracker keyed off gx: bridge coordinates are relative to x, the
// context base may differ.

/// Density sandwich around the surrogate with the sharp constants
/// C1 = L/(4 delta), C2 = L delta/4 + L^2/8; valid for t in (0,1].
struct Envelope {
  double lower = 0.0;
  double upper = 0.0;
  double c_lower = 0.0;  // exponent constant applied to the lower bound
  double c_upper = 0.0;
  enum class Source { surrogate_form, gaussian_form } source = Source::surrogate_form;
};

inline Envelope surrogate_envelope(const RegularityCertificate& cert,
                                   const TransformContext& ctx, double t, double x, double y) {
  if (!(t > 0.0) || t > 1.0)
    throw DomainError("surrogate_envelope: bounds are only valid for t in (0,1]");
  const double s = kernel_surrogate(ctx, t, x, y).value;
  return {std::exp(-cert.C2 * t) * s, std::exp(cert.C1 * t) * s, cert.C2, cert.C1,
          Envelope::Source::surrogate_form};
}

/// Weaker all-Gaussian sandwich using only delta and C = max(C1, C2);
/// always contains the surrogate-form envelope.
inline Envelope gaussian_envelope(const RegularityCertificate& cert, double t, double x,
                                  double y) {
  if (!(t > 0.0) || t > 1.0)
    throw DomainError("gaussian_envelope: bounds are only valid for t in (0,1]");
  const double C = std::max(cert.C1, cert.C2);
  const double d2 = (x - y) * (x - y);
  const double delta2 = cert.delta * cert.delta;
  const double base = 1.0 / std::sqrt(2.0 * std::numbers::pi * t);
  const double lower = std::exp(-C * t) * delta2 * base * std::exp(-d2 / (2.0 * t * delta2));
  const double upper =
      std::exp(C * t) / delta2 * base * std::exp(-delta2 * d2 / (2.0 * t));
  return {lower, upper, C, C, Envelope::Source::gaussian_form};
}

// ---------------------------------------------------------------------------
// Fokker-Planck finite-difference oracle
// ---------------------------------------------------------------------------

struct FdMesh {
  double y_min = 0.0;
  double y_max = 0.0;
  int n_space = 0;  // number of cells; n_space+1 nodes
  int n_time = 0;
};

/// Crank-Nicolson solution of d_t p = 1/2 d_yy(sigma(y)^2 p) with a point
/// mass at x, on a uniform mesh with absorbing boundaries. The Dirac is
/// replaced by one exact constant-coefficient Gaussian step of duration
/// t/n_time, then n_time-1 CN steps; mass loss through the boundary is
/// tracked and reported.
class FdDensityTable {
 public:
  FdDensityTable(double t, double x, FdMesh mesh, std::vector<double> values, double mass)
      : t_(t), x_(x), mesh_(mesh), values_(std::move(values)), mass_(mass) {}

  double t() const { return t_; }
  double x() const { return x_; }
  const FdMesh& mesh() const { return mesh_; }
  std::span<const double> values() const { return values_; }
  double mass() const { return mass_; }
  double grid_step() const { return (mesh_.y_max - mesh_.y_min) / mesh_.n_space; }

  double node(int i) const { return mesh_.y_min + i * grid_step(); }

  /// Linear interpolation between mesh nodes.
  double value_at(double y) const {
    if (!(y >= mesh_.y_min) || !(y <= mesh_.y_max))
      throw DomainError("fd table: query point outside mesh");
    const double h = grid_step();
    const double pos = (y - mesh_.y_min) / h;
    const int i = std::min(static_cast<int>(pos), mesh_.n_space - 1);
    const double w = pos - i;
    return (1.0 - w) * values_[static_cast<std::size_t>(i)] +
           w * values_[static_cast<std::size_t>(i) + 1];
  }

 private:
  double t_;
  double x_;
  FdMesh mesh_;
  std::vector<double> values_;
  double mass_;
};

namespace detail {

// Tridiagonal prefactorization for the repeated Crank-Nicolson solves.
struct TridiagonalSolver {
  std::vector<double> diag;   // after elimination
  std::vector<double> upper;  // original upper band
  std::vector<double> w;      // elimination multipliers

  // bands for T = I - r*A restricted to interior nodes 1..N-1
  TridiagonalSolver(std::span<const double> a, double r) {
    const std::size_t n = a.size() - 2;  // interior count
    diag.resize(n);
    upper.resize(n);
    w.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      diag[i] = 1.0 + 2.0 * r * a[i + 1];
      upper[i] = -r * a[i + 2];
    }
    for (std::size_t i = 1; i < n; ++i) {
      const double lower = -r * a[i];  // sub-diagonal entry of row i
      w[i] = lower / diag[i - 1];
      diag[i] -= w[i] * upper[i - 1];
    }
  }

  void solve_in_place(std::span<double> d) const {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) d[i] -= w[i] * d[i - 1];
    d[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - upper[i] * d[i + 1]) / diag[i];
  }
};

}  // namespace detail

struct FdSolution {
  FdDensityTable final_table;
  std::vector<FdDensityTable> snapshots;  // one per requested snapshot time
};

/// Solves to time t; optional snapshot_times must be (near) multiples of
/// t/n_time. Throws MeshError when x is not well inside the mesh or the
/// initial Gaussian is unresolvable, MassLeak when boundary loss exceeds
/// mass_tol.
inline FdSolution solve_fokker_planck(const CoefficientSpec& spec, double t, double x,
                                      FdMesh mesh, std::span<const double> snapshot_times = {},
                                      double mass_tol = 1e-4) {
  if (!(t > 0.0)) throw DomainError("fd solve: t must be positive");
  if (mesh.n_space < 16 || mesh.n_time < 2) throw MeshError("fd solve: mesh too coarse");
  if (!(mesh.y_min < mesh.y_max)) throw MeshError("fd solve: empty mesh");

  const double h = (mesh.y_max - mesh.y_min) / mesh.n_space;
  if (!(x > mesh.y_min + 10.0 * h) || !(x < mesh.y_max - 10.0 * h))
    throw MeshError("fd solve: start point not inside the mesh");
  // boundaries must sit several transformed standard deviations away or the
  // absorbing condition bites into real mass
  const double span = 4.5 * std::sqrt(t);
  if (geodesic_distance(spec, x, mesh.y_min) < span ||
      geodesic_distance(spec, x, mesh.y_max) < span)
    throw MeshError("fd solve: mesh boundary closer than 4.5 geodesic deviations to the start");

  const double dt = t / mesh.n_time;
  const double sigma0 = spec.value(x);
  if (sigma0 * std::sqrt(dt) < 2.0 * h)
    throw MeshError("fd solve: initial Gaussian narrower than two cells; refine n_space "
                    "or use fewer time steps");

  const int nodes = mesh.n_space + 1;
  std::vector<double> a(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) {
    const double y = mesh.y_min + i * h;
    a[static_cast<std::size_t>(i)] = spec.value(y) * spec.value(y);
  }

  std::vector<double> u(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i)
    u[static_cast<std::size_t>(i)] = gaussian_pdf(mesh.y_min + i * h, x, dt * sigma0 * sigma0);
  u.front() = 0.0;
  u.back() = 0.0;

  const double r = dt / (4.0 * h * h);
  detail::TridiagonalSolver solver(a, r);

  const auto mass_of = [&](std::span<const double> v) {
    std::vector<double> weighted(v.begin(), v.end());
    return pairwise_sum(weighted) * h;  // boundary nodes are zero
  };

  std::vector<FdDensityTable> snapshots;
  auto maybe_snapshot = [&](double time_now) {
    for (double ts : snapshot_times)
      if (std::abs(time_now - ts) < 0.25 * dt)
        snapshots.emplace_back(ts, x, mesh, u, mass_of(u));
  };
  maybe_snapshot(dt);

  std::vector<double> rhs(static_cast<std::size_t>(nodes) - 2);
  for (int step = 1; step < mesh.n_time; ++step) {
    for (int i = 1; i < nodes - 1; ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      rhs[k - 1] = u[k] + r * (a[k + 1] * u[k + 1] - 2.0 * a[k] * u[k] + a[k - 1] * u[k - 1]);
    }
    solver.solve_in_place(rhs);
    for (int i = 1; i < nodes - 1; ++i) u[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(i) - 1];
    maybe_snapshot((step + 1) * dt);
  }

  const double mass = mass_of(u);
  if (std::abs(mass - 1.0) > mass_tol)
    throw MassLeak(mass, "fd solve: mass " + std::to_string(mass) + " deviates from 1 by more than " +
                             std::to_string(mass_tol));
  return {FdDensityTable(t, x, mesh, std::move(u), mass), std::move(snapshots)};
}

inline FdDensityTable kernel_fd_oracle(const CoefficientSpec& spec, double t, double x,
                                       FdMesh mesh, double mass_tol = 1e-4) {
  return solve_fokker_planck(spec, t, x, mesh, {}, mass_tol).final_table;
}

/// CSV export of a density table, columns y,density.
inline void export_density_csv(const FdDensityTable& table, std::ostream& out) {
  out << "y,density\n";
  for (int i = 0; i <= table.mesh().n_space; ++i)
    out << format_double(table.node(i)) << ','
        << format_double(table.values()[static_cast<std::size_t>(i)]) << '\n';
}

/// Mesh placement used when the caller gives no explicit mesh: boundaries at
/// 6 sqrt(t)/delta from x, cell size tied to the width of the initial
/// Gaussian, and n_time a multiple of 16 so snapshot grids align.
inline FdMesh fd_default_mesh(const CoefficientSpec& spec, double t, double x,
                              int n_time = 400) {
  const double radius = 6.0 * std::sqrt(t) / spec.declared_delta();
  const double h_target = spec.value(x) * std::sqrt(t / n_time) / 3.0;
  const int n_space = std::max(800, static_cast<int>(std::ceil(2.0 * radius / h_target)));
  return FdMesh{x - radius, x + radius, n_space, n_time};
}

// ---------------------------------------------------------------------------
// Per-increment log-density backends for the entropy estimators
// ---------------------------------------------------------------------------

struct LogDensity {
  double log_value = 0.0;
  double std_error = 0.0;   // of log_value (delta method for MC backends)
  double bias_bound = 0.0;  // delta-method bound Var/(2 mean^2 n_inner)
  std::int64_t inner_samples = 0;
};

/// Evaluates log transition densities along observation grids. MC-backed
/// implementations must derive their seeds from the query coordinates so
/// results do not depend on evaluation order.
class KernelBackend {
 public:
  virtual ~KernelBackend() = default;
  virtual LogDensity log_density(double t, double x, double y) const = 0;
  virtual std::string name() const = 0;

  /// Increment sweep along one path; out[k-1] covers (values[k-1], values[k]).
  virtual void log_density_increments(double t, std::span<const double> values,
                                      std::span<LogDensity> out) const {
    for (std::size_t k = 1; k < values.size(); ++k)
      out[k - 1] = log_density(t, values[k - 1], values[k]);
  }
};

class ExactConstantKernel final : public KernelBackend {
 public:
  explicit ExactConstantKernel(double c) : c_(c) {
    if (!(c > 0.0)) throw DomainError("ExactConstantKernel: coefficient must be positive");
  }

  LogDensity log_density(double t, double x, double y) const override {
    if (!(t > 0.0)) throw DomainError("ExactConstantKernel: t must be positive");
    const double v = t * c_ * c_;
    const double d = y - x;
    return {-0.5 * std::log(2.0 * std::numbers::pi * v) - d * d / (2.0 * v), 0.0, 0.0, 0};
  }

  std::string name() const override { return "exact"; }

 private:
  double c_;
};

class SurrogateKernel final : public KernelBackend {
 public:
  explicit SurrogateKernel(const TransformContext& ctx) : ctx_(ctx) {}

  LogDensity log_density(double t, double x, double y) const override {
    if (!(t > 0.0)) throw DomainError("SurrogateKernel: t must be positive");
    const double d = std::abs(ctx_.forward(y) - ctx_.forward(x));
    return {detail::log_surrogate(ctx_.spec(), t, d, x, y), 0.0, 0.0, 0};
  }

  // Transforms the whole grid once instead of integrating per increment.
  void log_density_increments(double t, std::span<const double> values,
                              std::span<LogDensity> out) const override {
    const std::vector<double> z = transform_grid(ctx_, values);
    for (std::size_t k = 1; k < values.size(); ++k)
      out[k - 1] = {detail::log_surrogate(ctx_.spec(), t, std::abs(z[k] - z[k - 1]),
                                          values[k - 1], values[k]),
                    0.0, 0.0, 0};
  }

  std::string name() const override { return "surrogate"; }

 private:
  const TransformContext& ctx_;
};

class BridgeMcKernel final : public KernelBackend {
 public:
  BridgeMcKernel(const TransformContext& ctx, int m, std::int64_t n_inner, std::uint64_t salt)
      : ctx_(ctx), m_(m), n_inner_(n_inner), salt_(salt) {}

  LogDensity log_density(double t, double x, double y) const override {
    const std::uint64_t seed =
        derive_seed(salt_, mix64(std::bit_cast<std::uint64_t>(t)) ^
                               mix64(std::bit_cast<std::uint64_t>(x) * 3u) ^
                               mix64(std::bit_cast<std::uint64_t>(y) * 7u));
    const DensityEstimate est = kernel_bridge_mc(ctx_, t, x, y, m_, n_inner_, seed);
    if (!(est.value > 0.0))
      throw KernelError("bridge kernel produced a nonpositive density");
    const double rel = est.std_error / est.value;
    return {std::log(est.value), rel, 0.5 * rel * rel, n_inner_};
  }

  std::string name() const override { return "bridge_mc"; }

 private:
  const TransformContext& ctx_;
  int m_;
  std::int64_t n_inner_;
  std::uint64_t salt_;
};

}  // namespace sre
