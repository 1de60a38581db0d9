#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sre/coefficients.hpp"
#include "sre/errors.hpp"
#include "sre/kernels.hpp"
#include "sre/lamperti.hpp"
#include "sre/parallel.hpp"
#include "sre/paths.hpp"
#include "sre/stats.hpp"

namespace sre {

enum class EntropyMethod { closed_form, discrete_mc, bracket_upper, bracket_lower };

inline const char* to_string(EntropyMethod m) {
  switch (m) {
    case EntropyMethod::closed_form: return "closed_form";
    case EntropyMethod::discrete_mc: return "discrete_mc";
    case EntropyMethod::bracket_upper: return "bracket_upper";
    case EntropyMethod::bracket_lower: return "bracket_lower";
  }
  return "?";
}

/// A scalar entropy estimate in nats. log_bias_bound and inner_samples are
/// populated when an MC density backend sits behind the log (the log of an
/// MC mean is biased; the delta-method bound is recorded, never hidden).
struct EntropyEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int n = 0;
  std::int64_t n_paths = 0;
  EntropyMethod method = EntropyMethod::closed_form;
  double log_bias_bound = 0.0;
  std::int64_t inner_samples = 0;
};

struct ScalarEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int n = 0;
  std::int64_t n_paths = 0;
};

/// Entropy rate functional in closed form: the Monte Carlo average over paths
/// of the trapezoid time-quadrature of (1/2) Gamma(sigma^2/eta^2) along the
/// fine substep grid. Paths are streamed back from their seeds so the fine
/// grid never has to be stored.
inline EntropyEstimate closed_form_functional(const TransformContext& ctx_q,
                                              const TransformContext& ctx_p,
                                              const PathEnsemble& ensemble) {
  const auto& sigma = ctx_q.spec();
  const auto& eta = ctx_p.spec();
  const int fine_steps = ensemble.n * ensemble.substeps;
  const double dt = 1.0 / fine_steps;

  std::vector<double> per_path(static_cast<std::size_t>(ensemble.count()));
  for_each_fine_path(ctx_q, ensemble,
                     [&](std::int64_t i, const SamplePath&, const std::vector<double>& fine) {
                       double acc = 0.0;
                       for (int j = 0; j <= fine_steps; ++j) {
                         const double m = fine[static_cast<std::size_t>(j)];
                         const double r = sigma.value(m) / eta.value(m);
                         const double g = 0.5 * gamma_integrand(r * r);
                         acc += (j == 0 || j == fine_steps) ? 0.5 * g : g;
                       }
                       per_path[static_cast<std::size_t>(i)] = acc * dt;
                     });
  const MeanSe stat = mean_and_se(per_path);
  return {stat.mean, stat.std_error, ensemble.n, ensemble.count(),
          EntropyMethod::closed_form};
}

/// Grid relative entropy over n increments, normalized by n:
/// (1/n) sum_k E[log q(1/n, M_{(k-1)/n}, M_{k/n}) - log p(1/n, ...)],
/// estimated pathwise with the supplied kernel backends.
inline EntropyEstimate discrete_entropy_mc(const PathEnsemble& ensemble,
                                           const KernelBackend& kernel_q,
                                           const KernelBackend& kernel_p) {
  const int n = ensemble.n;
  const double t = 1.0 / n;
  const std::int64_t count = ensemble.count();

  std::vector<double> per_path(static_cast<std::size_t>(count));
  std::vector<double> per_path_bias(static_cast<std::size_t>(count));
  std::int64_t inner = 0;
  parallel_for(count, [&](std::int64_t i) {
    const auto& values = ensemble.paths[static_cast<std::size_t>(i)].values;
    std::vector<LogDensity> lq(static_cast<std::size_t>(n)), lp(static_cast<std::size_t>(n));
    kernel_q.log_density_increments(t, values, lq);
    kernel_p.log_density_increments(t, values, lp);
    double acc = 0.0, bias = 0.0;
    for (int k = 0; k < n; ++k) {
      acc += lq[static_cast<std::size_t>(k)].log_value - lp[static_cast<std::size_t>(k)].log_value;
      bias += lq[static_cast<std::size_t>(k)].bias_bound + lp[static_cast<std::size_t>(k)].bias_bound;
    }
    per_path[static_cast<std::size_t>(i)] = acc / n;
    per_path_bias[static_cast<std::size_t>(i)] = bias / n;
    if (i == 0)
      inner = std::max(lq.front().inner_samples, lp.front().inner_samples);
  });
  const MeanSe stat = mean_and_se(per_path);
  const double bias_bound = pairwise_sum(per_path_bias) / static_cast<double>(count);
  return {stat.mean, stat.std_error, n, count, EntropyMethod::discrete_mc, bias_bound, inner};
}

/// Pathwise telescoping functionals that bracket the normalized grid entropy:
/// the shared stochastic part is
///   S = (1/2n) log(sigma(M_0) eta(M_1) / (sigma(M_1) eta(M_0)))
///       - (1/n) sum_k log(sigma/eta)(M_{k/n})
///       - (1/2) sum_k d_sigma^2 + (1/2) sum_k d_eta^2,
/// and the bounds add the deterministic constants +(C1_q + C2_p)/n and
/// -(C2_q + C1_p)/n, so the bracket width is exactly their sum over n.
inline std::pair<EntropyEstimate, EntropyEstimate> telescoping_bracket(
    const PathEnsemble& ensemble, const RegularityCertificate& cert_q,
    const RegularityCertificate& cert_p, const TransformContext& ctx_q,
    const TransformContext& ctx_p) {
  const int n = ensemble.n;
  const std::int64_t count = ensemble.count();
  const auto& sigma = ctx_q.spec();
  const auto& eta = ctx_p.spec();

  std::vector<double> shared(static_cast<std::size_t>(count));
  parallel_for(count, [&](std::int64_t i) {
    const auto& values = ensemble.paths[static_cast<std::size_t>(i)].values;
    const std::vector<double> zq = transform_grid(ctx_q, values);
    const std::vector<double> zp = transform_grid(ctx_p, values);
    const double m0 = values.front();
    const double m1 = values.back();
    double log_sum = 0.0, quad = 0.0;
    for (int k = 1; k <= n; ++k) {
      const std::size_t ks = static_cast<std::size_t>(k);
      log_sum += std::log(sigma.value(values[ks]) / eta.value(values[ks]));
      const double dq = zq[ks] - zq[ks - 1];
      const double dp = zp[ks] - zp[ks - 1];
      quad += 0.5 * (dp * dp - dq * dq);
    }
    shared[static_cast<std::size_t>(i)] =
        0.5 / n * std::log(sigma.value(m0) * eta.value(m1) / (sigma.value(m1) * eta.value(m0))) -
        log_sum / n + quad;
  });
  const MeanSe stat = mean_and_se(shared);
  const double up_const = (cert_q.C1 + cert_p.C2) / n;
  const double low_const = (cert_q.C2 + cert_p.C1) / n;
  EntropyEstimate lower{stat.mean - low_const, stat.std_error, n, count,
                        EntropyMethod::bracket_lower};
  EntropyEstimate upper{stat.mean + up_const, stat.std_error, n, count,
                        EntropyMethod::bracket_upper};
  return {lower, upper};
}

/// Expected sum of squared geodesic increments at resolution n; the
/// quadratic-variation Riemann sum that converges to E[int (sigma/eta)^2].
inline ScalarEstimate qv_riemann_sum(const PathEnsemble& ensemble,
                                     const TransformContext& ctx_eta) {
  const std::int64_t count = ensemble.count();
  std::vector<double> per_path(static_cast<std::size_t>(count));
  parallel_for(count, [&](std::int64_t i) {
    const auto& values = ensemble.paths[static_cast<std::size_t>(i)].values;
    const std::vector<double> z = transform_grid(ctx_eta, values);
    double acc = 0.0;
    for (std::size_t k = 1; k < z.size(); ++k) acc += (z[k] - z[k - 1]) * (z[k] - z[k - 1]);
    per_path[static_cast<std::size_t>(i)] = acc;
  });
  const MeanSe stat = mean_and_se(per_path);
  return {stat.mean, stat.std_error, ensemble.n, count};
}

/// Independent time-quadrature estimate of E[int_0^1 (sigma/eta)^2(M_s) ds]
/// along the fine grid; the limit target of qv_riemann_sum.
inline ScalarEstimate ratio_time_quadrature(const TransformContext& ctx_q,
                                            const TransformContext& ctx_p,
                                            const PathEnsemble& ensemble) {
  const auto& sigma = ctx_q.spec();
  const auto& eta = ctx_p.spec();
  const int fine_steps = ensemble.n * ensemble.substeps;
  const double dt = 1.0 / fine_steps;
  std::vector<double> per_path(static_cast<std::size_t>(ensemble.count()));
  for_each_fine_path(ctx_q, ensemble,
                     [&](std::int64_t i, const SamplePath&, const std::vector<double>& fine) {
                       double acc = 0.0;
                       for (int j = 0; j <= fine_steps; ++j) {
                         const double m = fine[static_cast<std::size_t>(j)];
                         const double r = sigma.value(m) / eta.value(m);
                         acc += (j == 0 || j == fine_steps) ? 0.5 * r * r : r * r;
                       }
                       per_path[static_cast<std::size_t>(i)] = acc * dt;
                     });
  const MeanSe stat = mean_and_se(per_path);
  return {stat.mean, stat.std_error, ensemble.n, ensemble.count()};
}

struct ConvergenceRow {
  int n = 0;
  EntropyEstimate discrete;
  EntropyEstimate lower;
  EntropyEstimate upper;
  EntropyEstimate closed_form;
};

struct ConvergencePlan {
  const TransformContext& ctx_q;
  const TransformContext& ctx_p;
  const RegularityCertificate& cert_q;
  const RegularityCertificate& cert_p;
  const KernelBackend& kernel_q;
  const KernelBackend& kernel_p;
  double start = 0.0;
  int substeps = 32;
  std::int64_t n_paths = 0;
  std::uint64_t master_seed = 0;
};

/// One row per grid resolution. All estimators of a row share one ensemble
/// (common random numbers), with the row seed derived from (master_seed, n).
inline std::vector<ConvergenceRow> convergence_study(const ConvergencePlan& plan,
                                                     std::span<const int> n_list) {
  std::vector<ConvergenceRow> rows;
  rows.reserve(n_list.size());
  for (int n : n_list) {
    const PathEnsemble ensemble =
        simulate_ensemble(plan.ctx_q, plan.start, n, plan.substeps, plan.n_paths,
                          derive_seed(plan.master_seed, static_cast<std::uint64_t>(n)));
    ConvergenceRow row;
    row.n = n;
    row.discrete = discrete_entropy_mc(ensemble, plan.kernel_q, plan.kernel_p);
    auto bracket = telescoping_bracket(ensemble, plan.cert_q, plan.cert_p, plan.ctx_q, plan.ctx_p);
    row.lower = bracket.first;
    row.upper = bracket.second;
    row.closed_form = closed_form_functional(plan.ctx_q, plan.ctx_p, ensemble);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace sre
