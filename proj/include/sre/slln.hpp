#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "sre/entropy.hpp"
#include "sre/errors.hpp"
#include "sre/kernels.hpp"
#include "sre/parallel.hpp"
#include "sre/paths.hpp"
#include "sre/rng.hpp"
#include "sre/stats.hpp"

namespace sre {

/// Unnormalized log-likelihood ratio of one path observed at resolution k:
/// sum over increments of log q(1/k, ., .) - log p(1/k, ., .).
inline double pathwise_log_ratio(const SamplePath& path, const KernelBackend& kernel_q,
                                 const KernelBackend& kernel_p) {
  const int k = path.n;
  const double t = 1.0 / k;
  std::vector<LogDensity> lq(static_cast<std::size_t>(k)), lp(static_cast<std::size_t>(k));
  kernel_q.log_density_increments(t, path.values, lq);
  kernel_p.log_density_increments(t, path.values, lp);
  double acc = 0.0;
  for (int i = 0; i < k; ++i)
    acc += lq[static_cast<std::size_t>(i)].log_value - lp[static_cast<std::size_t>(i)].log_value;
  return acc;
}

/// Running average of Y_k = (1/k) * log-likelihood ratio at one fresh path of
/// resolution k, for k = 1..n_max. Per-k seeds are derived, so each Y_k is
/// independent and invariant to evaluation order.
struct SllnRun {
  int n_max = 0;
  std::uint64_t master_seed = 0;
  std::vector<double> per_k;        // Y_1..Y_{n_max}
  std::vector<double> running_avg;  // running_avg[j] = mean of per_k[0..j]
};

inline SllnRun slln_run(const TransformContext& ctx_q, double start, int n_max, int substeps,
                        const KernelBackend& kernel_q, const KernelBackend& kernel_p,
                        std::uint64_t master_seed) {
  if (n_max < 1) throw DomainError("slln_run: n_max must be >= 1");
  SllnRun run;
  run.n_max = n_max;
  run.master_seed = master_seed;
  run.per_k.resize(static_cast<std::size_t>(n_max));
  run.running_avg.resize(static_cast<std::size_t>(n_max));

  parallel_for(n_max, [&](std::int64_t idx) {
    const int k = static_cast<int>(idx) + 1;
    const SamplePath path = simulate_diffusion(ctx_q, start, k, substeps,
                                               derive_seed(master_seed, static_cast<std::uint64_t>(k)));
    run.per_k[static_cast<std::size_t>(idx)] = pathwise_log_ratio(path, kernel_q, kernel_p) / k;
  });
  double acc = 0.0;
  for (int j = 0; j < n_max; ++j) {
    acc += run.per_k[static_cast<std::size_t>(j)];
    run.running_avg[static_cast<std::size_t>(j)] = acc / (j + 1);
  }
  return run;
}

/// Per-k spread of Y_k over independent repetitions, plus the partial sums of
/// Var(Y_k)/k^2 whose boundedness backs the strong-law argument.
struct KssllnRow {
  int k = 0;
  int reps = 0;
  double mean_y = 0.0;
  double var_y = 0.0;
  double partial_sum = 0.0;  // sum of var/k^2 up to and including this row
};

inline std::vector<KssllnRow> ksslln_diagnostic(const TransformContext& ctx_q, double start,
                                                std::span<const int> k_list, int reps,
                                                int substeps, const KernelBackend& kernel_q,
                                                const KernelBackend& kernel_p,
                                                std::uint64_t master_seed) {
  if (reps < 2) throw DomainError("ksslln_diagnostic: need at least 2 repetitions per k");
  std::vector<KssllnRow> rows(k_list.size());
  for (std::size_t row = 0; row < k_list.size(); ++row) {
    const int k = k_list[row];
    std::vector<double> samples(static_cast<std::size_t>(reps));
    parallel_for(reps, [&](std::int64_t rep) {
      const SamplePath path = simulate_diffusion(
          ctx_q, start, k, substeps,
          derive_seed(master_seed, static_cast<std::uint64_t>(k),
                      static_cast<std::uint64_t>(rep)));
      samples[static_cast<std::size_t>(rep)] =
          pathwise_log_ratio(path, kernel_q, kernel_p) / k;
    });
    const MeanSe stat = mean_and_se(samples);
    const double var = stat.std_error * stat.std_error * reps;
    const double prev = row == 0 ? 0.0 : rows[row - 1].partial_sum;
    rows[row] = {k, reps, stat.mean, var, prev + var / (static_cast<double>(k) * k)};
  }
  return rows;
}

}  // namespace sre
