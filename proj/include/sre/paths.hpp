#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sre/csv.hpp"
#include "sre/errors.hpp"
#include "sre/lamperti.hpp"
#include "sre/parallel.hpp"
#include "sre/rng.hpp"

namespace sre {

/// One diffusion path observed at times k/n, k = 0..n. `substeps` records how
/// many internal Euler steps produced each grid cell.
struct SamplePath {
  double start = 0.0;
  int n = 0;
  int substeps = 1;
  std::uint64_t seed = 0;
  std::vector<double> values;  // n+1 entries, values[0] == start
};

/// Iid paths sharing (start, n, substeps). Path i uses
/// derive_seed(master_seed, i), so the collection is reproducible and
/// independent of generation order.
struct PathEnsemble {
  double start = 0.0;
  int n = 0;
  int substeps = 1;
  std::uint64_t master_seed = 0;
  std::vector<SamplePath> paths;

  std::int64_t count() const { return static_cast<std::int64_t>(paths.size()); }
};

namespace detail {
struct NullObserver {
  void operator()(int, double, double) const {}
};
}  // namespace detail

/// Euler-Maruyama in transformed coordinates: Y advances with unit noise and
/// drift b = -sigma'(state)/2, the state is mapped back through the inverse
/// transform (RK4 tracking, Newton re-anchor at each coarse grid point).
/// `observer(j, t_j, state)` sees every fine step j = 0..n*substeps.
template <class Observer>
SamplePath simulate_diffusion(const TransformContext& ctx, double start, int n, int substeps,
                              std::uint64_t seed, Observer&& observer) {
  if (n < 1) throw DomainError("simulate_diffusion: n must be >= 1");
  if (substeps < 1) throw DomainError("simulate_diffusion: substeps must be >= 1");

  SamplePath path;
  path.start = start;
  path.n = n;
  path.substeps = substeps;
  path.seed = seed;
  path.values.resize(static_cast<std::size_t>(n) + 1);
  path.values[0] = start;

  SplitMix64 rng(seed);
  const int fine_steps = n * substeps;
  const double dt = 1.0 / fine_steps;
  const double sq_dt = std::sqrt(dt);

  double y = ctx.forward(start);
  InverseMapTracker tracker(ctx, start, y);
  observer(0, 0.0, start);

  int j = 0;
  for (int k = 1; k <= n; ++k) {
    for (int s = 0; s < substeps; ++s) {
      const double b = ctx.drift_at_state(tracker.state());
      y += b * dt + sq_dt * rng.next_normal();
      tracker.advance_to(y);
      ++j;
      if (s + 1 == substeps) tracker.anchor();
      observer(j, j * dt, tracker.state());
    }
    path.values[static_cast<std::size_t>(k)] = tracker.state();
  }
  return path;
}

inline SamplePath simulate_diffusion(const TransformContext& ctx, double start, int n,
                                     int substeps, std::uint64_t seed) {
  return simulate_diffusion(ctx, start, n, substeps, seed, detail::NullObserver{});
}

inline std::uint64_t path_seed(std::uint64_t master_seed, std::int64_t index) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(index));
}

/// Generates `count` iid paths in parallel. Identical inputs give
/// bit-identical output for any worker count.
inline PathEnsemble simulate_ensemble(const TransformContext& ctx, double start, int n,
                                      int substeps, std::int64_t count,
                                      std::uint64_t master_seed) {
  if (count < 1) throw DomainError("simulate_ensemble: count must be >= 1");
  PathEnsemble ensemble;
  ensemble.start = start;
  ensemble.n = n;
  ensemble.substeps = substeps;
  ensemble.master_seed = master_seed;
  ensemble.paths.resize(static_cast<std::size_t>(count));
  parallel_for(count, [&](std::int64_t i) {
    ensemble.paths[static_cast<std::size_t>(i)] =
        simulate_diffusion(ctx, start, n, substeps, path_seed(master_seed, i));
  });
  return ensemble;
}

/// Streams the fine-resolution trajectory of each ensemble path through
/// `per_path(path_index, path, fine_values)` without materializing more than
/// one fine grid per worker. Regeneration is bit-identical to the stored
/// coarse values because path seeds are derived, not drawn.
inline void for_each_fine_path(
    const TransformContext& ctx, const PathEnsemble& ensemble,
    const std::function<void(std::int64_t, const SamplePath&, const std::vector<double>&)>&
        per_path) {
  parallel_for(ensemble.count(), [&](std::int64_t i) {
    std::vector<double> fine(static_cast<std::size_t>(ensemble.n) * ensemble.substeps + 1);
    const SamplePath path = simulate_diffusion(
        ctx, ensemble.start, ensemble.n, ensemble.substeps, path_seed(ensemble.master_seed, i),
        [&fine](int j, double, double state) { fine[static_cast<std::size_t>(j)] = state; });
    per_path(i, path, fine);
  });
}

/// Standard Brownian bridge from 0 at time 0 to `endpoint` at time t, sampled
/// at j*t/m by the exact Gaussian conditional recursion (no discretization
/// bias in the bridge itself).
struct BridgePath {
  double horizon = 0.0;
  double endpoint = 0.0;
  int m = 0;
  std::vector<double> values;  // m+1 entries, values[0] = 0, values[m] = endpoint
};

inline BridgePath brownian_bridge(double t, double endpoint, int m, std::uint64_t seed) {
  if (!(t > 0.0)) throw DomainError("brownian_bridge: horizon must be positive");
  if (m < 1) throw DomainError("brownian_bridge: need at least one inner step");
  BridgePath bridge;
  bridge.horizon = t;
  bridge.endpoint = endpoint;
  bridge.m = m;
  bridge.values.resize(static_cast<std::size_t>(m) + 1);
  bridge.values[0] = 0.0;

  SplitMix64 rng(seed);
  const double dt = t / m;
  double cur = 0.0;
  for (int j = 1; j < m; ++j) {
    const double remaining = t - (j - 1) * dt;
    const double mean = cur + (endpoint - cur) * dt / remaining;
    const double var = dt * (remaining - dt) / remaining;
    cur = mean + std::sqrt(var) * rng.next_normal();
    bridge.values[static_cast<std::size_t>(j)] = cur;
  }
  bridge.values[static_cast<std::size_t>(m)] = endpoint;
  return bridge;
}

/// CSV export, columns path_id,k,value.
inline void export_paths_csv(const PathEnsemble& ensemble, std::ostream& out) {
  out << "path_id,k,value\n";
  for (std::size_t i = 0; i < ensemble.paths.size(); ++i)
    for (std::size_t k = 0; k < ensemble.paths[i].values.size(); ++k)
      out << i << ',' << k << ',' << format_double(ensemble.paths[i].values[k]) << '\n';
}

/// Reads the export format back for offline inspection. Seeds and substeps
/// are not part of the file, so the result carries values only.
inline PathEnsemble import_paths_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "path_id,k,value")
    throw std::runtime_error("paths csv: missing path_id,k,value header");
  std::map<std::int64_t, std::map<std::int64_t, double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("paths csv: malformed row '" + line + "'");
    rows[std::stoll(line.substr(0, c1))][std::stoll(line.substr(c1 + 1, c2 - c1 - 1))] =
        parse_double(std::string_view(line).substr(c2 + 1));
  }
  PathEnsemble ensemble;
  for (auto& [id, by_k] : rows) {
    SamplePath path;
    path.n = static_cast<int>(by_k.size()) - 1;
    path.values.reserve(by_k.size());
    for (auto& [k, v] : by_k) path.values.push_back(v);
    path.start = path.values.empty() ? 0.0 : path.values.front();
    ensemble.paths.push_back(std::move(path));
  }
  if (!ensemble.paths.empty()) {
    ensemble.start = ensemble.paths.front().start;
    ensemble.n = ensemble.paths.front().n;
  }
  return ensemble;
}

}  // namespace sre
