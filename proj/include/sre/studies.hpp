#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sre/config.hpp"
#include "sre/csv.hpp"
#include "sre/entropy.hpp"
#include "sre/errors.hpp"
#include "sre/kernels.hpp"
#include "sre/slln.hpp"
#include "sre/version.hpp"

namespace sre {

enum class Study { validate, density_check, entropy_converge, qv_check, slln };

inline const char* to_string(Study s) {
  switch (s) {
    case Study::validate: return "validate";
    case Study::density_check: return "density-check";
    case Study::entropy_converge: return "entropy-converge";
    case Study::qv_check: return "qv-check";
    case Study::slln: return "slln";
  }
  return "?";
}

inline Study parse_study(const std::string& name) {
  for (Study s : {Study::validate, Study::density_check, Study::entropy_converge,
                  Study::qv_check, Study::slln})
    if (name == to_string(s)) return s;
  throw ConfigError(0, "study", "unknown study '" + name + "'");
}

/// One failed study-level assertion, with the measured value and the bound it
/// was held against (tolerances are always printed, never implicit).
struct StudyFailure {
  std::string check;
  double measured = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct StudyResult {
  int exit_code = 0;
  std::vector<StudyFailure> failures;
  std::vector<std::string> artifacts;  // file names inside output_dir
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline nlohmann::json family_json(const FamilySpec& fam) {
  nlohmann::json j{{"family", fam.family}, {"delta", fam.delta}, {"L", fam.L}};
  for (const auto& [k, v] : fam.params) j[k] = v;
  return j;
}

inline nlohmann::json config_json(const ExperimentConfig& cfg) {
  return nlohmann::json{
      {"start", cfg.start},
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
      {"spec_q", family_json(cfg.spec_q)},
      {"spec_p", family_json(cfg.spec_p)},
      {"domain", {{"lo", cfg.domain.lo}, {"hi", cfg.domain.hi}, {"grid_points", cfg.grid_points}}},
      {"scale",
       {{"n_list", cfg.n_list},
        {"n_paths", cfg.n_paths},
        {"substeps", cfg.substeps},
        {"n_inner", cfg.n_inner},
        {"bridge_m", cfg.bridge_m},
        {"mesh_n_space", cfg.mesh_n_space},
        {"mesh_n_time", cfg.mesh_n_time},
        {"kernel", cfg.kernel}}},
      {"density",
       {{"t_list", cfg.density_t_list},
        {"x_list", cfg.density_x_list},
        {"offset_lo", cfg.offset_lo},
        {"offset_hi", cfg.offset_hi},
        {"offset_count", cfg.offset_count},
        {"slack", cfg.density_slack}}},
      {"slln", {{"n_max", cfg.slln_n_max}, {"reps", cfg.slln_reps}}}};
}

// Kernel backend factory; exact is only available for constant families.
inline std::unique_ptr<KernelBackend> make_kernel(const std::string& kind,
                                                  const FamilySpec& fam,
                                                  const TransformContext& ctx,
                                                  const ExperimentConfig& cfg,
                                                  std::uint64_t salt) {
  if (kind == "exact") {
    if (fam.family != "constant")
      throw ConfigError(0, "scale.kernel",
                        "kernel 'exact' requires a constant coefficient family");
    return std::make_unique<ExactConstantKernel>(fam.params.at("c"));
  }
  if (kind == "surrogate") return std::make_unique<SurrogateKernel>(ctx);
  if (kind == "bridge_mc")
    return std::make_unique<BridgeMcKernel>(ctx, cfg.bridge_m, cfg.n_inner, salt);
  throw ConfigError(0, "scale.kernel", "unknown kernel '" + kind + "'");
}

}  // namespace detail

/// Runs one study: certifies both coefficient specs, writes CSV artifacts and
/// a manifest into output_dir, and returns the machine-readable failure list
/// (exit code 0 iff empty). Reruns with the same config and seed produce
/// byte-identical CSV bodies for any worker count.
inline StudyResult run_study(const ExperimentConfig& cfg, Study study) {
  namespace fs = std::filesystem;
  StudyResult result;

  const CoefficientSpec spec_q = make_spec(cfg.spec_q);
  const CoefficientSpec spec_p = make_spec(cfg.spec_p);

  RegularityCertificate cert_q{}, cert_p{};
  try {
    cert_q = validate_assumption(spec_q, cfg.domain, cfg.grid_points);
    cert_p = validate_assumption(spec_p, cfg.domain, cfg.grid_points);
  } catch (const BoundViolation& e) {
    throw ConfigError(0, "spec", std::string("coefficient certification failed: ") + e.what());
  }

  const TransformContext ctx_q(spec_q, cfg.start);
  const TransformContext ctx_p(spec_p, cfg.start);

  fs::create_directories(cfg.output_dir);
  const auto emit = [&](const std::string& name, const std::string& body) {
    write_text_atomic(fs::path(cfg.output_dir) / name, body);
    result.artifacts.push_back(name);
  };
  const auto fail = [&](std::string check, double measured, double bound, std::string detail) {
    result.failures.push_back({std::move(check), measured, bound, std::move(detail)});
  };

  switch (study) {
    case Study::validate: {
      std::ostringstream csv;
      csv << "spec,family,delta,L,C1,C2,domain_lo,domain_hi,grid_points\n";
      csv << "q," << cfg.spec_q.family << ',' << format_double(cert_q.delta) << ','
          << format_double(cert_q.L) << ',' << format_double(cert_q.C1) << ','
          << format_double(cert_q.C2) << ',' << format_double(cfg.domain.lo) << ','
          << format_double(cfg.domain.hi) << ',' << cfg.grid_points << '\n';
      csv << "p," << cfg.spec_p.family << ',' << format_double(cert_p.delta) << ','
          << format_double(cert_p.L) << ',' << format_double(cert_p.C1) << ','
          << format_double(cert_p.C2) << ',' << format_double(cfg.domain.lo) << ','
          << format_double(cfg.domain.hi) << ',' << cfg.grid_points << '\n';
      emit("certificates.csv", csv.str());
      break;
    }

    case Study::density_check: {
      std::ostringstream csv;
      csv << "t,x,y,value,surrogate_lower,surrogate_upper,gaussian_lower,gaussian_upper,"
             "pass_surrogate,pass_gaussian\n";
      for (double t : cfg.density_t_list) {
        for (double x : cfg.density_x_list) {
          FdMesh mesh = fd_default_mesh(spec_q, t, x, cfg.mesh_n_time);
          if (cfg.mesh_n_space > 0) mesh.n_space = cfg.mesh_n_space;
          const FdDensityTable table = kernel_fd_oracle(spec_q, t, x, mesh);
          std::ostringstream table_csv;
          export_density_csv(table, table_csv);
          emit("fd_table_t" + format_double(t) + "_x" + format_double(x) + ".csv",
               table_csv.str());
          for (int i = 0; i < cfg.offset_count; ++i) {
            const double frac = cfg.offset_count == 1
                                    ? 0.0
                                    : static_cast<double>(i) / (cfg.offset_count - 1);
            const double y = x + cfg.offset_lo + frac * (cfg.offset_hi - cfg.offset_lo);
            const double value = table.value_at(y);
            const Envelope sharp = surrogate_envelope(cert_q, ctx_q, t, x, y);
            const Envelope wide = gaussian_envelope(cert_q, t, x, y);
            const bool ok_sharp = value >= sharp.lower - cfg.density_slack &&
                                  value <= sharp.upper + cfg.density_slack;
            const bool ok_wide = value >= wide.lower - cfg.density_slack &&
                                 value <= wide.upper + cfg.density_slack;
            csv << format_double(t) << ',' << format_double(x) << ',' << format_double(y) << ','
                << format_double(value) << ',' << format_double(sharp.lower) << ','
                << format_double(sharp.upper) << ',' << format_double(wide.lower) << ','
                << format_double(wide.upper) << ',' << (ok_sharp ? 1 : 0) << ','
                << (ok_wide ? 1 : 0) << '\n';
            if (!ok_sharp)
              fail("density.surrogate_envelope", value, sharp.lower,
                   "fd density escapes the sharp envelope at (t,x,y)=(" + format_double(t) +
                       "," + format_double(x) + "," + format_double(y) + "), slack " +
                       format_double(cfg.density_slack));
            if (!ok_wide)
              fail("density.gaussian_envelope", value, wide.lower,
                   "fd density escapes the global envelope at (t,x,y)=(" + format_double(t) +
                       "," + format_double(x) + "," + format_double(y) + "), slack " +
                       format_double(cfg.density_slack));
          }
        }
      }
      emit("density_check.csv", csv.str());
      break;
    }

    case Study::entropy_converge: {
      const auto kernel_q =
          detail::make_kernel(cfg.kernel, cfg.spec_q, ctx_q, cfg, derive_seed(cfg.seed, 101));
      const auto kernel_p =
          detail::make_kernel(cfg.kernel, cfg.spec_p, ctx_p, cfg, derive_seed(cfg.seed, 202));
      const ConvergencePlan plan{ctx_q,     ctx_p,       cert_q,       cert_p, *kernel_q,
                                 *kernel_p, cfg.start,   cfg.substeps, cfg.n_paths,
                                 cfg.seed};
      const auto rows = convergence_study(plan, cfg.n_list);
      std::ostringstream csv;
      csv << "n,discrete,discrete_se,lower,upper,closed_form,closed_form_se\n";
      for (const auto& row : rows)
        csv << row.n << ',' << format_double(row.discrete.value) << ','
            << format_double(row.discrete.std_error) << ',' << format_double(row.lower.value)
            << ',' << format_double(row.upper.value) << ','
            << format_double(row.closed_form.value) << ','
            << format_double(row.closed_form.std_error) << '\n';
      emit("entropy_convergence.csv", csv.str());

      const auto& last = rows.back();
      const double tol_low = 3.0 * (last.lower.std_error + last.closed_form.std_error);
      const double tol_up = 3.0 * (last.upper.std_error + last.closed_form.std_error);
      if (last.closed_form.value < last.lower.value - tol_low)
        fail("entropy.bracket_contains_closed_form", last.closed_form.value,
             last.lower.value - tol_low,
             "closed form below bracket at n=" + std::to_string(last.n) + " (3-SE band " +
                 format_double(tol_low) + ")");
      if (last.closed_form.value > last.upper.value + tol_up)
        fail("entropy.bracket_contains_closed_form", last.closed_form.value,
             last.upper.value + tol_up,
             "closed form above bracket at n=" + std::to_string(last.n) + " (3-SE band " +
                 format_double(tol_up) + ")");
      break;
    }

    case Study::qv_check: {
      std::ostringstream csv;
      csv << "n,qv,qv_se,time_quad,time_quad_se\n";
      ScalarEstimate last_qv{}, last_tq{};
      for (int n : cfg.n_list) {
        const PathEnsemble ensemble =
            simulate_ensemble(ctx_q, cfg.start, n, cfg.substeps, cfg.n_paths,
                              derive_seed(cfg.seed, static_cast<std::uint64_t>(n)));
        last_qv = qv_riemann_sum(ensemble, ctx_p);
        last_tq = ratio_time_quadrature(ctx_q, ctx_p, ensemble);
        csv << n << ',' << format_double(last_qv.value) << ','
            << format_double(last_qv.std_error) << ',' << format_double(last_tq.value) << ','
            << format_double(last_tq.std_error) << '\n';
      }
      emit("qv_check.csv", csv.str());
      const double tol = 3.0 * (last_qv.std_error + last_tq.std_error);
      if (std::abs(last_qv.value - last_tq.value) > tol)
        fail("qv.riemann_limit", std::abs(last_qv.value - last_tq.value), tol,
             "riemann sum and time quadrature disagree at the largest n");
      break;
    }

    case Study::slln: {
      const auto kernel_q =
          detail::make_kernel(cfg.kernel, cfg.spec_q, ctx_q, cfg, derive_seed(cfg.seed, 101));
      const auto kernel_p =
          detail::make_kernel(cfg.kernel, cfg.spec_p, ctx_p, cfg, derive_seed(cfg.seed, 202));
      std::ostringstream summary;
      summary << "run,final_running_avg\n";
      for (int rep = 0; rep < cfg.slln_reps; ++rep) {
        const SllnRun run =
            slln_run(ctx_q, cfg.start, cfg.slln_n_max, cfg.substeps, *kernel_q, *kernel_p,
                     derive_seed(cfg.seed, 303, static_cast<std::uint64_t>(rep)));
        std::ostringstream csv;
        csv << "k,Y_k,running_avg\n";
        for (int k = 1; k <= run.n_max; ++k)
          csv << k << ',' << format_double(run.per_k[static_cast<std::size_t>(k) - 1]) << ','
              << format_double(run.running_avg[static_cast<std::size_t>(k) - 1]) << '\n';
        emit(cfg.slln_reps == 1 ? std::string("slln.csv")
                                : "slln_run_" + std::to_string(rep) + ".csv",
             csv.str());
        summary << rep << ',' << format_double(run.running_avg.back()) << '\n';
        if (!std::isfinite(run.running_avg.back()))
          fail("slln.finite", run.running_avg.back(), 0.0,
               "running average diverged in rep " + std::to_string(rep));
      }
      if (cfg.slln_reps > 1) emit("slln_summary.csv", summary.str());
      break;
    }
  }

  // manifest: everything needed to reproduce, nothing run-dependent
  nlohmann::json manifest{{"study", to_string(study)},
                          {"version", kVersion},
                          {"seed", cfg.seed},
                          {"config", detail::config_json(cfg)},
                          {"config_hash", detail::fnv1a(detail::config_json(cfg).dump())},
                          {"artifacts", result.artifacts}};
  write_text_atomic(fs::path(cfg.output_dir) / "manifest.json", manifest.dump(2) + "\n");
  result.artifacts.push_back("manifest.json");

  if (!result.failures.empty()) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : result.failures)
      failures.push_back({{"check", f.check},
                          {"measured", f.measured},
                          {"bound", f.bound},
                          {"detail", f.detail}});
    write_text_atomic(fs::path(cfg.output_dir) / "failures.json", failures.dump(2) + "\n");
    result.artifacts.push_back("failures.json");
    result.exit_code = 1;
  }
  return result;
}

}  // namespace sre
