#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sre/config.hpp"
#include "sre/parallel.hpp"
#include "sre/studies.hpp"

using namespace sre;

namespace {

const char* kMinimalConfig = R"(
[spec_q]
family = constant
c = 2.0
delta = 0.49
L = 0.01

[spec_p]
family = constant
c = 1.0
delta = 0.9
L = 0.01
)";

std::string with_scale(const std::string& base, const std::string& extra) {
  return base + "\n" + extra + "\n";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("minimal config parses with documented defaults") {
  const ExperimentConfig cfg = parse_config(kMinimalConfig);
  CHECK(cfg.spec_q.family == "constant");
  CHECK(cfg.spec_q.params.at("c") == 2.0);
  CHECK(cfg.start == 0.0);
  CHECK(cfg.seed == 12345);
  CHECK(cfg.n_list == std::vector<int>{8, 16, 32, 64});
  CHECK(cfg.substeps == 32);
  CHECK(cfg.kernel == "surrogate");
  CHECK(cfg.slln_reps == 1);
}

TEST_CASE("config rejections carry line and key") {
  // negative n_paths
  CHECK_THROWS_AS(parse_config(with_scale(kMinimalConfig, "[scale]\nn_paths = -5")),
                  ConfigError);
  // duplicate key names the key
  try {
    parse_config(with_scale(kMinimalConfig, "[scale]\nn_paths = 10\nn_paths = 20"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "n_paths");
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }
  // unknown key
  try {
    parse_config(with_scale(kMinimalConfig, "[scale]\nbogus = 1"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "bogus");
    CHECK(e.line > 0);
  }
  // unknown section
  CHECK_THROWS_AS(parse_config(with_scale(kMinimalConfig, "[mystery]\nx = 1")), ConfigError);
  // type error
  CHECK_THROWS_AS(parse_config(with_scale(kMinimalConfig, "[scale]\nn_paths = many")),
                  ConfigError);
  // key before any section
  CHECK_THROWS_AS(parse_config("orphan = 1\n"), ConfigError);
  // missing required family
  CHECK_THROWS_AS(parse_config("[spec_q]\nfamily = constant\nc = 1\ndelta = 0.9\nL = 0.01\n"),
                  ConfigError);
}

TEST_CASE("make_spec instantiates the built-in families") {
  FamilySpec fam;
  fam.family = "sinusoidal";
  fam.params = {{"a", 2.0}, {"b", 0.5}, {"omega", 1.0}};
  fam.delta = 0.39;
  fam.L = 0.51;
  const auto spec = make_spec(fam);
  CHECK(spec.value(0.0) == 2.0);
  CHECK(spec.declared_delta() == 0.39);

  fam.family = "logistic";
  fam.params = {{"a", 1.5}, {"b", 0.4}};
  fam.delta = 0.4;
  fam.L = 0.9;
  CHECK(make_spec(fam).value(0.0) == 1.5);
}

TEST_CASE("validate study writes a certificate artifact") {
  ExperimentConfig cfg = parse_config(kMinimalConfig);
  cfg.output_dir = "test_out/validate";
  const StudyResult result = run_study(cfg, Study::validate);
  CHECK(result.exit_code == 0);
  CHECK(result.failures.empty());
  const std::string body = slurp("test_out/validate/certificates.csv");
  CHECK(body.rfind("spec,family,delta,L,C1,C2", 0) == 0);
  CHECK(std::filesystem::exists("test_out/validate/manifest.json"));
}

TEST_CASE("certification failure surfaces as ConfigError citing the violation") {
  const std::string bad = R"(
[spec_q]
family = sinusoidal
a = 2.0
b = 0.5
omega = 1.0
delta = 0.8
L = 0.51

[spec_p]
family = constant
c = 1.0
delta = 0.9
L = 0.01
)";
  const ExperimentConfig cfg = parse_config(bad);
  ExperimentConfig out = cfg;
  out.output_dir = "test_out/cert_fail";
  try {
    run_study(out, Study::validate);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("certification failed") != std::string::npos);
  }
}

TEST_CASE("entropy study emits the convergence CSV and passes in the Gaussian case") {
  ExperimentConfig cfg = parse_config(kMinimalConfig);
  cfg.output_dir = "test_out/entropy";
  cfg.kernel = "exact";
  cfg.n_list = {4, 8};
  cfg.n_paths = 2000;
  cfg.substeps = 1;
  const StudyResult result = run_study(cfg, Study::entropy_converge);
  CHECK(result.exit_code == 0);
  const std::string body = slurp("test_out/entropy/entropy_convergence.csv");
  CHECK(body.rfind("n,discrete,discrete_se,lower,upper,closed_form,closed_form_se", 0) == 0);
  CHECK(std::count(body.begin(), body.end(), '\n') == 3);  // header + 2 rows
}

TEST_CASE("exact kernel demands constant families") {
  ExperimentConfig cfg = parse_config(kMinimalConfig);
  cfg.spec_q.family = "sinusoidal";
  cfg.spec_q.params = {{"a", 2.0}, {"b", 0.5}, {"omega", 1.0}};
  cfg.spec_q.delta = 0.39;
  cfg.spec_q.L = 0.51;
  cfg.kernel = "exact";
  cfg.output_dir = "test_out/exact_fail";
  CHECK_THROWS_AS(run_study(cfg, Study::entropy_converge), ConfigError);
}

TEST_CASE("study reruns are byte-identical across worker counts") {
  ExperimentConfig cfg = parse_config(kMinimalConfig);
  cfg.kernel = "exact";
  cfg.n_list = {4, 8};
  cfg.n_paths = 500;
  cfg.substeps = 2;
  cfg.slln_n_max = 40;

  cfg.output_dir = "test_out/det_a";
  set_worker_count(1);
  run_study(cfg, Study::entropy_converge);
  run_study(cfg, Study::qv_check);
  run_study(cfg, Study::slln);
  cfg.output_dir = "test_out/det_b";
  set_worker_count(4);
  run_study(cfg, Study::entropy_converge);
  run_study(cfg, Study::qv_check);
  run_study(cfg, Study::slln);
  set_worker_count(0);

  for (const char* name : {"entropy_convergence.csv", "qv_check.csv", "slln.csv"})
    CHECK(slurp(std::filesystem::path("test_out/det_a") / name) ==
          slurp(std::filesystem::path("test_out/det_b") / name));
}

TEST_CASE("worker count honors the environment override") {
  set_worker_count(0);
  setenv("SRE_WORKERS", "3", 1);
  CHECK(worker_count() == 3);
  unsetenv("SRE_WORKERS");
  CHECK(worker_count() >= 1);
  set_worker_count(2);
  CHECK(worker_count() == 2);
  set_worker_count(0);
}

TEST_CASE("density study emits per-point envelope verdicts") {
  ExperimentConfig cfg = parse_config(kMinimalConfig);
  cfg.output_dir = "test_out/density";
  cfg.density_t_list = {0.25};
  cfg.density_x_list = {0.0};
  cfg.offset_count = 5;
  cfg.mesh_n_time = 200;
  const StudyResult result = run_study(cfg, Study::density_check);
  CHECK(result.exit_code == 0);
  const std::string body = slurp("test_out/density/density_check.csv");
  CHECK(body.rfind("t,x,y,value,surrogate_lower,surrogate_upper", 0) == 0);
  CHECK(std::count(body.begin(), body.end(), '\n') == 6);  // header + 5 offsets
}
