#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sre/coefficients.hpp"
#include "sre/errors.hpp"

namespace sre {

/// Named coefficient family plus parameters, straight from a config section.
struct FamilySpec {
  std::string family;  // constant | sinusoidal | logistic
  std::map<std::string, double> params;
  double delta = 0.0;
  double L = 0.0;
};

/// Flat key-value config with sections. Unknown sections/keys and duplicate
/// keys are rejected at parse time with the offending line.
struct ExperimentConfig {
  FamilySpec spec_q;
  FamilySpec spec_p;

  double start = 0.0;
  std::uint64_t seed = 12345;
  std::string output_dir = "out";

  Interval domain{-10.0, 10.0};
  int grid_points = 2001;

  std::vector<int> n_list{8, 16, 32, 64};
  std::int64_t n_paths = 20000;
  int substeps = 32;
  std::int64_t n_inner = 10000;
  int bridge_m = 64;
  int mesh_n_space = 0;  // 0: derived from t and the declared bounds
  int mesh_n_time = 400;
  std::string kernel = "surrogate";  // exact | surrogate | bridge_mc

  std::vector<double> density_t_list{0.05, 0.1, 0.25, 0.5, 1.0};
  std::vector<double> density_x_list{-1.0, 0.0, 1.0};
  double offset_lo = -1.0;
  double offset_hi = 1.0;
  int offset_count = 13;
  double density_slack = 1e-3;

  int slln_n_max = 200;
  int slln_reps = 1;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

inline double config_double(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(line, key, "line " + std::to_string(line) + ": key '" + key +
                                     "' expects a number, got '" + v + "'");
  }
}

inline std::int64_t config_int(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return i;
  } catch (const std::exception&) {
    throw ConfigError(line, key, "line " + std::to_string(line) + ": key '" + key +
                                     "' expects an integer, got '" + v + "'");
  }
}

template <class T, class Parse>
std::vector<T> config_list(const std::string& v, int line, const std::string& key, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse(trim(item), line, key));
  if (out.empty())
    throw ConfigError(line, key, "line " + std::to_string(line) + ": key '" + key +
                                     "' expects a comma-separated list");
  return out;
}

}  // namespace detail

/// Parses config text. Total: either returns a full config (defaults applied)
/// or throws ConfigError pointing at the first offending line/key.
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;  // "section.key"
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;

  const std::set<std::string> known_sections{"run",   "spec_q",  "spec_p", "domain",
                                             "scale", "density", "slln"};
  const std::set<std::string> family_keys{"family", "delta", "L", "a", "b", "c", "omega"};

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(line_no, "", "line " + std::to_string(line_no) +
                                           ": malformed section header '" + raw + "'");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (!known_sections.count(section))
        throw ConfigError(line_no, section, "line " + std::to_string(line_no) +
                                                ": unknown section '" + section + "'");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line_no, "", "line " + std::to_string(line_no) +
                                         ": expected key = value, got '" + raw + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(line_no, key, "line " + std::to_string(line_no) +
                                          ": empty key or value");
    if (section.empty())
      throw ConfigError(line_no, key, "line " + std::to_string(line_no) + ": key '" + key +
                                          "' appears before any [section]");
    if (!seen.insert(section + "." + key).second)
      throw ConfigError(line_no, key, "line " + std::to_string(line_no) + ": duplicate key '" +
                                          key + "' in section [" + section + "]");

    const auto unknown = [&]() -> ConfigError {
      return ConfigError(line_no, key, "line " + std::to_string(line_no) + ": unknown key '" +
                                           key + "' in section [" + section + "]");
    };

    if (section == "run") {
      if (key == "start") cfg.start = detail::config_double(value, line_no, key);
      else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::config_int(value, line_no, key));
      else if (key == "output_dir") cfg.output_dir = value;
      else throw unknown();
    } else if (section == "spec_q" || section == "spec_p") {
      FamilySpec& fam = section == "spec_q" ? cfg.spec_q : cfg.spec_p;
      if (!family_keys.count(key)) throw unknown();
      if (key == "family") fam.family = value;
      else if (key == "delta") fam.delta = detail::config_double(value, line_no, key);
      else if (key == "L") fam.L = detail::config_double(value, line_no, key);
      else fam.params[key] = detail::config_double(value, line_no, key);
    } else if (section == "domain") {
      if (key == "lo") cfg.domain.lo = detail::config_double(value, line_no, key);
      else if (key == "hi") cfg.domain.hi = detail::config_double(value, line_no, key);
      else if (key == "grid_points") cfg.grid_points = static_cast<int>(detail::config_int(value, line_no, key));
      else throw unknown();
    } else if (section == "scale") {
      if (key == "n_list")
        cfg.n_list = detail::config_list<int>(value, line_no, key, [](const std::string& s, int l, const std::string& k) {
          return static_cast<int>(detail::config_int(s, l, k));
        });
      else if (key == "n_paths") cfg.n_paths = detail::config_int(value, line_no, key);
      else if (key == "substeps") cfg.substeps = static_cast<int>(detail::config_int(value, line_no, key));
      else if (key == "n_inner") cfg.n_inner = detail::config_int(value, line_no, key);
      else if (key == "bridge_m") cfg.bridge_m = static_cast<int>(detail::config_int(value, line_no, key));
      else if (key == "mesh_n_space") cfg.mesh_n_space = static_cast<int>(detail::config_int(value, line_no, key));
      else if (key == "mesh_n_time") cfg.mesh_n_time = static_cast<int>(detail::config_int(value, line_no, key));
      else if (key == "kernel") cfg.kernel = value;
      else throw unknown();
    } else if (section == "density") {
      if (key == "t_list")
        cfg.density_t_list = detail::config_list<double>(value, line_no, key, detail::config_double);
      else if (key == "x_list")
        cfg.density_x_list = detail::config_list<double>(value, line_no, key, detail::config_double);
      else if (key == "offset_lo") cfg.offset_lo = detail::config_double(value, line_no, key);
      else if (key == "offset_hi") cfg.offset_hi = detail::config_double(value, line_no, key);
      else if (key == "offset_count") cfg.offset_count = static_cast<int>(detail::config_int(value, line_no, key));
      else if (key == "slack") cfg.density_slack = detail::config_double(value, line_no, key);
      else throw unknown();
    } else if (section == "slln") {
      if (key == "n_max") cfg.slln_n_max = static_cast<int>(detail::config_int(value, line_no, key));
      else if (key == "reps") cfg.slln_reps = static_cast<int>(detail::config_int(value, line_no, key));
      else throw unknown();
    }
  }

  // structural validation (line numbers no longer apply; report key names)
  const auto require = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(0, key, "config: " + what);
  };
  for (const auto* fam : {&cfg.spec_q, &cfg.spec_p}) {
    const std::string who = fam == &cfg.spec_q ? "spec_q" : "spec_p";
    require(!fam->family.empty(), who + ".family", who + ": family is required");
    require(fam->delta > 0.0 && fam->delta <= 1.0, who + ".delta",
            who + ": delta must lie in (0,1]");
    require(fam->L > 0.0, who + ".L", who + ": L must be positive");
    if (fam->family == "constant")
      require(fam->params.count("c") == 1, who + ".c", who + ": constant family needs c");
    else if (fam->family == "sinusoidal")
      require(fam->params.count("a") && fam->params.count("b") && fam->params.count("omega"),
              who + ".a", who + ": sinusoidal family needs a, b, omega");
    else if (fam->family == "logistic")
      require(fam->params.count("a") && fam->params.count("b"), who + ".a",
              who + ": logistic family needs a, b");
    else
      throw ConfigError(0, who + ".family", who + ": unknown family '" + fam->family + "'");
  }
  require(cfg.domain.lo < cfg.domain.hi, "domain", "domain must be nondegenerate");
  require(cfg.grid_points >= 2, "domain.grid_points", "grid_points must be >= 2");
  require(cfg.n_paths > 0, "scale.n_paths", "n_paths must be positive");
  require(cfg.substeps > 0, "scale.substeps", "substeps must be positive");
  require(cfg.n_inner > 0, "scale.n_inner", "n_inner must be positive");
  require(cfg.bridge_m > 0, "scale.bridge_m", "bridge_m must be positive");
  require(cfg.mesh_n_time >= 2, "scale.mesh_n_time", "mesh_n_time must be >= 2");
  require(cfg.mesh_n_space >= 0, "scale.mesh_n_space", "mesh_n_space must be >= 0");
  for (int n : cfg.n_list) require(n >= 1, "scale.n_list", "n_list entries must be >= 1");
  require(std::is_sorted(cfg.n_list.begin(), cfg.n_list.end()), "scale.n_list",
          "n_list must be increasing");
  require(cfg.kernel == "exact" || cfg.kernel == "surrogate" || cfg.kernel == "bridge_mc",
          "scale.kernel", "kernel must be exact, surrogate or bridge_mc");
  require(cfg.offset_count >= 1, "density.offset_count", "offset_count must be >= 1");
  require(cfg.density_slack >= 0.0, "density.slack", "slack must be nonnegative");
  for (double t : cfg.density_t_list)
    require(t > 0.0 && t <= 1.0, "density.t_list", "t values must lie in (0,1]");
  require(cfg.slln_n_max >= 1, "slln.n_max", "n_max must be >= 1");
  require(cfg.slln_reps >= 1, "slln.reps", "reps must be >= 1");
  return cfg;
}

/// Instantiates the named coefficient family.
inline CoefficientSpec make_spec(const FamilySpec& fam) {
  if (fam.family == "constant")
    return CoefficientSpec::constant(fam.params.at("c"), fam.delta, fam.L);
  if (fam.family == "sinusoidal")
    return CoefficientSpec::sinusoidal(fam.params.at("a"), fam.params.at("b"),
                                       fam.params.at("omega"), fam.delta, fam.L);
  if (fam.family == "logistic")
    return CoefficientSpec::logistic(fam.params.at("a"), fam.params.at("b"), fam.delta, fam.L);
  throw ConfigError(0, "family", "unknown family '" + fam.family + "'");
}

}  // namespace sre
