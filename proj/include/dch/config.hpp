#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dch/bloch.hpp"
#include "dch/common.hpp"

namespace dch {

constexpr int kConfigSchemaVersion = 1;

// Run settings for the pipeline and the CLI. Defaults reproduce the standard
// verification setup at (tau, epsilon) = (0.6, 0.1) on the 96^2 grid.
struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  dvec tau_list{0.6};
  dvec epsilon_list{0.1};
  std::string out_dir = "out";
  bool cache = true;
  int jobs = 1;

  double ode_tol = 1e-12;

  int hill_n_max = 8;
  double parabolic_tol = 1e-6;

  double profile_L = 20.0;
  double profile_h = 0.01;
  double profile_tol = 1e-10;

  int nr = 96, nz = 96;
  double newton_tol = 1e-9;
  double grid_margin = 1.0;

  int m_max = 4;
  int eig_k = 3;
  double eig_tol = 1e-8;
  double tol_zero_factor = 20.0;
  int coercivity_iters = 60;
  dvec zeta_grid = default_zeta_grid();

  // Canonical per-section serialization; cache keys hash these, so editing
  // comments or whitespace never invalidates and editing a tolerance always
  // does, exactly for the stages that read it.
  std::string section_geometry() const { return "ode_tol=" + format_double(ode_tol) + "\n"; }
  std::string section_hill() const {
    return "n_max=" + std::to_string(hill_n_max) +
           "\nparabolic_tol=" + format_double(parabolic_tol) + "\n";
  }
  std::string section_profile() const {
    return "L=" + format_double(profile_L) + "\nh=" + format_double(profile_h) +
           "\ntol=" + format_double(profile_tol) + "\n";
  }
  std::string section_solver() const {
    return "nr=" + std::to_string(nr) + "\nnz=" + std::to_string(nz) +
           "\ntol=" + format_double(newton_tol) + "\nmargin=" + format_double(grid_margin) +
           "\n";
  }
  std::string section_bloch() const {
    std::string s = "m_max=" + std::to_string(m_max) + "\nk=" + std::to_string(eig_k) +
                    "\neig_tol=" + format_double(eig_tol) +
                    "\ntol_zero_factor=" + format_double(tol_zero_factor) +
                    "\ncoercivity_iters=" + std::to_string(coercivity_iters) + "\nzeta=";
    for (size_t i = 0; i < zeta_grid.size(); ++i) {
      if (i) s += ',';
      s += format_double(zeta_grid[i]);
    }
    return s + "\n";
  }
};

namespace detail {

struct ConfigEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct ConfigText {
  std::string name;  // file name for error positions
  std::map<std::string, std::map<std::string, ConfigEntry>> sections;

  [[noreturn]] void fail(int line, const std::string& what) const {
    throw config_error(name + ":" + std::to_string(line) + ": " + what);
  }
};

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Line format: '[section]', 'key = value', blank, or comment ('#' anywhere
// starts one; ';' only at line start). Values may not contain '#'.
inline ConfigText parse_config_text(const std::string& text, const std::string& name) {
  ConfigText out;
  out.name = name;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (!s.empty() && trim(s).rfind(';', 0) == 0) continue;
    size_t hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') out.fail(line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) out.fail(line, "empty section name");
      out.sections[section];
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) out.fail(line, "expected 'key = value'");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (key.empty()) out.fail(line, "empty key");
    if (section.empty()) out.fail(line, "key '" + key + "' before any [section]");
    auto [it, fresh] = out.sections[section].emplace(key, ConfigEntry{val, line});
    if (!fresh)
      out.fail(line, "duplicate key '" + key + "' in [" + section + "] (first at line " +
                         std::to_string(it->second.line) + ")");
  }
  return out;
}

struct SectionReader {
  const ConfigText& text;
  std::string section;
  std::map<std::string, ConfigEntry>* entries;

  SectionReader(ConfigText& t, const std::string& sec) : text(t), section(sec) {
    auto it = t.sections.find(sec);
    entries = it == t.sections.end() ? nullptr : &it->second;
  }

  ConfigEntry* find(const std::string& key) const {
    if (!entries) return nullptr;
    auto it = entries->find(key);
    if (it == entries->end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  [[noreturn]] void fail(const ConfigEntry& e, const std::string& key,
                         const std::string& what) const {
    text.fail(e.line, "[" + section + "] " + key + ": " + what);
  }

  void read(const std::string& key, double& out) const {
    ConfigEntry* e = find(key);
    if (!e) return;
    char* end = nullptr;
    double v = std::strtod(e->value.c_str(), &end);
    if (end == e->value.c_str() || *end != '\0') fail(*e, key, "not a number: '" + e->value + "'");
    out = v;
  }

  void read(const std::string& key, int& out) const {
    ConfigEntry* e = find(key);
    if (!e) return;
    char* end = nullptr;
    long v = std::strtol(e->value.c_str(), &end, 10);
    if (end == e->value.c_str() || *end != '\0')
      fail(*e, key, "not an integer: '" + e->value + "'");
    out = int(v);
  }

  void read(const std::string& key, bool& out) const {
    ConfigEntry* e = find(key);
    if (!e) return;
    const std::string& v = e->value;
    if (v == "on" || v == "true" || v == "1")
      out = true;
    else if (v == "off" || v == "false" || v == "0")
      out = false;
    else
      fail(*e, key, "expected on/off: '" + v + "'");
  }

  void read(const std::string& key, std::string& out) const {
    if (ConfigEntry* e = find(key)) out = e->value;
  }

  // An empty value is a valid empty list ('tau =' runs zero blocks).
  void read(const std::string& key, dvec& out) const {
    ConfigEntry* e = find(key);
    if (!e) return;
    dvec vals;
    std::istringstream in(e->value);
    std::string item;
    while (std::getline(in, item, ',')) {
      item = trim(item);
      char* end = nullptr;
      double v = std::strtod(item.c_str(), &end);
      if (item.empty() || end == item.c_str() || *end != '\0')
        fail(*e, key, "bad list element: '" + item + "'");
      vals.push_back(v);
    }
    out = std::move(vals);
  }
};

}  // namespace detail

// Parses and schema-checks a config. Unknown sections or keys, type errors,
// and out-of-range values all report the offending file:line.
inline RunConfig parse_config(const std::string& text, const std::string& name = "<config>") {
  detail::ConfigText t = detail::parse_config_text(text, name);

  static const std::map<std::string, std::vector<std::string>> schema = {
      {"run", {"schema_version", "tau", "epsilon", "out", "cache", "jobs"}},
      {"geometry", {"ode_tol"}},
      {"hill", {"n_max", "parabolic_tol"}},
      {"profile", {"L", "h", "tol"}},
      {"solver", {"nr", "nz", "tol", "margin"}},
      {"bloch", {"m_max", "k", "eig_tol", "tol_zero_factor", "coercivity_iters", "zeta"}},
  };
  for (const auto& [sec, keys] : t.sections) {
    auto it = schema.find(sec);
    if (it == schema.end()) {
      int line = keys.empty() ? 0 : keys.begin()->second.line;
      t.fail(line, "unknown section [" + sec + "]");
    }
    for (const auto& [key, entry] : keys) {
      const std::vector<std::string>& allowed = it->second;
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        t.fail(entry.line, "unknown key '" + key + "' in [" + sec + "]");
    }
  }

  RunConfig cfg;
  detail::SectionReader run(t, "run");
  run.read("schema_version", cfg.schema_version);
  run.read("tau", cfg.tau_list);
  run.read("epsilon", cfg.epsilon_list);
  run.read("out", cfg.out_dir);
  run.read("cache", cfg.cache);
  run.read("jobs", cfg.jobs);

  detail::SectionReader geo(t, "geometry");
  geo.read("ode_tol", cfg.ode_tol);

  detail::SectionReader hill(t, "hill");
  hill.read("n_max", cfg.hill_n_max);
  hill.read("parabolic_tol", cfg.parabolic_tol);

  detail::SectionReader prof(t, "profile");
  prof.read("L", cfg.profile_L);
  prof.read("h", cfg.profile_h);
  prof.read("tol", cfg.profile_tol);

  detail::SectionReader sol(t, "solver");
  sol.read("nr", cfg.nr);
  sol.read("nz", cfg.nz);
  sol.read("tol", cfg.newton_tol);
  sol.read("margin", cfg.grid_margin);

  detail::SectionReader bl(t, "bloch");
  bl.read("m_max", cfg.m_max);
  bl.read("k", cfg.eig_k);
  bl.read("eig_tol", cfg.eig_tol);
  bl.read("tol_zero_factor", cfg.tol_zero_factor);
  bl.read("coercivity_iters", cfg.coercivity_iters);
  bl.read("zeta", cfg.zeta_grid);

  auto require = [&](bool ok, const std::string& what) {
    if (!ok) throw config_error(name + ": " + what);
  };
  require(cfg.schema_version == kConfigSchemaVersion,
          "schema_version " + std::to_string(cfg.schema_version) + " not supported");
  for (double tau : cfg.tau_list)
    require(tau > 0.0 && tau < 1.0, "tau " + format_double(tau) + " outside (0, 1)");
  for (double eps : cfg.epsilon_list)
    require(eps > 0.0, "epsilon must be positive");
  require(cfg.jobs >= 1, "jobs must be >= 1");
  require(cfg.ode_tol > 0, "ode_tol must be positive");
  require(cfg.parabolic_tol > 0, "parabolic_tol must be positive");
  require(cfg.profile_L > 0 && cfg.profile_h > 0 && cfg.profile_tol > 0,
          "profile L, h, tol must be positive");
  require(cfg.hill_n_max >= 2, "hill n_max must be >= 2");
  require(cfg.nr >= 8 && cfg.nz >= 8, "grid must be at least 8x8");
  require(cfg.newton_tol > 0 && cfg.eig_tol > 0, "solver tolerances must be positive");
  require(cfg.grid_margin > 0, "margin must be positive");
  require(cfg.m_max >= 1, "m_max must be >= 1");
  require(cfg.eig_k >= 1 && cfg.eig_k <= 10, "k must be in [1, 10]");
  require(cfg.tol_zero_factor > 0, "tol_zero_factor must be positive");
  require(cfg.coercivity_iters >= 1, "coercivity_iters must be >= 1");
  require(!cfg.zeta_grid.empty(), "zeta list must not be empty");
  return cfg;
}

inline RunConfig load_config(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw config_error("cannot open config: " + file);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text, file);
}

}  // namespace dch
