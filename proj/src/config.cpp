#include "kamtorus/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

extern char** environ;

namespace kamtorus::config {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"system", {"family", "n", "a", "b", "eps", "domain_radius", "time_radius"}},
      {"initial", {"radii", "perturb_amp", "perturb_modes", "perturb_seed"}},
      {"diophantine", {"omega", "gamma", "tau", "kmax"}},
      {"grid", {"size", "cutoff", "cert_cutoff"}},
      {"strips", {"rho", "rho_inf", "delta"}},
      {"conditions",
       {"sigma_dk", "sigma_dkt", "sigma_b", "sigma_n", "sigma_nt", "sigma_tinv"}},
      {"control", {"mu", "mu_e", "mu_etan"}},
      {"russmann", {"mode", "m"}},
      {"solve", {"max_iter", "tol", "update", "solver_rho", "save_iterates"}},
      {"lift", {"omega_p", "s_points", "s_span"}},
      {"bench", {"eps_values", "delta_scan_steps"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::config_error, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return from_string(ss.str());
}

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(Errc::config_error, "config line " + std::to_string(lineno) + ": malformed section");
      section = lower(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::config_error, "config line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      fail(Errc::config_error, "config line " + std::to_string(lineno) + ": key outside a section");
    std::string key = lower(trim(line.substr(0, eq)));
    std::string value = trim(line.substr(eq + 1));
    cfg.data_[section][key] = value;
  }
  cfg.apply_env_overrides();
  cfg.validate_keys();
  return cfg;
}

void RunConfig::apply_env_overrides() {
  for (char** env = environ; env && *env; ++env) {
    std::string entry(*env);
    if (entry.rfind("KAMTORUS_", 0) != 0) continue;
    auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string name = entry.substr(9, eq - 9);
    std::string value = entry.substr(eq + 1);
    auto us = name.find('_');
    if (us == std::string::npos) continue;
    std::string section = lower(name.substr(0, us));
    std::string key = lower(name.substr(us + 1));
    data_[section][key] = value;
  }
}

void RunConfig::validate_keys() const {
  const auto& sch = schema();
  for (const auto& [section, kv] : data_) {
    auto it = sch.find(section);
    if (it == sch.end()) fail(Errc::config_error, "unknown config section [" + section + "]");
    for (const auto& [key, value] : kv)
      if (!it->second.count(key))
        fail(Errc::config_error, "unknown key '" + key + "' in section [" + section + "]");
  }
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  return it != data_.end() && it->second.count(key) > 0;
}

std::string RunConfig::get(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  auto it = data_.find(section);
  if (it == data_.end()) return fallback;
  auto jt = it->second.find(key);
  return jt == it->second.end() ? fallback : jt->second;
}

std::string RunConfig::require(const std::string& section, const std::string& key) const {
  if (!has(section, key))
    fail(Errc::config_error, "missing required config key [" + section + "] " + key);
  return get(section, key, "");
}

double RunConfig::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return std::stod(get(section, key, ""));
  } catch (...) {
    fail(Errc::config_error, "[" + section + "] " + key + ": expected a number");
  }
}

int RunConfig::get_int(const std::string& section, const std::string& key, int fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return std::stoi(get(section, key, ""));
  } catch (...) {
    fail(Errc::config_error, "[" + section + "] " + key + ": expected an integer");
  }
}

bool RunConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = lower(get(section, key, ""));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(Errc::config_error, "[" + section + "] " + key + ": expected a boolean");
}

std::vector<double> RunConfig::get_doubles(const std::string& section,
                                           const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get(section, key, ""));
  std::string tok;
  while (ss >> tok) {
    try {
      out.push_back(std::stod(tok));
    } catch (...) {
      fail(Errc::config_error, "[" + section + "] " + key + ": expected numbers");
    }
  }
  return out;
}

std::vector<int> RunConfig::get_ints(const std::string& section, const std::string& key) const {
  std::vector<int> out;
  for (double v : get_doubles(section, key)) out.push_back(int(v));
  return out;
}

void RunConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  data_[section][key] = value;
}

}  // namespace kamtorus::config
