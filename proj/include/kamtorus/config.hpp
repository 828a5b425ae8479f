#pragma once

// Flat sectioned key-value run configuration. Unknown sections or keys are
// rejected; KAMTORUS_<SECTION>_<KEY> environment variables override file
// entries; "auto" values are resolved (and echoed) before a run starts.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kamtorus/errors.hpp"

namespace kamtorus::config {

class RunConfig {
 public:
  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  std::string require(const std::string& section, const std::string& key) const;

  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key) const;
  std::vector<int> get_ints(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return data_;
  }

 private:
  void apply_env_overrides();
  void validate_keys() const;
  std::map<std::string, std::map<std::string, std::string>> data_;
};

}  // namespace kamtorus::config
