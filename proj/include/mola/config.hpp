// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_CONFIG_HPP
#define MOLA_CONFIG_HPP

#include "mola/error.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <set>
#include <string>
#include <type_traits>

namespace mola {

/// Typed field access over a JSON object. Errors carry the dotted field path.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::string prefix) : json_(j), prefix_(std::move(prefix)) {
    if (!j.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = json_.find(key);
    if (it == json_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError(path(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError(path(key), "expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError(path(key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError(path(key), "expected a string");
      }
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path(key), e.what());
    }
  }

  bool has(const std::string& key) const { return json_.contains(key); }
  const nlohmann::json& at(const std::string& key) {
    seen_.insert(key);
    return json_.at(key);
  }

  /// Throws on keys that were never requested.
  void reject_unknown() const {
    for (const auto& [key, value] : json_.items())
      if (!seen_.count(key)) throw ConfigError(path(key), "unknown field");
  }

 private:
  const nlohmann::json& json_;
  std::string prefix_;
  std::set<std::string> seen_;
};

inline void check_field(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

/// YAML document as JSON. Plain scalars become bool, integer, float or
/// null when they parse as such; quoted scalars stay strings.
nlohmann::json yaml_to_json(const std::string& text);

/// Reads a YAML or JSON config file (JSON is valid YAML).
nlohmann::json load_config_file(const std::filesystem::path& path);

}  // namespace mola

#endif  // MOLA_CONFIG_HPP
