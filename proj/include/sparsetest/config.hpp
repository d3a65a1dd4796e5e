#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>

#include "sparsetest/errors.hpp"
#include "sparsetest/models.hpp"

namespace sparsetest {

// Flat key = value text with [model] / [noise] sections for the distribution
// specs and a [params] section for everything command-specific.
struct ExperimentConfig {
  std::string command;
  std::map<std::string, std::string> params;
  std::map<std::string, std::string> model;
  std::map<std::string, std::string> noise;

  bool operator==(const ExperimentConfig&) const = default;
};

inline std::string serialize_config(const ExperimentConfig& config) {
  std::string out = "command = " + config.command + "\n";
  const auto section = [&out](const char* name, const std::map<std::string, std::string>& kv) {
    if (kv.empty()) return;
    out += std::string("[") + name + "]\n";
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  };
  section("model", config.model);
  section("noise", config.noise);
  section("params", config.params);
  return out;
}

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::map<std::string, std::string>* section = &config.params;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      const std::string name = line.substr(1, line.size() - 2);
      if (name == "model") section = &config.model;
      else if (name == "noise") section = &config.noise;
      else if (name == "params") section = &config.params;
      else throw ValidationError("unknown config section: " + name);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("expected 'key = value', got: " + line);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key == "command") {
      config.command = val;
    } else {
      if (section->count(key)) throw ValidationError("duplicate config key: " + key);
      (*section)[key] = val;
    }
  }
  if (config.command.empty()) throw ValidationError("config is missing 'command'");
  return config;
}

// FNV-1a over the canonical serialization; std::map ordering makes the hash
// independent of the key order in the source text.
inline std::string config_hash(const ExperimentConfig& config) {
  const std::string canon = serialize_config(config);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace sparsetest
