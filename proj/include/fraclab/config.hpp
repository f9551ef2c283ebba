#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fraclab {

// Run configuration, read from key=value files ('#' starts a comment). Only
// keys listed in known_config_keys() are accepted; anything else is an error
// naming the offender. Command-line values override file values.
struct Config {
  std::map<std::string, std::string> kv;

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_seed(std::uint64_t fallback) const;
  void set(const std::string& key, const std::string& value);  // validates the key
};

const std::vector<std::string>& known_config_keys();

Config load_config(const std::string& path);

}  // namespace fraclab
