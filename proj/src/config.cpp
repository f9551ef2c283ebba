#include "fraclab/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fraclab {

namespace {
[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("config: " + what); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "alpha",       // fractional exponent in (0,1)
      "tolerance",   // quadrature / comparison tolerance
      "seed",        // deterministic RNG seed
      "out",         // output directory
      "mesh",        // builder name (torus, cycle, path) or mesh CSV path
      "mesh2",       // second mesh for pair runs, same syntax
      "nx", "ny",    // torus builder dimensions
      "hx", "hy",    // torus builder spacings
      "n",           // cycle / path size
      "t0", "dt", "steps",  // trace sampling grid
      "rank",        // pencil model order
      "ell",         // source family / factor order
      "k",           // derivative order
      "k_max",       // highest moment
      "t",           // single evaluation time
      "group_tol",   // eigenvalue grouping tolerance
      "region",      // patch vertices: comma ids or block:ix0,ix1,iy0,iy1
      "obs",         // observation vertices, same syntax as region
      "source",      // source vertex ids, comma separated
      "vertex",      // single vertex id for point sources
  };
  return keys;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != it->second.size()) fail("key '" + key + "' has a malformed number: " + it->second);
  return v;
}

int Config::get_int(const std::string& key, int fallback) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(it->second, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != it->second.size()) fail("key '" + key + "' has a malformed integer: " + it->second);
  return v;
}

std::uint64_t Config::get_seed(std::uint64_t fallback) const {
  const auto it = kv.find("seed");
  if (it == kv.end()) return fallback;
  size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(it->second, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != it->second.size()) fail("key 'seed' has a malformed integer: " + it->second);
  return v;
}

void Config::set(const std::string& key, const std::string& value) {
  const auto& keys = known_config_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    std::string known;
    for (const auto& k : keys) known += (known.empty() ? "" : ", ") + k;
    fail("unknown key '" + key + "'; known keys: " + known);
  }
  kv[key] = value;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(path + ":" + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      fail(path + ":" + std::to_string(lineno) + ": empty key or value");
    }
    cfg.set(key, value);
  }
  return cfg;
}

}  // namespace fraclab
