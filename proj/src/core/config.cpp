#include "settler/core/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "settler/core/error.hpp"

namespace settler {

namespace pt = boost::property_tree;

namespace {

void flatten(const pt::ptree& tree, const std::string& prefix, std::map<std::string, std::string, std::less<>>& out) {
  for (const auto& [key, child] : tree) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (child.empty()) {
      out[name] = child.data();
    } else {
      flatten(child, name, out);
    }
  }
}

double parse_double(std::string_view key, const std::string& raw) {
  try {
    std::size_t used = 0;
    const double v = std::stod(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCategory::config, "config key '" + std::string(key) + "' is not a number: " + raw);
  }
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text) {
  ConfigFile file;
  file.text_ = std::string(text);
  std::istringstream in(file.text_);
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCategory::parse, "config line " + std::to_string(e.line()) + ": " + e.message());
  }
  flatten(tree, "", file.entries_);
  return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

bool ConfigFile::has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

double ConfigFile::get(std::string_view key, double fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_double(key, it->second);
}

long ConfigFile::get_int(std::string_view key, long fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const double v = parse_double(key, it->second);
  if (v != static_cast<double>(static_cast<long>(v))) {
    fail(ErrorCategory::config, "config key '" + std::string(key) + "' must be an integer");
  }
  return static_cast<long>(v);
}

bool ConfigFile::get_bool(std::string_view key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorCategory::config, "config key '" + std::string(key) + "' is not a boolean: " + v);
}

std::string ConfigFile::get_string(std::string_view key, std::string_view fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? std::string(fallback) : it->second;
}

SettlerConfig settler_config_from(const ConfigFile& file) {
  SettlerConfig c;
  c.geometry.length = file.get("geometry.length", c.geometry.length);
  c.geometry.radius = file.get("geometry.radius", c.geometry.radius);

  c.properties.rho_heavy = file.get("properties.rho_heavy", c.properties.rho_heavy);
  c.properties.rho_light = file.get("properties.rho_light", c.properties.rho_light);
  c.properties.eta_heavy = file.get("properties.eta_heavy", c.properties.eta_heavy);
  c.properties.gamma = file.get("properties.gamma", c.properties.gamma);

  c.dispersion.eps_in = file.get("dispersion.eps_in", c.dispersion.eps_in);
  c.dispersion.eps_dp = file.get("dispersion.eps_dp", c.dispersion.eps_dp);
  c.dispersion.d32_in = file.get("dispersion.d32_in", c.dispersion.d32_in);
  c.dispersion.sigma_selfsimilar = file.get("dispersion.sigma_selfsimilar", c.dispersion.sigma_selfsimilar);
  c.dispersion.n_swarm = file.get("dispersion.n_swarm", c.dispersion.n_swarm);

  c.scaling.h_scale = file.get("scaling.h_scale", c.geometry.height());
  c.scaling.q_scale = file.get("scaling.q_scale", c.scaling.q_scale);

  auto read_range = [&](std::string_view name, VariableRange& range) {
    const std::string base = "bounds." + std::string(name);
    range.interpolation.lb = file.get(base + "_interp_lb", range.interpolation.lb);
    range.interpolation.ub = file.get(base + "_interp_ub", range.interpolation.ub);
    range.extrapolation.lb = file.get(base + "_extrap_lb", range.extrapolation.lb);
    range.extrapolation.ub = file.get(base + "_extrap_ub", range.extrapolation.ub);
  };
  read_range("h_hp", c.bounds.h_hp);
  read_range("h_dp", c.bounds.h_dp);
  read_range("q_in", c.bounds.q_in);
  read_range("q_top", c.bounds.q_top);
  read_range("q_bot", c.bounds.q_bot);

  c.validate();
  return c;
}

ConfigFile resolve_config(const std::string& cli_path) {
  if (!cli_path.empty()) return ConfigFile::load(cli_path);
  if (const char* env = std::getenv("SETTLER_CONFIG"); env != nullptr && *env != '\0') {
    return ConfigFile::load(env);
  }
  return ConfigFile{};
}

}  // namespace settler
