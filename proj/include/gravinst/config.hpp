#pragma once

// Experiment configuration: `key = value` lines, '#' comments, lists
// separated by commas. Unknown keys are errors.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gravinst/energy.hpp"
#include "gravinst/errors.hpp"
#include "gravinst/radial_grid.hpp"

namespace gravinst {

struct ExperimentConfig {
  double r_max = 100.0;
  std::size_t n = 2001;
  std::string stretch = "standard";  // standard | uniform | sinh:<core length>
  std::vector<double> l_grid = default_l_grid();
  std::vector<double> weighted_ls = {-1.0, -2.0};
  std::vector<double> deltas = {1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  double delta = 1e-3;  // single nonlinear run
  double theta = 1e-2;
  double t_max = 40.0;
  double linear_t = 40.0;
  double cfl = 0.9;
  std::string dt_policy = "auto";  // auto | <wave time step>
  double sample_dt = 0.05;
  std::string out_dir = "out";
  std::uint64_t seed = 20240611;
  double filter = 0.0;
  double beta = 1e-3;

  Stretch stretch_descriptor() const {
    if (stretch == "standard") return Stretch::standard();
    if (stretch == "uniform") return Stretch::uniform();
    if (stretch.rfind("sinh:", 0) == 0) return Stretch::sinh(std::stod(stretch.substr(5)));
    throw InvalidArgument("unknown stretch '" + stretch + "'");
  }

  GridPtr make_grid_ptr() const { return make_grid(r_max, n, stretch_descriptor()); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double x = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(x)) {
    throw InvalidArgument("key '" + key + "': cannot parse '" + t + "' as a number");
  }
  return x;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  std::uint64_t x = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw InvalidArgument("key '" + key + "': cannot parse '" + t + "' as an unsigned integer");
  }
  return x;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw InvalidArgument("key '" + key + "': empty list");
  return out;
}

}  // namespace detail

/// Range checks shared by file parsing and command-line overrides.
inline void validate(const ExperimentConfig& c) {
  if (!(c.r_max > 0.0)) throw InvalidArgument("r_max must be positive");
  if (c.n < kMinGridNodes) throw InvalidArgument("n must be at least 8");
  (void)c.stretch_descriptor();
  if (!(c.theta > 0.0)) throw InvalidArgument("theta must be positive");
  if (!(c.delta > 0.0 && c.delta <= c.theta)) throw InvalidArgument("delta must lie in (0, theta]");
  for (std::size_t k = 0; k < c.deltas.size(); ++k) {
    if (!(c.deltas[k] > 0.0)) throw InvalidArgument("deltas must be positive");
    if (k > 0 && !(c.deltas[k] < c.deltas[k - 1])) throw InvalidArgument("deltas must be strictly decreasing");
  }
  if (c.deltas.empty() || c.deltas.front() > c.theta) throw InvalidArgument("largest delta must not exceed theta");
  for (double l : c.l_grid) {
    if (l > 0.0) throw InvalidArgument("l_grid entries must be <= 0");
  }
  for (double l : c.weighted_ls) {
    if (l > 0.0) throw InvalidArgument("weighted_ls entries must be <= 0");
  }
  if (!(c.t_max > 0.0) || !(c.linear_t > 0.0)) throw InvalidArgument("run lengths must be positive");
  if (!(c.cfl > 0.0 && c.cfl <= 0.9)) throw InvalidArgument("cfl must lie in (0, 0.9]");
  if (!(c.sample_dt > 0.0)) throw InvalidArgument("sample_dt must be positive");
  if (c.dt_policy != "auto") {
    if (!(detail::parse_double("dt_policy", c.dt_policy) > 0.0)) throw InvalidArgument("dt_policy must be auto or positive");
  }
  if (!(c.filter >= 0.0 && c.filter <= 1.0)) throw InvalidArgument("filter must lie in [0, 1]");
  if (!(c.beta > 0.0)) throw InvalidArgument("beta must be positive");
}

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    using detail::parse_double;
    if (key == "r_max") c.r_max = parse_double(key, val);
    else if (key == "n") c.n = static_cast<std::size_t>(detail::parse_u64(key, val));
    else if (key == "stretch") c.stretch = val;
    else if (key == "l_grid") c.l_grid = detail::parse_list(key, val);
    else if (key == "weighted_ls") c.weighted_ls = detail::parse_list(key, val);
    else if (key == "deltas") c.deltas = detail::parse_list(key, val);
    else if (key == "delta") c.delta = parse_double(key, val);
    else if (key == "theta") c.theta = parse_double(key, val);
    else if (key == "t_max") c.t_max = parse_double(key, val);
    else if (key == "linear_t") c.linear_t = parse_double(key, val);
    else if (key == "cfl") c.cfl = parse_double(key, val);
    else if (key == "dt_policy") c.dt_policy = val;
    else if (key == "sample_dt") c.sample_dt = parse_double(key, val);
    else if (key == "out_dir") c.out_dir = val;
    else if (key == "seed") c.seed = detail::parse_u64(key, val);
    else if (key == "filter") c.filter = parse_double(key, val);
    else if (key == "beta") c.beta = parse_double(key, val);
    else throw InvalidArgument("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  validate(c);
  return c;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot read config file " + path);
  return parse_config(f);
}

}  // namespace gravinst
