// Run configuration: a TOML subset reader (sections, scalars, flat arrays)
// and the resolved RunConfig consumed by the CLI.
#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "plateforge/common.hpp"
#include "plateforge/dataset.hpp"
#include "plateforge/plate.hpp"
#include "plateforge/surrogate.hpp"

namespace plateforge {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Strips a trailing comment, respecting double-quoted strings.
inline std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

inline nlohmann::json parse_toml_scalar(const std::string& raw, int line) {
  const std::string v = trim(raw);
  if (v.empty()) throw ConfigError("config line " + std::to_string(line) + ": missing value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw ConfigError("config line " + std::to_string(line) + ": unterminated string");
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  bool integral = true;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const char c = v[i];
    if (i == 0 && (c == '+' || c == '-')) continue;
    if (!std::isdigit(static_cast<unsigned char>(c))) integral = false;
  }
  char* end = nullptr;
  if (integral) {
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() + v.size()) return x;
  }
  const double d = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size())
    throw ConfigError("config line " + std::to_string(line) + ": cannot parse value '" + v + "'");
  return d;
}

}  // namespace detail

// Parses the TOML subset used by plateforge configs into a JSON object of
// sections. Supported: [section] headers, key = scalar, key = [scalars],
// "#" comments.
inline nlohmann::json parse_toml(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* section = &root;
  std::istringstream in(text);
  std::string rawline;
  int lineno = 0;
  while (std::getline(in, rawline)) {
    ++lineno;
    const std::string line = detail::trim(detail::strip_comment(rawline));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
      const std::string name = detail::trim(line.substr(1, line.size() - 2));
      if (name.empty())
        throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
      if (!root.contains(name)) root[name] = nlohmann::json::object();
      section = &root[name];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated array");
      nlohmann::json arr = nlohmann::json::array();
      std::string body = value.substr(1, value.size() - 2);
      std::size_t pos = 0;
      while (pos <= body.size()) {
        std::size_t comma = body.find(',', pos);
        const std::string item =
            detail::trim(comma == std::string::npos ? body.substr(pos) : body.substr(pos, comma - pos));
        if (!item.empty()) arr.push_back(detail::parse_toml_scalar(item, lineno));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      (*section)[key] = arr;
    } else {
      (*section)[key] = detail::parse_toml_scalar(value, lineno);
    }
  }
  return root;
}

struct EvalSettings {
  int stride = 100;
  int stft_window = 512;
  int stft_hop = 128;
  int rollout_steps = 4000;
  std::string channel = "both";        // both | displacement | velocity
  bool physical_units = false;         // metrics on normalized data unless set
};

struct RunConfig {
  PlateParams plate = PlateParams::berger_defaults();
  int modes_x = 15, modes_y = 15;
  StrikeConfig strike;
  int oversample = 8;
  int dataset_count = 100;
  double dataset_duration = 1.0;
  double train_fraction = 0.8, val_fraction = 0.1;
  std::string dtype = "f32";
  FitOptions fit{450, 1, 101, 1e-12};
  std::vector<int> block_lengths{49, 199, 399};
  EvalSettings eval;
  std::uint64_t seed = 1234;
  int jobs = 0;

  nlohmann::json resolved() const {
    return {
        {"plate",
         {{"rho2", plate.rho2},
          {"D", plate.D},
          {"T0", plate.T0},
          {"d1", plate.d1},
          {"d3", plate.d3},
          {"cnl_over_s0", plate.cnl_over_s0},
          {"Lx", plate.Lx},
          {"Ly", plate.Ly},
          {"Nx", plate.Nx},
          {"Ny", plate.Ny},
          {"fs", plate.fs}}},
        {"modes", {{"mx", modes_x}, {"my", modes_y}}},
        {"strike",
         {{"vmax_min", strike.vmax_lo},
          {"vmax_max", strike.vmax_hi},
          {"sigma_min", strike.sigma_lo},
          {"sigma_max", strike.sigma_hi},
          {"center_margin", strike.center_margin}}},
        {"solver", {{"oversample", oversample}}},
        {"dataset",
         {{"count", dataset_count},
          {"duration", dataset_duration},
          {"train_fraction", train_fraction},
          {"val_fraction", val_fraction},
          {"dtype", dtype}}},
        {"surrogate",
         {{"rank", fit.rank},
          {"sub_step", fit.sub_step},
          {"pair_stride", fit.pair_stride},
          {"block_lengths", block_lengths}}},
        {"evaluate",
         {{"stride", eval.stride},
          {"stft_window", eval.stft_window},
          {"stft_hop", eval.stft_hop},
          {"rollout_steps", eval.rollout_steps},
          {"channel", eval.channel},
          {"physical_units", eval.physical_units}}},
        {"run", {{"seed", seed}, {"jobs", jobs}}}};
  }

  std::string config_hash() const {
    const std::string dump = resolved().dump();
    return hex64(fnv1a64(dump.data(), dump.size()));
  }

  GeneratorConfig generator_config() const {
    GeneratorConfig g;
    g.params = plate;
    g.mx = modes_x;
    g.my = modes_y;
    g.strike = strike;
    g.count = dataset_count;
    g.duration = dataset_duration;
    g.train_fraction = train_fraction;
    g.val_fraction = val_fraction;
    g.oversample = oversample;
    g.seed = seed;
    g.jobs = jobs;
    g.dtype = dtype;
    g.config_echo = resolved();
    g.config_hash = config_hash();
    return g;
  }
};

namespace detail {

template <typename T>
void read_key(const nlohmann::json& sec, const char* key, T& out) {
  if (sec.contains(key)) out = sec.at(key).get<T>();
}

inline void check_keys(const nlohmann::json& sec, const std::string& name,
                       std::initializer_list<const char*> allowed) {
  for (auto it = sec.begin(); it != sec.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw ConfigError("unknown config key '" + name + "." + it.key() + "'");
  }
}

}  // namespace detail

// Builds a RunConfig from parsed TOML, rejecting unknown sections or keys.
// Grid spacings derive from the side lengths and point counts.
inline RunConfig run_config_from_json(const nlohmann::json& root) {
  RunConfig c;
  for (auto it = root.begin(); it != root.end(); ++it) {
    const std::string& s = it.key();
    if (s != "plate" && s != "modes" && s != "strike" && s != "solver" && s != "dataset" &&
        s != "surrogate" && s != "evaluate" && s != "run")
      throw ConfigError("unknown config section '[" + s + "]'");
    if (!it.value().is_object()) throw ConfigError("config section '[" + s + "]' is not a table");
  }
  using detail::check_keys;
  using detail::read_key;
  if (root.contains("plate")) {
    const auto& p = root["plate"];
    check_keys(p, "plate", {"rho2", "D", "T0", "d1", "d3", "cnl_over_s0", "Lx", "Ly", "Nx", "Ny", "fs"});
    read_key(p, "rho2", c.plate.rho2);
    read_key(p, "D", c.plate.D);
    read_key(p, "T0", c.plate.T0);
    read_key(p, "d1", c.plate.d1);
    read_key(p, "d3", c.plate.d3);
    read_key(p, "cnl_over_s0", c.plate.cnl_over_s0);
    read_key(p, "Lx", c.plate.Lx);
    read_key(p, "Ly", c.plate.Ly);
    read_key(p, "Nx", c.plate.Nx);
    read_key(p, "Ny", c.plate.Ny);
    read_key(p, "fs", c.plate.fs);
  }
  c.plate.dx = c.plate.Lx / (c.plate.Nx - 1);
  c.plate.dy = c.plate.Ly / (c.plate.Ny - 1);
  if (root.contains("modes")) {
    check_keys(root["modes"], "modes", {"mx", "my"});
    read_key(root["modes"], "mx", c.modes_x);
    read_key(root["modes"], "my", c.modes_y);
  }
  if (root.contains("strike")) {
    const auto& s = root["strike"];
    check_keys(s, "strike", {"vmax_min", "vmax_max", "sigma_min", "sigma_max", "center_margin"});
    read_key(s, "vmax_min", c.strike.vmax_lo);
    read_key(s, "vmax_max", c.strike.vmax_hi);
    read_key(s, "sigma_min", c.strike.sigma_lo);
    read_key(s, "sigma_max", c.strike.sigma_hi);
    read_key(s, "center_margin", c.strike.center_margin);
  }
  if (root.contains("solver")) {
    check_keys(root["solver"], "solver", {"oversample"});
    read_key(root["solver"], "oversample", c.oversample);
  }
  if (root.contains("dataset")) {
    const auto& d = root["dataset"];
    check_keys(d, "dataset", {"count", "duration", "train_fraction", "val_fraction", "dtype"});
    read_key(d, "count", c.dataset_count);
    read_key(d, "duration", c.dataset_duration);
    read_key(d, "train_fraction", c.train_fraction);
    read_key(d, "val_fraction", c.val_fraction);
    read_key(d, "dtype", c.dtype);
  }
  if (root.contains("surrogate")) {
    const auto& s = root["surrogate"];
    check_keys(s, "surrogate", {"rank", "sub_step", "pair_stride", "block_lengths"});
    read_key(s, "rank", c.fit.rank);
    read_key(s, "sub_step", c.fit.sub_step);
    read_key(s, "pair_stride", c.fit.pair_stride);
    if (s.contains("block_lengths")) {
      c.block_lengths.clear();
      for (const auto& v : s["block_lengths"]) c.block_lengths.push_back(v.get<int>());
      if (c.block_lengths.empty()) throw ConfigError("surrogate.block_lengths must not be empty");
    }
  }
  if (root.contains("evaluate")) {
    const auto& e = root["evaluate"];
    check_keys(e, "evaluate",
               {"stride", "stft_window", "stft_hop", "rollout_steps", "channel", "physical_units"});
    read_key(e, "stride", c.eval.stride);
    read_key(e, "stft_window", c.eval.stft_window);
    read_key(e, "stft_hop", c.eval.stft_hop);
    read_key(e, "rollout_steps", c.eval.rollout_steps);
    read_key(e, "channel", c.eval.channel);
    read_key(e, "physical_units", c.eval.physical_units);
    if (c.eval.channel != "both" && c.eval.channel != "displacement" &&
        c.eval.channel != "velocity")
      throw ConfigError("evaluate.channel must be both, displacement, or velocity");
  }
  if (root.contains("run")) {
    check_keys(root["run"], "run", {"seed", "jobs"});
    read_key(root["run"], "seed", c.seed);
    read_key(root["run"], "jobs", c.jobs);
  }
  c.plate.validate();
  c.strike.validate(c.plate);
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return run_config_from_json(parse_toml(text.str()));
}

inline ChannelSelect channel_from_string(const std::string& s) {
  if (s == "both") return ChannelSelect::Both;
  if (s == "displacement") return ChannelSelect::Displacement;
  if (s == "velocity") return ChannelSelect::Velocity;
  throw ConfigError("unknown channel '" + s + "'");
}

}  // namespace plateforge
