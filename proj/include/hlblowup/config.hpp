#pragma once

// Run configuration read from YAML. Every error carries the file name and
// the 1-based line of the offending node.

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "error.hpp"
#include "evolve.hpp"
#include "fields.hpp"

namespace hlb {

struct RunConfig {
  ModelSpec model;
  // periodic grid
  double L = 2 * std::numbers::pi;
  std::size_t N = 1024;
  // log-line grid
  double xi_min = -6;
  double xi_max = 18;
  std::size_t M = 2048;
  std::string preset;
  Params params;
  StepControl control;
  RunOptions options;
  std::string output_dir = "out";
  std::uint64_t seed = 12345;
  std::string source = "<config>";

  bool is_log() const { return model.domain == Domain::log_line; }
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what)
      : Error(Errc::config, line > 0 ? source + ":" + std::to_string(line) + ": " + what : source + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

inline int line_of(const YAML::Node& n) {
  const auto m = n.Mark();
  return m.is_null() ? 0 : m.line + 1;
}

// "2pi", "0.5*pi", "pi" or a plain number.
inline std::optional<double> parse_number(const std::string& text) {
  static const std::regex pi_expr(R"(^\s*([-+]?[0-9]*\.?[0-9]*(?:[eE][-+]?[0-9]+)?)\s*\*?\s*pi\s*$)");
  std::smatch m;
  if (std::regex_match(text, m, pi_expr)) {
    const std::string c = m[1].str();
    if (c.empty() || c == "+") return std::numbers::pi;
    if (c == "-") return -std::numbers::pi;
    try {
      std::size_t used = 0;
      const double v = std::stod(c, &used);
      if (used != c.size()) return std::nullopt;
      return v * std::numbers::pi;
    } catch (...) {
      return std::nullopt;
    }
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
    if (used != text.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& what) const {
    throw ConfigError(source_, line_of(n), what);
  }

  void expect_map(const YAML::Node& n, const std::string& name) const {
    if (!n.IsMap()) fail(n, "'" + name + "' must be a mapping");
  }

  void only_keys(const YAML::Node& n, const std::string& section, const std::set<std::string>& allowed) const {
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + section + key + "'");
    }
  }

  double number(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(n, "'" + key + "' must be a number");
    const auto v = parse_number(n.Scalar());
    if (!v || !std::isfinite(*v)) fail(n, "'" + key + "' must be a finite number, got '" + n.Scalar() + "'");
    return *v;
  }

  std::size_t count(const YAML::Node& n, const std::string& key) const {
    const double v = number(n, key);
    if (v < 0 || v != std::floor(v) || v > 1e15) fail(n, "'" + key + "' must be a nonnegative integer");
    return static_cast<std::size_t>(v);
  }

  bool flag(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(n, "'" + key + "' must be true or false");
    const auto s = lower(n.Scalar());
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    fail(n, "'" + key + "' must be true or false, got '" + n.Scalar() + "'");
  }

  std::string text(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(n, "'" + key + "' must be a string");
    return n.Scalar();
  }

  template <class F>
  auto guarded(const YAML::Node& n, F&& f) const {
    try {
      return f();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail(n, e.what());
    }
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace detail

// Set a dotted key ("grid.N", "initial.params.A") to a scalar value.
inline void set_config_value(YAML::Node& root, const std::string& dotted, const std::string& value) {
  const auto parts = detail::split(dotted, '.');
  require(!parts.empty() && !dotted.empty(), Errc::config, "empty override key");
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    require(!parts[i].empty(), Errc::config, "malformed override key '" + dotted + "'");
    YAML::Node next = chain.back()[parts[i]];
    chain.push_back(next);
  }
  chain.back()[parts.back()] = value;
}

inline RunConfig parse_config(const YAML::Node& root, const std::string& source) {
  using detail::Reader;
  const Reader rd(source);
  if (!root.IsDefined() || root.IsNull()) throw ConfigError(source, 0, "empty configuration");
  rd.expect_map(root, "top level");
  rd.only_keys(root, "", {"model", "grid", "initial", "control", "run", "output", "seed"});
  RunConfig c;
  c.source = source;

  const auto model = root["model"];
  if (!model) throw ConfigError(source, detail::line_of(root), "missing section 'model'");
  rd.expect_map(model, "model");
  rd.only_keys(model, "model.", {"name", "domain", "biot_savart", "osw_a", "a_layer", "cky_scale"});
  if (!model["name"]) rd.fail(model, "missing key 'model.name'");
  c.model.model = rd.guarded(model["name"], [&] { return parse_model(rd.text(model["name"], "model.name")); });
  if (model["domain"])
    c.model.domain = rd.guarded(model["domain"], [&] { return parse_domain(rd.text(model["domain"], "model.domain")); });
  if (model["biot_savart"])
    c.model.method = rd.guarded(model["biot_savart"],
                                [&] { return parse_method(rd.text(model["biot_savart"], "model.biot_savart")); });
  if (model["osw_a"]) c.model.osw_a = rd.number(model["osw_a"], "model.osw_a");
  if (model["a_layer"]) c.model.a_layer = rd.number(model["a_layer"], "model.a_layer");
  if (model["cky_scale"]) c.model.cky_scale = rd.number(model["cky_scale"], "model.cky_scale");
  rd.guarded(model, [&] {
    c.model.validate();
    return 0;
  });

  const auto grid = root["grid"];
  if (!grid) throw ConfigError(source, detail::line_of(root), "missing section 'grid'");
  rd.expect_map(grid, "grid");
  rd.only_keys(grid, "grid.", {"L", "N", "xi_min", "xi_max", "M"});
  if (c.is_log()) {
    for (const char* k : {"L", "N"})
      if (grid[k]) rd.fail(grid[k], std::string("'grid.") + k + "' applies only to the periodic domain");
    if (grid["xi_min"]) c.xi_min = rd.number(grid["xi_min"], "grid.xi_min");
    if (grid["xi_max"]) c.xi_max = rd.number(grid["xi_max"], "grid.xi_max");
    if (grid["M"]) c.M = rd.count(grid["M"], "grid.M");
    rd.guarded(grid, [&] { return make_log_grid(c.xi_min, c.xi_max, c.M); });
  } else {
    for (const char* k : {"xi_min", "xi_max", "M"})
      if (grid[k]) rd.fail(grid[k], std::string("'grid.") + k + "' applies only to the log-line domain");
    if (grid["L"]) c.L = rd.number(grid["L"], "grid.L");
    if (grid["N"]) c.N = rd.count(grid["N"], "grid.N");
    rd.guarded(grid, [&] { return make_periodic_grid(c.L, c.N); });
  }

  const auto init = root["initial"];
  if (!init) throw ConfigError(source, detail::line_of(root), "missing section 'initial' (key 'initial.preset')");
  rd.expect_map(init, "initial");
  rd.only_keys(init, "initial.", {"preset", "params"});
  if (!init["preset"]) rd.fail(init, "missing key 'initial.preset'");
  c.preset = rd.text(init["preset"], "initial.preset");
  if (const auto p = init["params"]) {
    rd.expect_map(p, "initial.params");
    for (const auto& kv : p) {
      const auto key = kv.first.as<std::string>();
      c.params[key] = rd.number(kv.second, "initial.params." + key);
    }
  }

  if (const auto ctl = root["control"]) {
    rd.expect_map(ctl, "control");
    rd.only_keys(ctl, "control.", {"cfl", "dt_min", "dt_max", "tail_threshold", "dealias", "symmetric",
                                   "output_interval", "edge_threshold"});
    auto& s = c.control;
    if (ctl["cfl"]) s.cfl_number = rd.number(ctl["cfl"], "control.cfl");
    if (ctl["dt_min"]) s.dt_min = rd.number(ctl["dt_min"], "control.dt_min");
    if (ctl["dt_max"]) s.dt_max = rd.number(ctl["dt_max"], "control.dt_max");
    if (ctl["tail_threshold"]) s.tail_threshold = rd.number(ctl["tail_threshold"], "control.tail_threshold");
    if (ctl["dealias"]) s.dealias = rd.flag(ctl["dealias"], "control.dealias");
    if (ctl["symmetric"]) s.symmetric = rd.flag(ctl["symmetric"], "control.symmetric");
    if (ctl["output_interval"]) s.output_interval = rd.number(ctl["output_interval"], "control.output_interval");
    if (ctl["edge_threshold"]) s.edge_threshold = rd.number(ctl["edge_threshold"], "control.edge_threshold");
    rd.guarded(ctl, [&] {
      s.validate();
      return 0;
    });
  }

  const auto run = root["run"];
  if (!run) throw ConfigError(source, detail::line_of(root), "missing section 'run' (key 'run.t_end')");
  rd.expect_map(run, "run");
  rd.only_keys(run, "run.", {"t_end", "record_every", "snapshot_every", "checkpoint_every", "lp"});
  if (!run["t_end"]) rd.fail(run, "missing key 'run.t_end'");
  c.options.t_end = rd.number(run["t_end"], "run.t_end");
  if (c.options.t_end < 0) rd.fail(run["t_end"], "'run.t_end' must be nonnegative");
  if (run["record_every"]) c.options.record_every = rd.count(run["record_every"], "run.record_every");
  if (c.options.record_every == 0) rd.fail(run["record_every"], "'run.record_every' must be at least 1");
  if (run["snapshot_every"]) c.options.snapshot_every = rd.count(run["snapshot_every"], "run.snapshot_every");
  if (run["checkpoint_every"]) c.options.checkpoint_every = rd.count(run["checkpoint_every"], "run.checkpoint_every");
  if (run["lp"]) c.options.lp_exponent = rd.number(run["lp"], "run.lp");
  if (c.options.lp_exponent < 1) rd.fail(run["lp"], "'run.lp' must be at least 1");

  if (const auto out = root["output"]) {
    rd.expect_map(out, "output");
    rd.only_keys(out, "output.", {"dir"});
    if (out["dir"]) c.output_dir = rd.text(out["dir"], "output.dir");
  }
  if (root["seed"]) c.seed = rd.count(root["seed"], "seed");

  // Presets are checked against the grid now so a bad name fails before any run.
  rd.guarded(init["preset"], [&] {
    if (c.is_log())
      preset_log_initial_data(c.preset, make_log_grid(c.xi_min, c.xi_max, c.M), c.params);
    else
      preset_initial_data(c.preset, make_periodic_grid(c.L, c.N), c.params);
    return 0;
  });
  return c;
}

inline YAML::Node load_config_tree(const std::string& path) {
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError(path, 0, "cannot read configuration file");
  } catch (const YAML::ParserException& e) {
    throw ConfigError(path, e.mark.line + 1, e.msg);
  }
}

inline RunConfig load_config(const std::string& path, const std::map<std::string, std::string>& overrides = {}) {
  auto root = load_config_tree(path);
  for (const auto& [k, v] : overrides) set_config_value(root, k, v);
  try {
    return parse_config(root, path);
  } catch (const YAML::Exception& e) {
    throw ConfigError(path, e.mark.is_null() ? 0 : e.mark.line + 1, e.msg);
  }
}

inline RunConfig parse_config_text(const std::string& text, const std::string& source = "<string>") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, e.msg);
  }
  return parse_config(root, source);
}

}  // namespace hlb
