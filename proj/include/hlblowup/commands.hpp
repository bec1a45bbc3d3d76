#pragma once

// Command implementations behind the CLI. Each returns a process exit code:
// 0 success, 1 verification failure, 2 usage or config error, 3 numeric failure.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bounds.hpp"
#include "config.hpp"
#include "io.hpp"
#include "verify.hpp"

namespace hlb {

enum ExitCode : int { exit_ok = 0, exit_verify_failed = 1, exit_usage = 2, exit_numeric = 3 };

struct SimulateRequest {
  std::string config_path;
  std::string out_dir;  // empty: use output.dir from the config
  std::size_t resolution = 0;
  std::string restart;
  std::map<std::string, std::string> overrides;
};

struct SimulateResult {
  int exit_code = exit_ok;
  Termination reason = Termination::time_reached;
  double t_final = 0;
  std::size_t steps = 0;
  std::size_t records = 0;
  fs::path out_dir;
  std::string message;
};

namespace detail {

// Domain named in the raw tree, so --resolution can target grid.N or grid.M.
inline bool tree_is_log(const YAML::Node& root) {
  try {
    const auto d = root["model"]["domain"];
    return d && d.IsScalar() && parse_domain(d.Scalar()) == Domain::log_line;
  } catch (...) {
    return false;
  }
}

inline std::string snapshot_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu.csv", index);
  return buf;
}

inline void write_run_outputs(const RunConfig& cfg, const Trajectory& tr, const fs::path& out) {
  fs::create_directories(out / "snapshots");
  {
    std::ostringstream ts;
    write_timeseries(ts, tr.records, cfg.is_log());
    write_text_file(out / "timeseries.csv", ts.str());
  }
  std::vector<std::string> snaps;
  for (std::size_t i = 0; i < tr.snapshot_record.size(); ++i) {
    std::ostringstream ss;
    if (cfg.is_log())
      write_log_snapshot(ss, tr.log_snapshots[i], cfg.model);
    else
      write_snapshot(ss, tr.snapshots[i], cfg.model);
    const auto name = snapshot_name(tr.snapshot_record[i]);
    write_text_file(out / "snapshots" / name, ss.str());
    snaps.push_back("snapshots/" + name);
  }
  nlohmann::ordered_json m;
  m["program"] = "hlblowup";
  m["format_version"] = 1;
  m["config_source"] = cfg.source;
  m["config"] = config_json(cfg);
  m["termination"] = to_string(tr.reason);
  m["message"] = tr.message;
  m["steps"] = tr.steps;
  m["records"] = tr.records.size();
  m["t_final"] = tr.records.empty() ? 0.0 : tr.records.back().t;
  m["timeseries"] = "timeseries.csv";
  m["timeseries_columns"] = nlohmann::ordered_json::array();
  for (const auto& c : cfg.is_log() ? log_columns() : periodic_columns()) m["timeseries_columns"].push_back(c.name);
  m["snapshots"] = snaps;
  if (cfg.options.checkpoint_every > 0) m["checkpoint"] = "checkpoint.txt";
  write_text_file(out / "manifest.json", m.dump(2) + "\n");
}

}  // namespace detail

inline SimulateResult simulate(const SimulateRequest& req, std::ostream& err = std::cerr) {
  SimulateResult res;
  RunConfig cfg;
  try {
    auto overrides = req.overrides;
    if (req.resolution > 0) {
      const auto tree = load_config_tree(req.config_path);
      overrides[detail::tree_is_log(tree) ? "grid.M" : "grid.N"] = std::to_string(req.resolution);
    }
    cfg = load_config(req.config_path, overrides);
  } catch (const Error& e) {
    err << e.what() << "\n";
    res.exit_code = exit_usage;
    res.message = e.what();
    return res;
  }
  res.out_dir = req.out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(req.out_dir);

  try {
    fs::create_directories(res.out_dir);
    RunCheckpoint resume;
    const bool resuming = !req.restart.empty();
    if (resuming) {
      resume = load_checkpoint(req.restart);
      require(resume.is_log == cfg.is_log(), Errc::config, "checkpoint domain does not match the config");
    }
    const auto ckpt_path = res.out_dir / "checkpoint.txt";
    auto on_checkpoint = [&](const RunCheckpoint& cp) {
      std::ostringstream s;
      write_checkpoint(s, cp);
      write_text_file(ckpt_path, s.str());
    };
    Trajectory tr;
    if (cfg.is_log()) {
      const auto g = make_log_grid(cfg.xi_min, cfg.xi_max, cfg.M);
      tr = run_log(cfg.model, resuming ? resume.log_state : preset_log_initial_data(cfg.preset, g, cfg.params),
                   cfg.control, cfg.options, resuming ? &resume : nullptr, on_checkpoint);
    } else {
      const auto g = make_periodic_grid(cfg.L, cfg.N);
      if (resuming)
        require(resume.state.grid.N == g.N && resume.state.grid.L == g.L, Errc::config,
                "checkpoint grid does not match the config");
      tr = run(cfg.model, resuming ? resume.state : preset_initial_data(cfg.preset, g, cfg.params), cfg.control,
               cfg.options, resuming ? &resume : nullptr, on_checkpoint);
    }
    detail::write_run_outputs(cfg, tr, res.out_dir);
    res.reason = tr.reason;
    res.t_final = tr.records.empty() ? 0.0 : tr.records.back().t;
    res.steps = tr.steps;
    res.records = tr.records.size();
    res.message = tr.message;
    if (tr.reason == Termination::nan_detected || tr.reason == Termination::cfl_floor) {
      err << "numeric failure (" << to_string(tr.reason) << "): " << tr.message << "\n";
      res.exit_code = exit_numeric;
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    res.message = e.what();
    res.exit_code = e.code() == Errc::config ? exit_usage : exit_numeric;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    res.message = e.what();
    res.exit_code = exit_usage;
  }
  return res;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyRequest {
  std::string suite = "all";
  std::size_t trials = 1000;
  std::uint64_t seed = 12345;
  std::optional<double> tolerance;  // overrides every report's tolerance
  std::string report_path;          // optional CSV report
};

inline void print_reports(std::ostream& out, const std::vector<PropertyReport>& reps) {
  for (const auto& r : reps) {
    char line[512];
    std::snprintf(line, sizeof line, "%-4s %-36s samples=%-7zu worst=%-+.6e at=(%.6g, %.6g) tol=%.1e", r.pass ? "PASS" : "FAIL",
                  r.id.c_str(), r.samples, r.worst_violation, r.worst_location[0], r.worst_location[1], r.tolerance);
    out << line << "\n";
  }
}

inline void write_report_csv(std::ostream& out, const std::vector<PropertyReport>& reps) {
  out << "id,pass,samples,worst_violation,location_0,location_1,tolerance,description\n";
  for (const auto& r : reps) {
    std::string d = r.description;
    std::string q;
    for (char ch : d) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    out << r.id << "," << (r.pass ? 1 : 0) << "," << r.samples << "," << fmt_double(r.worst_violation) << ","
        << fmt_double(r.worst_location[0]) << "," << fmt_double(r.worst_location[1]) << "," << fmt_double(r.tolerance)
        << ",\"" << q << "\"\n";
  }
}

inline int verify(const VerifyRequest& req, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  static const std::set<std::string> suites{"kernels", "quadforms", "inequalities", "all"};
  if (!suites.count(req.suite)) {
    err << "unknown suite '" << req.suite << "' (expected kernels, quadforms, inequalities or all)\n";
    return exit_usage;
  }
  std::vector<PropertyReport> reps;
  auto retune = [&](PropertyReport& r) {
    if (req.tolerance) {
      r.tolerance = *req.tolerance;
      r.finish();
    }
  };
  try {
    const bool all = req.suite == "all";
    if (all || req.suite == "kernels") {
      SamplingPlan p;
      p.seed = req.seed;
      for (auto& r : verify_kernel_properties(p)) reps.push_back(r);
    }
    if (all || req.suite == "quadforms") {
      QuadformPlan p;
      p.trials = req.trials;
      p.seed = req.seed;
      for (auto& r : verify_quadforms(p)) reps.push_back(r);
    }
    if (all || req.suite == "inequalities") {
      InequalityPlan p;
      p.seed = req.seed;
      for (auto& r : verify_inequalities(p)) reps.push_back(r);
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_numeric;
  }
  for (auto& r : reps) retune(r);
  print_reports(out, reps);
  if (!req.report_path.empty()) {
    std::ostringstream s;
    write_report_csv(s, reps);
    write_text_file(req.report_path, s.str());
  }
  bool ok = true;
  for (const auto& r : reps) ok = ok && r.pass;
  out << (ok ? "all properties hold" : "some properties FAILED") << "\n";
  return ok ? exit_ok : exit_verify_failed;
}

// ---------------------------------------------------------------------------
// bounds

inline std::map<std::string, double> parse_kv_list(const std::string& text) {
  std::map<std::string, double> out;
  if (text.empty()) return out;
  for (const auto& item : detail::split(text, ',')) {
    const auto eq = item.find('=');
    require(eq != std::string::npos && eq > 0, Errc::config, "expected key=value, got '" + item + "'");
    const auto key = item.substr(0, eq);
    const auto v = detail::parse_number(item.substr(eq + 1));
    require(v.has_value(), Errc::config, "value for '" + key + "' is not a number");
    out[key] = *v;
  }
  return out;
}

inline int bounds(const std::string& kind, const std::string& params, const std::string& out_path,
                  std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::map<std::string, double> p;
  try {
    p = parse_kv_list(params);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_usage;
  }
  std::set<std::string> allowed{"horizon", "cap", "rtol", "atol"};
  if (kind == "gengron")
    allowed.insert({"I0", "J0", "c0", "L"});
  else if (kind == "entropy")
    allowed.insert({"I0", "Idot0"});
  else if (kind == "fg")
    allowed.insert({"F0", "G0"});
  else {
    err << "unknown bound kind '" << kind << "' (expected gengron, entropy or fg)\n";
    return exit_usage;
  }
  for (const auto& [k, v] : p)
    if (!allowed.count(k)) {
      err << "unknown parameter '" << k << "' for --kind " << kind << "\n";
      return exit_usage;
    }
  auto get = [&](const char* k, double d) { return p.count(k) ? p.at(k) : d; };
  EnvelopeOptions eo;
  eo.horizon = get("horizon", eo.horizon);
  eo.cap = get("cap", eo.cap);
  eo.rtol = get("rtol", eo.rtol);
  eo.atol = get("atol", eo.atol);
  Envelope e;
  std::ostringstream summary;
  try {
    if (kind == "gengron") {
      const double c0 = p.count("c0") ? p.at("c0") : 2 / std::pow(get("L", 2 * std::numbers::pi), 2);
      e = gengron_envelope(get("I0", 1), get("J0", 0), c0, eo);
      summary << "c0=" << fmt_double(c0) << " t0_opt=" << fmt_double(e.t0_opt)
              << " T_star_upper=" << fmt_double(e.T_star_upper) << " ";
    } else if (kind == "entropy") {
      e = entropy_envelope(get("I0", 0), get("Idot0", 0), eo);
    } else {
      e = fg_envelope(get("F0", 1), get("G0", 0), eo);
    }
  } catch (const Error& ex) {
    err << ex.what() << "\n";
    return ex.code() == Errc::parameter || ex.code() == Errc::inapplicable ? exit_usage : exit_numeric;
  }
  summary << "blew_up=" << (e.blew_up ? "true" : "false") << " T_cross=" << fmt_double(e.T_cross)
          << " T_star=" << fmt_double(e.T_star);
  if (!e.note.empty()) summary << " note=" << e.note;
  std::ostringstream csv;
  csv << "t,y,dy,h\n";
  for (std::size_t i = 0; i < e.t.size(); ++i)
    csv << fmt_double(e.t[i]) << "," << fmt_double(e.y[i]) << "," << fmt_double(e.dy[i]) << "," << fmt_double(e.h[i])
        << "\n";
  if (out_path.empty()) {
    out << csv.str();
    err << summary.str() << "\n";
  } else {
    try {
      write_text_file(out_path, csv.str());
    } catch (const Error& ex) {
      err << ex.what() << "\n";
      return exit_usage;
    }
    out << summary.str() << "\n";
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

inline SweepAxis parse_vary(const std::string& spec) {
  const auto eq = spec.find('=');
  require(eq != std::string::npos && eq > 0 && eq + 1 < spec.size(), Errc::config,
          "--vary expects KEY=a,b,c, got '" + spec + "'");
  SweepAxis a;
  a.key = spec.substr(0, eq);
  a.values = detail::split(spec.substr(eq + 1), ',');
  for (const auto& v : a.values) require(!v.empty(), Errc::config, "empty value in --vary " + a.key);
  return a;
}

inline int sweep(const std::string& config_path, const std::vector<std::string>& vary, const std::string& out_dir,
                 std::size_t jobs, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<SweepAxis> axes;
  try {
    for (const auto& v : vary) axes.push_back(parse_vary(v));
    load_config(config_path);  // fail fast on the base config
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_usage;
  }
  std::vector<std::map<std::string, std::string>> combos{{}};
  for (const auto& a : axes) {
    std::vector<std::map<std::string, std::string>> next;
    for (const auto& c : combos)
      for (const auto& v : a.values) {
        auto m = c;
        m[a.key] = v;
        next.push_back(std::move(m));
      }
    combos = std::move(next);
  }
  const fs::path root = out_dir.empty() ? fs::path(load_config(config_path).output_dir) : fs::path(out_dir);
  fs::create_directories(root);
  std::vector<SimulateResult> results(combos.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < combos.size(); i = next++) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%04zu", i);
      SimulateRequest rq;
      rq.config_path = config_path;
      rq.out_dir = (root / name).string();
      rq.overrides = combos[i];
      std::ostringstream local;
      results[i] = simulate(rq, local);
      if (!local.str().empty()) {
        std::lock_guard lk(err_mutex);
        err << name << ": " << local.str();
      }
    }
  };
  const std::size_t nthreads = std::max<std::size_t>(1, std::min(jobs, combos.size()));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < nthreads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream idx;
  idx << "run";
  for (const auto& a : axes) idx << "," << a.key;
  idx << ",exit_code,termination,t_final,steps,records\n";
  int worst = exit_ok;
  for (std::size_t i = 0; i < combos.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%04zu", i);
    idx << name;
    for (const auto& a : axes) idx << "," << combos[i].at(a.key);
    const auto& r = results[i];
    idx << "," << r.exit_code << "," << (r.exit_code == exit_usage ? "config-error" : to_string(r.reason)) << ","
        << fmt_double(r.t_final) << "," << r.steps << "," << r.records << "\n";
    worst = std::max(worst, r.exit_code);
  }
  write_text_file(root / "index.csv", idx.str());
  out << "wrote " << combos.size() << " runs to " << root.string() << "\n";
  return worst;
}

}  // namespace hlb
