#pragma once

// Serialization: time-series and snapshot CSVs, run manifest, and hexfloat
// checkpoints that restore a run bit for bit.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "diagnostics.hpp"
#include "evolve.hpp"

namespace hlb {

namespace fs = std::filesystem;

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string hex_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

struct Column {
  const char* name;
  double DiagnosticsRecord::*field;
};

inline const std::vector<Column>& periodic_columns() {
  using R = DiagnosticsRecord;
  static const std::vector<Column> cols{
      {"t", &R::t},
      {"dt", &R::dt},
      {"I", &R::I},
      {"J", &R::J},
      {"dIdt_minus_J", &R::dIdt_minus_J},
      {"dJdt_minus_c0I2", &R::dJdt_minus_c0I2},
      {"max_omega", &R::max_omega},
      {"max_thetax", &R::max_thetax},
      {"max_ux", &R::max_ux},
      {"bkm_ux", &R::bkm_ux},
      {"bkm_thetax", &R::bkm_thetax},
      {"bkm_omega", &R::bkm_omega},
      {"l1_omega", &R::l1_omega},
      {"l1_bound_margin", &R::l1_bound_margin},
      {"u_l2", &R::u_l2},
      {"u_bmo_proxy", &R::u_bmo_proxy},
      {"tail_fraction", &R::tail_fraction},
  };
  return cols;
}

inline const std::vector<Column>& log_columns() {
  using R = DiagnosticsRecord;
  static const std::vector<Column> cols{
      {"t", &R::t},
      {"dt", &R::dt},
      {"mass", &R::mass},
      {"entropy", &R::entropy},
      {"entropy_ddot_margin", &R::entropy_ddot_margin},
      {"F", &R::F},
      {"F_alt", &R::F_alt},
      {"G", &R::G},
      {"dFdt_minus_G", &R::dFdt_minus_G},
      {"dGdt_minus_F2", &R::dGdt_minus_F2},
      {"lemma3_margin", &R::lemma3_margin},
      {"lemma3_shift", &R::lemma3_shift},
      {"max_omega", &R::max_omega},
      {"max_thetax", &R::max_thetax},
      {"max_ux", &R::max_ux},
      {"bkm_ux", &R::bkm_ux},
      {"bkm_thetax", &R::bkm_thetax},
      {"bkm_omega", &R::bkm_omega},
      {"l1_omega", &R::l1_omega},
      {"tail_fraction", &R::tail_fraction},
  };
  return cols;
}

// Every field, in a fixed order, for checkpoints.
inline const std::vector<double DiagnosticsRecord::*>& all_record_fields() {
  using R = DiagnosticsRecord;
  static const std::vector<double R::*> f{
      &R::t, &R::dt, &R::I, &R::J, &R::dIdt_minus_J, &R::dJdt_minus_c0I2, &R::max_omega, &R::max_thetax,
      &R::max_ux, &R::bkm_ux, &R::bkm_thetax, &R::bkm_omega, &R::l1_omega, &R::l1_bound_margin, &R::u_l2,
      &R::u_lp, &R::u_bmo_proxy, &R::tail_fraction, &R::min_omega_half, &R::min_thetax_half, &R::mass,
      &R::entropy, &R::F, &R::F_alt, &R::G, &R::lemma3_margin, &R::lemma3_shift, &R::dFdt_minus_G,
      &R::dGdt_minus_F2, &R::entropy_ddot_margin};
  return f;
}

inline void write_timeseries(std::ostream& out, const std::vector<DiagnosticsRecord>& recs, bool log_run) {
  const auto& cols = log_run ? log_columns() : periodic_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i].name;
  out << "\n";
  for (const auto& r : recs) {
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << fmt_double(r.*(cols[i].field));
    out << "\n";
  }
}

inline void write_snapshot(std::ostream& out, const FieldState& s, const ModelSpec& model) {
  VelocityField v;
  if (model.model == Model::CCF)
    v.u = hilbert_ux(s.omega, s.grid, model.method == BiotSavartMethod::spectral ? BiotSavartMethod::spectral
                                                                                 : BiotSavartMethod::direct);
  else
    v = velocity_periodic(s.omega, s.grid, model.method, model.a_layer);
  out << "x,omega,theta,u\n";
  for (std::size_t j = 0; j < s.grid.N; ++j)
    out << fmt_double(s.grid.node(j)) << "," << fmt_double(s.omega[j]) << "," << fmt_double(s.theta[j]) << ","
        << fmt_double(v.u[j]) << "\n";
}

// Log-line snapshot in physical variables: x = e^-xi, omega = Omega, theta = -Theta, u = -x U.
inline void write_log_snapshot(std::ostream& out, const LogState& s, const ModelSpec& model) {
  const auto U = velocity_log_convolution(s.Omega, s.grid, model.model == Model::HL ? LineKernel::HL : LineKernel::CKY,
                                          nullptr, model.cky_scale, 1.0);
  out << "x,omega,theta,u\n";
  for (std::size_t k = s.grid.M; k-- > 0;) {
    const double x = std::exp(-s.grid.node(k));
    out << fmt_double(x) << "," << fmt_double(s.Omega[k]) << "," << fmt_double(-s.Theta[k]) << ","
        << fmt_double(-x * U[k]) << "\n";
  }
}

inline void write_text_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  require(static_cast<bool>(f), Errc::config, "cannot write " + p.string());
  f << content;
  require(static_cast<bool>(f), Errc::config, "write failed for " + p.string());
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace detail {
inline void put_vec(std::ostream& out, const char* tag, const Samples& v) {
  out << tag << " " << v.size();
  for (double x : v) out << " " << hex_double(x);
  out << "\n";
}

class TokenReader {
 public:
  explicit TokenReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}
  std::string word() {
    std::string w;
    require(static_cast<bool>(in_ >> w), Errc::config, source_ + ": truncated checkpoint");
    return w;
  }
  void expect(const std::string& tag) {
    const auto w = word();
    require(w == tag, Errc::config, source_ + ": expected '" + tag + "' in checkpoint, found '" + w + "'");
  }
  double real() {
    const auto w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    require(end && *end == '\0', Errc::config, source_ + ": malformed number '" + w + "' in checkpoint");
    return v;
  }
  std::size_t count() {
    const auto w = word();
    char* end = nullptr;
    const auto v = std::strtoull(w.c_str(), &end, 10);
    require(end && *end == '\0', Errc::config, source_ + ": malformed count '" + w + "' in checkpoint");
    return static_cast<std::size_t>(v);
  }
  Samples vec(const std::string& tag) {
    expect(tag);
    Samples v(count());
    for (auto& x : v) x = real();
    return v;
  }

 private:
  std::istream& in_;
  std::string source_;
};
}  // namespace detail

inline void write_checkpoint(std::ostream& out, const RunCheckpoint& cp) {
  out << "hlblowup-checkpoint 1\n";
  out << "kind " << (cp.is_log ? "log" : "periodic") << "\n";
  out << "steps " << cp.steps << "\n";
  out << "snapshot_counter " << cp.snapshot_counter << "\n";
  const auto& h = cp.history;
  out << "history " << (h.started ? 1 : 0);
  for (double v : {h.t, h.sup_ux, h.sup_thetax, h.sup_omega, h.bkm_ux, h.bkm_thetax, h.bkm_omega, h.omega0_l1,
                   h.theta0_sup, h.t0})
    out << " " << hex_double(v);
  out << "\n";
  if (cp.is_log) {
    const auto& s = cp.log_state;
    out << "grid " << hex_double(s.grid.xi_min) << " " << hex_double(s.grid.xi_max) << " " << s.grid.M << "\n";
    out << "t " << hex_double(s.t) << "\n";
    out << "mass " << hex_double(s.mass) << "\n";
    detail::put_vec(out, "Omega", s.Omega);
    detail::put_vec(out, "Theta", s.Theta);
    detail::put_vec(out, "rho", s.rho);
  } else {
    const auto& s = cp.state;
    out << "grid " << hex_double(s.grid.L) << " " << s.grid.N << "\n";
    out << "t " << hex_double(s.t) << "\n";
    detail::put_vec(out, "omega", s.omega);
    detail::put_vec(out, "theta", s.theta);
  }
  const auto& fields = all_record_fields();
  out << "records " << cp.records.size() << " " << fields.size() << "\n";
  for (const auto& r : cp.records) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? " " : "") << hex_double(r.*fields[i]);
    out << "\n";
  }
  out << "end\n";
}

inline RunCheckpoint read_checkpoint(std::istream& in, const std::string& source = "<checkpoint>") {
  detail::TokenReader rd(in, source);
  rd.expect("hlblowup-checkpoint");
  require(rd.count() == 1, Errc::config, source + ": unsupported checkpoint version");
  RunCheckpoint cp;
  rd.expect("kind");
  const auto kind = rd.word();
  require(kind == "log" || kind == "periodic", Errc::config, source + ": unknown checkpoint kind '" + kind + "'");
  cp.is_log = kind == "log";
  rd.expect("steps");
  cp.steps = rd.count();
  rd.expect("snapshot_counter");
  cp.snapshot_counter = rd.count();
  rd.expect("history");
  auto& h = cp.history;
  h.started = rd.count() != 0;
  for (double* v : {&h.t, &h.sup_ux, &h.sup_thetax, &h.sup_omega, &h.bkm_ux, &h.bkm_thetax, &h.bkm_omega,
                    &h.omega0_l1, &h.theta0_sup, &h.t0})
    *v = rd.real();
  rd.expect("grid");
  if (cp.is_log) {
    const double a = rd.real(), b = rd.real();
    const auto M = rd.count();
    cp.log_state.grid = make_log_grid(a, b, M);
    rd.expect("t");
    cp.log_state.t = rd.real();
    rd.expect("mass");
    cp.log_state.mass = rd.real();
    cp.log_state.Omega = rd.vec("Omega");
    cp.log_state.Theta = rd.vec("Theta");
    cp.log_state.rho = rd.vec("rho");
    for (const auto* v : {&cp.log_state.Omega, &cp.log_state.Theta, &cp.log_state.rho})
      require(v->size() == M, Errc::config, source + ": checkpoint field size does not match the grid");
  } else {
    const double L = rd.real();
    const auto N = rd.count();
    cp.state.grid = make_periodic_grid(L, N);
    rd.expect("t");
    cp.state.t = rd.real();
    cp.state.omega = rd.vec("omega");
    cp.state.theta = rd.vec("theta");
    for (const auto* v : {&cp.state.omega, &cp.state.theta})
      require(v->size() == N, Errc::config, source + ": checkpoint field size does not match the grid");
  }
  rd.expect("records");
  const auto n = rd.count();
  const auto& fields = all_record_fields();
  require(rd.count() == fields.size(), Errc::config, source + ": checkpoint record layout mismatch");
  cp.records.resize(n);
  for (auto& r : cp.records)
    for (auto f : fields) r.*f = rd.real();
  rd.expect("end");
  return cp;
}

inline RunCheckpoint load_checkpoint(const fs::path& p) {
  std::ifstream f(p);
  require(static_cast<bool>(f), Errc::config, "cannot read checkpoint " + p.string());
  return read_checkpoint(f, p.string());
}

// ---------------------------------------------------------------------------
// Manifest

inline nlohmann::ordered_json config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["model"] = {{"name", to_string(c.model.model)},
                {"domain", to_string(c.model.domain)},
                {"biot_savart", to_string(c.model.method)},
                {"osw_a", c.model.osw_a},
                {"a_layer", c.model.a_layer},
                {"cky_scale", c.model.cky_scale}};
  if (c.is_log())
    j["grid"] = {{"xi_min", c.xi_min}, {"xi_max", c.xi_max}, {"M", c.M}};
  else
    j["grid"] = {{"L", c.L}, {"N", c.N}};
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [k, v] : c.params) params[k] = v;
  j["initial"] = {{"preset", c.preset}, {"params", params}};
  const auto& s = c.control;
  j["control"] = {{"cfl", s.cfl_number},
                  {"dt_min", s.dt_min},
                  {"dt_max", s.dt_max},
                  {"tail_threshold", s.tail_threshold},
                  {"dealias", s.dealias},
                  {"symmetric", s.symmetric},
                  {"output_interval", s.output_interval},
                  {"edge_threshold", s.edge_threshold}};
  const auto& o = c.options;
  j["run"] = {{"t_end", o.t_end},
              {"record_every", o.record_every},
              {"snapshot_every", o.snapshot_every},
              {"checkpoint_every", o.checkpoint_every},
              {"lp", o.lp_exponent}};
  j["seed"] = c.seed;
  return j;
}

}  // namespace hlb
