#pragma once

// Pseudo-spectral RK4 time integration of the periodic model family and of
// the HL/CKY systems in log coordinates, with resolution monitoring.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "biotsavart.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "fields.hpp"
#include "grid.hpp"

namespace hlb {

struct StepControl {
  double cfl_number = 0.4;
  double dt_min = 1e-10;
  double dt_max = 1e-2;
  double tail_threshold = 1e-6;
  bool dealias = true;  // periodic runs; log-line transport is WENO and ignores it
  bool symmetric = true;
  // > 0: land on multiples of this interval and record only there.
  double output_interval = 0;
  // log-line runs: relative size allowed in the outer edge band before the
  // support is considered to have left the grid
  double edge_threshold = 1e-8;

  void validate() const {
    require(cfl_number > 0 && cfl_number <= 1, Errc::parameter, "cfl_number must lie in (0, 1]");
    require(dt_min > 0 && dt_min < dt_max, Errc::parameter, "need 0 < dt_min < dt_max");
    require(tail_threshold > 0 && tail_threshold < 1, Errc::parameter, "tail_threshold must lie in (0, 1)");
    require(output_interval >= 0, Errc::parameter, "output_interval must be nonnegative");
    require(edge_threshold > 0 && edge_threshold < 1, Errc::parameter, "edge_threshold must lie in (0, 1)");
  }
};

enum class Termination { time_reached, resolution_lost, cfl_floor, nan_detected };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::time_reached: return "time-reached";
    case Termination::resolution_lost: return "resolution-lost";
    case Termination::cfl_floor: return "cfl-floor";
    case Termination::nan_detected: return "nan-detected";
  }
  return "?";
}

inline std::size_t dealias_cutoff(std::size_t n) { return n / 3; }

// ---------------------------------------------------------------------------
// Periodic right-hand sides

struct PeriodicTendency {
  Samples domega, dtheta;
  Samples u, ux;
};

inline PeriodicTendency rhs(const ModelSpec& model, const FieldState& s, bool dealias = true) {
  require(model.domain == Domain::periodic, Errc::spec, "periodic rhs called for a log-line model");
  const auto& g = s.grid;
  const std::size_t N = g.N;
  detail::check_size(s.omega.size(), N);
  detail::check_size(s.theta.size(), N);
  auto& fft = fft_for(N);
  const std::size_t K = dealias ? dealias_cutoff(N) : N / 2;
  const std::size_t nspec = N / 2 + 1;
  const double base = 2 * std::numbers::pi / g.L;

  auto ws = fft.forward(s.omega);
  truncate_spectrum(ws, K);
  std::vector<cplx> tmp(nspec);
  auto derive = [&](const std::vector<cplx>& in) {
    for (std::size_t k = 0; k < nspec; ++k) tmp[k] = in[k] * cplx(0, base * static_cast<double>(k));
    tmp[N / 2] = 0;
    return fft.inverse(tmp);
  };
  const auto wx = derive(ws);

  PeriodicTendency out;
  const bool ccf = model.model == Model::CCF;
  if (model.method == BiotSavartMethod::spectral) {
    // log-sin multiplier for u, conjugate function for H w
    for (std::size_t k = 0; k < nspec; ++k) {
      if (ccf) tmp[k] = k == 0 ? cplx(0, 0) : ws[k] * cplx(0, -1);
      else tmp[k] = k == 0 ? ws[0] * (-(g.L / std::numbers::pi) * std::numbers::ln2)
                           : ws[k] * (-g.L / (2 * std::numbers::pi * static_cast<double>(k)));
    }
    if (ccf) tmp[N / 2] = 0;
    out.u = fft.inverse(tmp);
    for (std::size_t k = 0; k < nspec; ++k) {
      if (ccf) tmp[k] = ws[k] * (base * static_cast<double>(k));
      else tmp[k] = k == 0 ? cplx(0, 0) : ws[k] * cplx(0, -1);
    }
    tmp[N / 2] = 0;
    out.ux = fft.inverse(tmp);
  } else {
    const auto wf = fft.inverse(ws);
    if (ccf) {
      if (model.method == BiotSavartMethod::direct) out.u = hilbert_ux(wf, g, BiotSavartMethod::direct);
      else out.u = velocity_mollified(wf, g, model.a_layer).ux;
      out.ux = spectral_derivative(out.u, g);
    } else {
      auto v = velocity_periodic(wf, g, model.method, model.a_layer);
      out.u = std::move(v.u);
      out.ux = std::move(v.ux);
    }
  }

  auto filter = [&](Samples& f) {
    if (!dealias) return;
    auto sp = fft.forward(f);
    truncate_spectrum(sp, K);
    fft.inverse(sp, f);
  };

  out.domega.assign(N, 0.0);
  out.dtheta.assign(N, 0.0);
  const double a = model.osw_a;
  const auto& u = out.u;
  const auto& ux = out.ux;
  const auto wf = dealias ? fft.inverse(ws) : s.omega;
  switch (model.model) {
    case Model::Euler2D:
    case Model::CCF:
      for (std::size_t j = 0; j < N; ++j) out.domega[j] = -u[j] * wx[j];
      break;
    case Model::CLM:
      for (std::size_t j = 0; j < N; ++j) out.domega[j] = ux[j] * wf[j];
      break;
    case Model::DeGregorio:
      for (std::size_t j = 0; j < N; ++j) out.domega[j] = -u[j] * wx[j] + ux[j] * wf[j];
      break;
    case Model::OSW:
      for (std::size_t j = 0; j < N; ++j) out.domega[j] = -a * u[j] * wx[j] + ux[j] * wf[j];
      break;
    case Model::HL: {
      auto ts = fft.forward(s.theta);
      truncate_spectrum(ts, K);
      const auto tx = derive(ts);
      for (std::size_t j = 0; j < N; ++j) {
        out.domega[j] = -u[j] * wx[j] + tx[j];
        out.dtheta[j] = -u[j] * tx[j];
      }
      break;
    }
    case Model::CKY: throw Error(Errc::spec, "CKY is evolved on the log line");
  }
  filter(out.domega);
  if (model.model == Model::HL) filter(out.dtheta);
  return out;
}

namespace detail {
inline bool all_finite(const Samples& a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}
}  // namespace detail

// Classical RK4 step followed by theta(0) = 0 and, optionally, the symmetry projection.
inline FieldState step(const FieldState& s, double dt, const ModelSpec& model, bool dealias = true,
                       bool symmetric = true) {
  require(dt > 0, Errc::parameter, "time step must be positive");
  const std::size_t N = s.grid.N;
  auto axpy = [&](const FieldState& base, const PeriodicTendency& k, double c) {
    FieldState r = base;
    for (std::size_t j = 0; j < N; ++j) {
      r.omega[j] += c * k.domega[j];
      r.theta[j] += c * k.dtheta[j];
    }
    return r;
  };
  const auto k1 = rhs(model, s, dealias);
  const auto k2 = rhs(model, axpy(s, k1, 0.5 * dt), dealias);
  const auto k3 = rhs(model, axpy(s, k2, 0.5 * dt), dealias);
  const auto k4 = rhs(model, axpy(s, k3, dt), dealias);
  FieldState out = s;
  for (std::size_t j = 0; j < N; ++j) {
    out.omega[j] += dt / 6 * (k1.domega[j] + 2 * k2.domega[j] + 2 * k3.domega[j] + k4.domega[j]);
    out.theta[j] += dt / 6 * (k1.dtheta[j] + 2 * k2.dtheta[j] + 2 * k3.dtheta[j] + k4.dtheta[j]);
  }
  out.t = s.t + dt;
  if (!detail::all_finite(out.omega) || !detail::all_finite(out.theta))
    throw Error(Errc::nan_detected, "non-finite values at t = " + std::to_string(out.t));
  if (symmetric) return enforce_symmetry(out);
  const double t0 = out.theta[0];
  for (auto& v : out.theta) v -= t0;
  return out;
}

// ---------------------------------------------------------------------------
// Log-line right-hand sides: Omega_t + U Omega_xi = e^xi rho, rho_t + (U rho)_xi = 0.
// Fourier truncation on the finite xi box rings everywhere and the e^xi source
// amplifies that ringing, so transport here uses upwind WENO5 with zero ghost
// values (the data are compactly supported inside the box).

namespace detail {
struct Weno5 {
  static double blend(double p0, double p1, double p2, double is0, double is1, double is2, double eps) {
    const double a0 = 0.1 / ((eps + is0) * (eps + is0));
    const double a1 = 0.6 / ((eps + is1) * (eps + is1));
    const double a2 = 0.3 / ((eps + is2) * (eps + is2));
    return (a0 * p0 + a1 * p1 + a2 * p2) / (a0 + a1 + a2);
  }
  // Interface value at j+1/2 from q(j-2..j+2), biased to the left.
  static double face(double qm2, double qm1, double q0, double qp1, double qp2, double eps) {
    const double p0 = (2 * qm2 - 7 * qm1 + 11 * q0) / 6;
    const double p1 = (-qm1 + 5 * q0 + 2 * qp1) / 6;
    const double p2 = (2 * q0 + 5 * qp1 - qp2) / 6;
    const double is0 = 13.0 / 12 * std::pow(qm2 - 2 * qm1 + q0, 2) + 0.25 * std::pow(qm2 - 4 * qm1 + 3 * q0, 2);
    const double is1 = 13.0 / 12 * std::pow(qm1 - 2 * q0 + qp1, 2) + 0.25 * std::pow(qm1 - qp1, 2);
    const double is2 = 13.0 / 12 * std::pow(q0 - 2 * qp1 + qp2, 2) + 0.25 * std::pow(3 * q0 - 4 * qp1 + qp2, 2);
    return blend(p0, p1, p2, is0, is1, is2, eps);
  }
  // One-sided derivative from the five differences v1..v5 (Jiang-Peng).
  static double deriv(double v1, double v2, double v3, double v4, double v5, double eps) {
    const double p0 = v1 / 3 - 7 * v2 / 6 + 11 * v3 / 6;
    const double p1 = -v2 / 6 + 5 * v3 / 6 + v4 / 3;
    const double p2 = v3 / 3 + 5 * v4 / 6 - v5 / 6;
    const double is0 = 13.0 / 12 * std::pow(v1 - 2 * v2 + v3, 2) + 0.25 * std::pow(v1 - 4 * v2 + 3 * v3, 2);
    const double is1 = 13.0 / 12 * std::pow(v2 - 2 * v3 + v4, 2) + 0.25 * std::pow(v2 - v4, 2);
    const double is2 = 13.0 / 12 * std::pow(v3 - 2 * v4 + v5, 2) + 0.25 * std::pow(3 * v3 - 4 * v4 + v5, 2);
    return blend(p0, p1, p2, is0, is1, is2, eps);
  }
};

inline double weno_eps(const Samples& f) {
  double m = 0;
  for (double v : f) m = std::max(m, std::abs(v));
  return std::max(1e-20 * m * m, 1e-150);
}

// -(U f)_xi in conservative form, flux split by the sign of U.
inline Samples weno_flux_divergence(const Samples& U, const Samples& f, double h) {
  const long M = static_cast<long>(f.size());
  Samples fp(f.size()), fm(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    fp[i] = std::max(U[i], 0.0) * f[i];
    fm[i] = std::min(U[i], 0.0) * f[i];
  }
  const double ep = weno_eps(fp), em = weno_eps(fm);
  auto at = [&](const Samples& q, long i) { return (i < 0 || i >= M) ? 0.0 : q[static_cast<std::size_t>(i)]; };
  // face[i] is the flux through i - 1/2, for i = 0..M
  Samples face(static_cast<std::size_t>(M) + 1);
  for (long i = 0; i <= M; ++i) {
    const long j = i - 1;
    const double left = Weno5::face(at(fp, j - 2), at(fp, j - 1), at(fp, j), at(fp, j + 1), at(fp, j + 2), ep);
    const double right = Weno5::face(at(fm, j + 3), at(fm, j + 2), at(fm, j + 1), at(fm, j), at(fm, j - 1), em);
    face[static_cast<std::size_t>(i)] = left + right;
  }
  Samples out(f.size());
  for (long i = 0; i < M; ++i)
    out[static_cast<std::size_t>(i)] = -(face[static_cast<std::size_t>(i) + 1] - face[static_cast<std::size_t>(i)]) / h;
  return out;
}

// Upwind f_xi for advection with velocity U.
inline Samples weno_upwind_derivative(const Samples& U, const Samples& f, double h) {
  const long M = static_cast<long>(f.size());
  auto at = [&](long i) { return (i < 0 || i >= M) ? 0.0 : f[static_cast<std::size_t>(i)]; };
  auto d = [&](long k) { return (at(k + 1) - at(k)) / h; };
  double m = 0;
  for (long k = -1; k < M; ++k) m = std::max(m, std::abs(d(k)));
  const double eps = std::max(1e-20 * m * m, 1e-150);
  Samples out(f.size());
  for (long i = 0; i < M; ++i) {
    out[static_cast<std::size_t>(i)] = U[static_cast<std::size_t>(i)] >= 0
                                           ? Weno5::deriv(d(i - 3), d(i - 2), d(i - 1), d(i), d(i + 1), eps)
                                           : Weno5::deriv(d(i + 2), d(i + 1), d(i), d(i - 1), d(i - 2), eps);
  }
  return out;
}

// Fourth-order central difference with zero ghost values.
inline Samples central_derivative(const Samples& f, double h) {
  const long M = static_cast<long>(f.size());
  auto at = [&](long i) { return (i < 0 || i >= M) ? 0.0 : f[static_cast<std::size_t>(i)]; };
  Samples out(f.size());
  for (long i = 0; i < M; ++i)
    out[static_cast<std::size_t>(i)] = (at(i - 2) - 8 * at(i - 1) + 8 * at(i + 1) - at(i + 2)) / (12 * h);
  return out;
}
}  // namespace detail

struct LogTendency {
  Samples dOmega, drho;
  Samples U, Uxi;
};

inline LogTendency rhs_log(const ModelSpec& model, const LogState& s, const LogConvolution* conv) {
  require(model.domain == Domain::log_line, Errc::spec, "log-line rhs called for a periodic model");
  require(model.model == Model::HL || model.model == Model::CKY, Errc::spec, "log-line rhs supports HL and CKY");
  const auto& g = s.grid;
  const std::size_t M = g.M;
  detail::check_size(s.Omega.size(), M);
  detail::check_size(s.rho.size(), M);
  const double h = g.spacing();

  LogTendency out;
  if (model.model == Model::HL) {
    std::unique_ptr<LogConvolution> own;
    if (!conv) {
      own = std::make_unique<LogConvolution>(g);
      conv = own.get();
    }
    out.U = conv->apply(s.Omega);
    out.Uxi = conv->apply(detail::central_derivative(s.Omega, h));
  } else {
    out.U = cumulative_from_left(s.Omega, h);
    const double c = 2 * inv_pi * model.cky_scale;
    for (auto& v : out.U) v *= c;
    out.Uxi = s.Omega;
    for (auto& v : out.Uxi) v *= c;
  }
  const auto wx = detail::weno_upwind_derivative(out.U, s.Omega, h);
  out.dOmega.resize(M);
  for (std::size_t i = 0; i < M; ++i) out.dOmega[i] = -out.U[i] * wx[i] + std::exp(g.node(i)) * s.rho[i];
  out.drho = detail::weno_flux_divergence(out.U, s.rho, h);
  return out;
}

inline LogState step_log(const LogState& s, double dt, const ModelSpec& model, const LogConvolution* conv) {
  require(dt > 0, Errc::parameter, "time step must be positive");
  const std::size_t M = s.grid.M;
  auto axpy = [&](const LogState& base, const LogTendency& k, double c) {
    LogState r = base;
    for (std::size_t i = 0; i < M; ++i) {
      r.Omega[i] += c * k.dOmega[i];
      r.rho[i] += c * k.drho[i];
    }
    return r;
  };
  const auto k1 = rhs_log(model, s, conv);
  const auto k2 = rhs_log(model, axpy(s, k1, 0.5 * dt), conv);
  const auto k3 = rhs_log(model, axpy(s, k2, 0.5 * dt), conv);
  const auto k4 = rhs_log(model, axpy(s, k3, dt), conv);
  LogState out = s;
  for (std::size_t i = 0; i < M; ++i) {
    out.Omega[i] += dt / 6 * (k1.dOmega[i] + 2 * k2.dOmega[i] + 2 * k3.dOmega[i] + k4.dOmega[i]);
    out.rho[i] += dt / 6 * (k1.drho[i] + 2 * k2.drho[i] + 2 * k3.drho[i] + k4.drho[i]);
  }
  out.t = s.t + dt;
  if (!detail::all_finite(out.Omega) || !detail::all_finite(out.rho))
    throw Error(Errc::nan_detected, "non-finite values at t = " + std::to_string(out.t));
  refresh_theta(out);
  return out;
}

// ---------------------------------------------------------------------------
// Runs

struct RunOptions {
  double t_end = 1;
  std::size_t record_every = 1;    // steps between records (ignored with output_interval)
  std::size_t snapshot_every = 0;  // records between stored snapshots; 0 keeps only first and last
  std::size_t checkpoint_every = 0;
  double lp_exponent = 4;
  std::function<void(const FieldState&, const VelocityField&, const DiagnosticsRecord&)> observer;
  std::function<void(const LogState&, const DiagnosticsRecord&)> log_observer;
};

struct RunCheckpoint {
  FieldState state;
  LogState log_state;
  bool is_log = false;
  NormHistory history;
  std::vector<DiagnosticsRecord> records;
  std::size_t steps = 0;
  std::size_t snapshot_counter = 0;
};

struct Trajectory {
  std::vector<DiagnosticsRecord> records;
  std::vector<FieldState> snapshots;       // periodic runs
  std::vector<LogState> log_snapshots;     // log-line runs
  std::vector<std::size_t> snapshot_record;  // index into records for each snapshot
  FieldState final_state;
  LogState final_log_state;
  Termination reason = Termination::time_reached;
  std::string message;
  std::size_t steps = 0;
};

namespace detail {
inline double next_output_time(double t, double interval) {
  if (interval <= 0) return std::numeric_limits<double>::infinity();
  const double k = std::floor(t / interval * (1 + 1e-12) + 1e-9);
  return (k + 1) * interval;
}

inline SpectrumReport periodic_tail(const Samples& w, bool dealias) {
  return spectrum_report(w, dealias ? dealias_cutoff(w.size()) : w.size() / 2);
}

inline DiagnosticsRecord measure_periodic(const ModelSpec& model, const FieldState& s, double dt, NormHistory& hist,
                                          bool dealias, double p, VelocityField* vel_out = nullptr) {
  DiagnosticsRecord r;
  r.t = s.t;
  r.dt = dt;
  VelocityField v;
  if (model.model == Model::CCF) {
    v.u = model.method == BiotSavartMethod::spectral ? hilbert_ux(s.omega, s.grid) : hilbert_ux(s.omega, s.grid, BiotSavartMethod::direct);
    v.ux = spectral_derivative(v.u, s.grid);
  } else {
    v = velocity_periodic(s.omega, s.grid, model.method, model.a_layer);
  }
  r.I = functional_I(s);
  r.J = functional_J(s);
  norms_and_bounds(s, v, hist, r, p);
  r.tail_fraction = periodic_tail(s.omega, dealias).tail_fraction;
  if (vel_out) *vel_out = std::move(v);
  return r;
}

inline DiagnosticsRecord measure_log(const ModelSpec& model, const LogState& s, double dt, NormHistory& hist,
                                     const LogConvolution* conv) {
  DiagnosticsRecord r;
  r.t = s.t;
  r.dt = dt;
  const auto f = functionals_log(s);
  r.mass = f.mass;
  r.entropy = f.entropy;
  r.F = f.F;
  r.F_alt = f.F_alt;
  r.G = f.G;
  r.lemma3_margin = f.lemma3_margin;
  r.lemma3_shift = f.shift;
  const auto k = rhs_log(model, s, conv);
  const auto& g = s.grid;
  double mw = 0, mtx = 0, mux = 0;
  for (std::size_t i = 0; i < g.M; ++i) {
    mw = std::max(mw, std::abs(s.Omega[i]));
    mtx = std::max(mtx, std::abs(s.rho[i]) * std::exp(g.node(i)));
    mux = std::max(mux, std::abs(k.Uxi[i] - k.U[i]));
  }
  r.max_omega = mw;
  r.max_thetax = mtx;
  r.max_ux = mux;
  r.l1_omega = norm_l1(s.Omega, g.spacing());
  if (!hist.started) {
    hist.started = true;
    hist.t0 = s.t;
  } else {
    const double h = s.t - hist.t;
    hist.bkm_ux += 0.5 * h * (hist.sup_ux + mux);
    hist.bkm_thetax += 0.5 * h * (hist.sup_thetax + mtx);
    hist.bkm_omega += 0.5 * h * (hist.sup_omega + mw);
  }
  hist.t = s.t;
  hist.sup_ux = mux;
  hist.sup_thetax = mtx;
  hist.sup_omega = mw;
  r.bkm_ux = hist.bkm_ux;
  r.bkm_thetax = hist.bkm_thetax;
  r.bkm_omega = hist.bkm_omega;
  r.tail_fraction = spectrum_report(s.Omega, g.M / 2).tail_fraction;
  return r;
}

inline double max_abs(const Samples& a) {
  double m = 0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// Fraction of the peak found in the outer 3% of the log grid.
inline double log_edge_fraction(const LogState& s) {
  const std::size_t band = std::max<std::size_t>(2, s.grid.M * 3 / 100);
  return std::max(edge_fraction(s.Omega, band), edge_fraction(s.rho, band));
}
}  // namespace detail

inline Trajectory run(const ModelSpec& model, const FieldState& state0, const StepControl& control,
                      const RunOptions& opt, const RunCheckpoint* resume = nullptr,
                      const std::function<void(const RunCheckpoint&)>& on_checkpoint = {}) {
  model.validate();
  control.validate();
  require(model.domain == Domain::periodic, Errc::spec, "run() evolves periodic models; use run_log()");
  require(opt.t_end >= state0.t, Errc::parameter, "t_end precedes the initial time");
  Trajectory tr;
  NormHistory hist;
  FieldState s;
  std::size_t snap_counter = 0;
  const double c0 = 2 / (state0.grid.L * state0.grid.L);

  auto maybe_snapshot = [&](const FieldState& st, bool force) {
    const bool take = force || (opt.snapshot_every > 0 && snap_counter % opt.snapshot_every == 0);
    if (take) {
      tr.snapshots.push_back(st);
      tr.snapshot_record.push_back(tr.records.size() - 1);
    }
    ++snap_counter;
  };
  auto record = [&](const FieldState& st, double dt) {
    VelocityField v;
    auto r = detail::measure_periodic(model, st, dt, hist, control.dealias, opt.lp_exponent, &v);
    tr.records.push_back(r);
    if (opt.observer) opt.observer(st, v, r);
    return r;
  };

  if (resume) {
    s = resume->state;
    hist = resume->history;
    tr.records = resume->records;
    tr.steps = resume->steps;
    snap_counter = resume->snapshot_counter;
  } else {
    s = state0;
    if (control.dealias) {
      s.omega = lowpass(s.omega, dealias_cutoff(s.grid.N));
      s.theta = lowpass(s.theta, dealias_cutoff(s.grid.N));
    }
    if (control.symmetric) s = enforce_symmetry(s);
    else {
      const double t0 = s.theta[0];
      for (auto& v : s.theta) v -= t0;
    }
    record(s, 0);
    maybe_snapshot(s, true);
  }

  const double dx = s.grid.spacing();
  std::size_t since_record = 0;
  while (true) {
    if (s.t >= opt.t_end * (1 - 1e-14)) {
      tr.reason = Termination::time_reached;
      break;
    }
    const auto k = rhs(model, s, control.dealias);
    const double scale = std::max({detail::max_abs(k.u), detail::max_abs(k.ux) * dx, 1e-12});
    double dt = std::min(control.dt_max, control.cfl_number * dx / scale);
    if (dt < control.dt_min) {
      tr.reason = Termination::cfl_floor;
      tr.message = "time step " + std::to_string(dt) + " below dt_min";
      break;
    }
    const double t_out = detail::next_output_time(s.t, control.output_interval);
    bool at_output = false;
    if (s.t + dt >= t_out * (1 - 1e-13)) {
      dt = t_out - s.t;
      at_output = true;
    }
    if (s.t + dt >= opt.t_end) {
      dt = opt.t_end - s.t;
      at_output = true;
    }
    FieldState next;
    try {
      next = step(s, dt, model, control.dealias, control.symmetric);
    } catch (const Error& e) {
      if (e.code() != Errc::nan_detected) throw;
      tr.reason = Termination::nan_detected;
      tr.message = e.what();
      break;
    }
    if (at_output && std::abs(next.t - t_out) < 1e-12 * std::max(1.0, t_out)) next.t = t_out;
    s = std::move(next);
    ++tr.steps;
    ++since_record;
    const double tail = detail::periodic_tail(s.omega, control.dealias).tail_fraction;
    const bool lost = tail > control.tail_threshold;
    const bool due = control.output_interval > 0 ? at_output : since_record >= opt.record_every;
    const bool done = s.t >= opt.t_end * (1 - 1e-14);
    if (due || lost || done) {
      record(s, dt);
      since_record = 0;
      maybe_snapshot(s, lost || done);
      if (on_checkpoint && opt.checkpoint_every > 0 && tr.records.size() % opt.checkpoint_every == 0) {
        RunCheckpoint cp;
        cp.state = s;
        cp.history = hist;
        cp.records = tr.records;
        cp.steps = tr.steps;
        cp.snapshot_counter = snap_counter;
        on_checkpoint(cp);
      }
    }
    if (lost) {
      tr.reason = Termination::resolution_lost;
      tr.message = "spectral tail fraction " + std::to_string(tail) + " exceeds threshold";
      break;
    }
  }
  if (tr.snapshot_record.empty() || tr.snapshot_record.back() + 1 != tr.records.size()) {
    if (tr.records.back().t != s.t) record(s, 0);
    tr.snapshots.push_back(s);
    tr.snapshot_record.push_back(tr.records.size() - 1);
  }
  finalize_margins(tr.records, c0);
  tr.final_state = s;
  return tr;
}

inline Trajectory run_log(const ModelSpec& model, const LogState& state0, const StepControl& control,
                          const RunOptions& opt, const RunCheckpoint* resume = nullptr,
                          const std::function<void(const RunCheckpoint&)>& on_checkpoint = {}) {
  model.validate();
  control.validate();
  require(model.domain == Domain::log_line, Errc::spec, "run_log() evolves log-line models");
  Trajectory tr;
  NormHistory hist;
  LogState s;
  std::size_t snap_counter = 0;
  std::unique_ptr<LogConvolution> conv;
  if (model.model == Model::HL) conv = std::make_unique<LogConvolution>(state0.grid);

  auto maybe_snapshot = [&](const LogState& st, bool force) {
    const bool take = force || (opt.snapshot_every > 0 && snap_counter % opt.snapshot_every == 0);
    if (take) {
      tr.log_snapshots.push_back(st);
      tr.snapshot_record.push_back(tr.records.size() - 1);
    }
    ++snap_counter;
  };
  auto record = [&](const LogState& st, double dt) {
    auto r = detail::measure_log(model, st, dt, hist, conv.get());
    tr.records.push_back(r);
    if (opt.log_observer) opt.log_observer(st, r);
  };

  if (resume) {
    s = resume->log_state;
    hist = resume->history;
    tr.records = resume->records;
    tr.steps = resume->steps;
    snap_counter = resume->snapshot_counter;
  } else {
    s = state0;
    refresh_theta(s);
    require(detail::log_edge_fraction(s) <= control.edge_threshold, Errc::truncation,
            "initial support reaches the log-grid boundary");
    record(s, 0);
    maybe_snapshot(s, true);
  }

  const double h = s.grid.spacing();
  std::size_t since_record = 0;
  while (true) {
    if (s.t >= opt.t_end * (1 - 1e-14)) {
      tr.reason = Termination::time_reached;
      break;
    }
    const auto k = rhs_log(model, s, conv.get());
    double growth = 0;
    for (std::size_t i = 0; i < s.grid.M; ++i) growth = std::max(growth, std::abs(k.Uxi[i]));
    const double scale = std::max({detail::max_abs(k.U), growth * h, 1e-12});
    double dt = std::min(control.dt_max, control.cfl_number * h / scale);
    if (dt < control.dt_min) {
      tr.reason = Termination::cfl_floor;
      tr.message = "time step " + std::to_string(dt) + " below dt_min";
      break;
    }
    const double t_out = detail::next_output_time(s.t, control.output_interval);
    bool at_output = false;
    if (s.t + dt >= t_out * (1 - 1e-13)) {
      dt = t_out - s.t;
      at_output = true;
    }
    if (s.t + dt >= opt.t_end) {
      dt = opt.t_end - s.t;
      at_output = true;
    }
    LogState next;
    try {
      next = step_log(s, dt, model, conv.get());
    } catch (const Error& e) {
      if (e.code() != Errc::nan_detected) throw;
      tr.reason = Termination::nan_detected;
      tr.message = e.what();
      break;
    }
    if (at_output && std::abs(next.t - t_out) < 1e-12 * std::max(1.0, t_out)) next.t = t_out;
    s = std::move(next);
    ++tr.steps;
    ++since_record;
    const double tail = spectrum_report(s.Omega, s.grid.M / 2).tail_fraction;
    const double edge = detail::log_edge_fraction(s);
    const bool lost = tail > control.tail_threshold || edge > control.edge_threshold;
    const bool due = control.output_interval > 0 ? at_output : since_record >= opt.record_every;
    const bool done = s.t >= opt.t_end * (1 - 1e-14);
    if (due || lost || done) {
      record(s, dt);
      since_record = 0;
      maybe_snapshot(s, lost || done);
      if (on_checkpoint && opt.checkpoint_every > 0 && tr.records.size() % opt.checkpoint_every == 0) {
        RunCheckpoint cp;
        cp.log_state = s;
        cp.is_log = true;
        cp.history = hist;
        cp.records = tr.records;
        cp.steps = tr.steps;
        cp.snapshot_counter = snap_counter;
        on_checkpoint(cp);
      }
    }
    if (lost) {
      tr.reason = Termination::resolution_lost;
      tr.message = edge > control.edge_threshold ? "support reached the log-grid boundary"
                                                  : "spectral tail fraction " + std::to_string(tail) + " exceeds threshold";
      break;
    }
  }
  if (tr.snapshot_record.empty() || tr.snapshot_record.back() + 1 != tr.records.size()) {
    if (tr.records.back().t != s.t) record(s, 0);
    tr.log_snapshots.push_back(s);
    tr.snapshot_record.push_back(tr.records.size() - 1);
  }
  finalize_margins(tr.records, 0.0);
  tr.final_log_state = s;
  return tr;
}

}  // namespace hlb
