#pragma once

// Blow-up functionals, norms, quadratic forms and inequality margins.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "biotsavart.hpp"
#include "error.hpp"
#include "fields.hpp"
#include "grid.hpp"
#include "kernels.hpp"

namespace hlb {

inline constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

struct DiagnosticsRecord {
  double t = 0;
  double dt = 0;
  double I = nan_value;
  double J = nan_value;
  double dIdt_minus_J = nan_value;
  double dJdt_minus_c0I2 = nan_value;
  double max_omega = 0;
  double max_thetax = 0;
  double max_ux = 0;
  double bkm_ux = 0;
  double bkm_thetax = 0;
  double bkm_omega = 0;
  double l1_omega = 0;
  double l1_bound_margin = nan_value;
  double u_l2 = nan_value;
  double u_lp = nan_value;
  double u_bmo_proxy = nan_value;
  double tail_fraction = 0;
  // symmetry-class sign monitors on [0, L/2]
  double min_omega_half = nan_value;
  double min_thetax_half = nan_value;
  // log-line runs
  double mass = nan_value;
  double entropy = nan_value;
  double F = nan_value;
  double F_alt = nan_value;
  double G = nan_value;
  double lemma3_margin = nan_value;
  double lemma3_shift = nan_value;
  double dFdt_minus_G = nan_value;
  double dGdt_minus_F2 = nan_value;
  double entropy_ddot_margin = nan_value;
};

// ---------------------------------------------------------------------------
// I and J on the periodic grid

namespace detail {
inline void check_theta_normalized(const FieldState& s) {
  double scale = 0;
  for (double v : s.theta) scale = std::max(scale, std::abs(v));
  require(std::abs(s.theta[0]) <= 1e-10 * std::max(1.0, scale), Errc::normalization,
          "theta(0) must vanish (value " + std::to_string(s.theta[0]) + ")");
}
}  // namespace detail

// I = int_0^{L/2} theta cot(mu x) dx. theta cot is odd and periodic, so its
// sine series integrates exactly: only odd modes contribute L/(pi k).
inline double functional_I(const FieldState& s) {
  detail::check_size(s.theta.size(), s.grid.N);
  detail::check_theta_normalized(s);
  const std::size_t N = s.grid.N;
  const double mu = s.grid.mu(), L = s.grid.L;
  Samples f(N, 0.0);
  for (std::size_t j = 1; j < N; ++j) {
    if (j == N / 2) continue;
    const double x = s.grid.node(j);
    f[j] = 0.5 * (s.theta[j] + s.theta[N - j]) / std::tan(mu * x);
  }
  auto spec = fft_for(N).forward(f);
  double acc = 0;
  for (std::size_t k = 1; k < N / 2; k += 2) {
    const double b = -2 * spec[k].imag() / static_cast<double>(N);
    acc += b * L / (std::numbers::pi * static_cast<double>(k));
  }
  return acc;
}

// J = (2/pi) int_0^{L/2} theta omega cot(mu x) dx; the integrand is even and
// periodic, so half the full-period trapezoid sum is spectrally accurate.
inline double functional_J(const FieldState& s) {
  detail::check_size(s.theta.size(), s.grid.N);
  detail::check_size(s.omega.size(), s.grid.N);
  detail::check_theta_normalized(s);
  const std::size_t N = s.grid.N;
  const double mu = s.grid.mu();
  double acc = 0;
  for (std::size_t j = 1; j < N; ++j) {
    if (j == N / 2) continue;
    acc += s.theta[j] * s.omega[j] / std::tan(mu * s.grid.node(j));
  }
  return 2 * inv_pi * 0.5 * s.grid.spacing() * acc;
}

// -(1/mu) int_0^{L/2} theta_x log|sin(mu x)| dx by tanh-sinh on the interpolant.
inline double functional_I_by_parts(const FieldState& s) {
  detail::check_theta_normalized(s);
  const double mu = s.grid.mu();
  TrigInterpolant th(s.theta, s.grid.L);
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto f = [&](double x) { return x <= 0 ? 0.0 : th.derivative(x) * std::log(std::sin(mu * x)); };
  return -integrator.integrate(f, 0.0, s.grid.L / 2, 1e-13) / mu;
}

// ---------------------------------------------------------------------------
// Norms

inline double norm_l1(std::span<const double> f, double h) {
  double s = 0;
  for (double v : f) s += std::abs(v);
  return s * h;
}
inline double norm_lp(std::span<const double> f, double h, double p) {
  require(p >= 1, Errc::parameter, "L^p norm needs p >= 1");
  double s = 0;
  for (double v : f) s += std::pow(std::abs(v), p);
  return std::pow(s * h, 1 / p);
}
inline double norm_sup(std::span<const double> f) {
  double m = 0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

// Max mean oscillation (1/|Q|) int_Q |f - f_Q| over the dyadic subintervals of the period.
inline double bmo_proxy(std::span<const double> f) {
  const std::size_t n = f.size();
  double best = 0;
  for (std::size_t parts = 1; parts <= n; parts *= 2) {
    for (std::size_t p = 0; p < parts; ++p) {
      const std::size_t lo = p * n / parts, hi = (p + 1) * n / parts;
      if (hi - lo < 2) continue;
      double mean = 0;
      for (std::size_t j = lo; j < hi; ++j) mean += f[j];
      mean /= static_cast<double>(hi - lo);
      double osc = 0;
      for (std::size_t j = lo; j < hi; ++j) osc += std::abs(f[j] - mean);
      best = std::max(best, osc / static_cast<double>(hi - lo));
    }
    if (parts > n / 2) break;
  }
  return best;
}

// Running state for time integrals and the L1 bound.
struct NormHistory {
  bool started = false;
  double t = 0;
  double sup_ux = 0, sup_thetax = 0, sup_omega = 0;
  double bkm_ux = 0, bkm_thetax = 0, bkm_omega = 0;
  double omega0_l1 = 0;
  double theta0_sup = 0;
  double t0 = 0;
};

// Fill the sup norms, BKM integrals (trapezoid in time), L1 bound margin and
// velocity norms of `rec`, advancing `hist`.
inline void norms_and_bounds(const FieldState& s, const VelocityField& v, NormHistory& hist, DiagnosticsRecord& rec,
                             double p = 4) {
  const double h = s.grid.spacing();
  const auto thetax = spectral_derivative(s.theta, s.grid);
  rec.max_omega = norm_sup(s.omega);
  rec.max_thetax = norm_sup(thetax);
  rec.max_ux = norm_sup(v.ux);
  rec.l1_omega = norm_l1(s.omega, h);
  rec.u_l2 = norm_lp(v.u, h, 2);
  rec.u_lp = norm_lp(v.u, h, p);
  rec.u_bmo_proxy = bmo_proxy(v.u);
  if (!hist.started) {
    hist.started = true;
    hist.t0 = s.t;
    hist.omega0_l1 = rec.l1_omega;
    hist.theta0_sup = norm_sup(s.theta);
  } else {
    const double dt = s.t - hist.t;
    hist.bkm_ux += 0.5 * dt * (hist.sup_ux + rec.max_ux);
    hist.bkm_thetax += 0.5 * dt * (hist.sup_thetax + rec.max_thetax);
    hist.bkm_omega += 0.5 * dt * (hist.sup_omega + rec.max_omega);
  }
  hist.t = s.t;
  hist.sup_ux = rec.max_ux;
  hist.sup_thetax = rec.max_thetax;
  hist.sup_omega = rec.max_omega;
  rec.bkm_ux = hist.bkm_ux;
  rec.bkm_thetax = hist.bkm_thetax;
  rec.bkm_omega = hist.bkm_omega;
  rec.l1_bound_margin = hist.omega0_l1 + 2 * hist.theta0_sup * (s.t - hist.t0) - rec.l1_omega;
  double wmin = std::numeric_limits<double>::infinity(), tmin = wmin;
  for (std::size_t j = 0; j <= s.grid.N / 2; ++j) {
    wmin = std::min(wmin, s.omega[j]);
    tmin = std::min(tmin, thetax[j]);
  }
  rec.min_omega_half = wmin;
  rec.min_thetax_half = tmin;
}

// ---------------------------------------------------------------------------
// Log-line functionals

struct LogFunctionals {
  double mass = 0;
  double entropy = 0;  // of the mass-normalized density
  double F = 0;        // int xi rho
  double F_alt = 0;    // -int_0^inf Theta
  double G = 0;        // -(2/pi) int Omega Theta
  double lemma3_lhs = 0;
  double lemma3_rhs = 0;
  double lemma3_margin = 0;
  double shift = 0;  // left support edge subtracted before the Lemma-3 comparison
};

inline LogFunctionals functionals_log(const LogState& s, double sign_tol = 1e-8) {
  const auto& g = s.grid;
  const std::size_t M = g.M;
  detail::check_size(s.rho.size(), M);
  detail::check_size(s.Omega.size(), M);
  detail::check_size(s.Theta.size(), M);
  const double h = g.spacing();
  const double peak = norm_sup(s.rho);
  Samples rho(M);
  for (std::size_t i = 0; i < M; ++i) {
    require(s.rho[i] >= -sign_tol * std::max(peak, 1e-300), Errc::sign,
            "rho is negative at xi = " + std::to_string(g.node(i)));
    rho[i] = std::max(s.rho[i], 0.0);
  }
  LogFunctionals out;
  out.mass = detail::trapezoid(rho, h);
  require(out.mass > 0, Errc::degenerate, "rho has zero mass");
  double ent = 0, first = 0, sub = 0, G = 0;
  std::size_t left = M;
  for (std::size_t i = 0; i < M; ++i) {
    const double w = (i == 0 || i + 1 == M) ? 0.5 * h : h;
    const double r = rho[i] / out.mass;
    if (r > 0) ent -= w * r * std::log(r);
    first += w * g.node(i) * rho[i];
    G += w * s.Omega[i] * s.Theta[i];
    if (left == M && rho[i] > 1e-12 * peak) left = i;
  }
  out.entropy = ent;
  out.F = first;
  out.G = -2 * inv_pi * G;
  // -int_0^inf Theta: trapezoid over nodes with xi >= 0, plus the partial cell at 0.
  for (std::size_t i = 0; i + 1 < M; ++i) {
    const double a = g.node(i), b = g.node(i + 1);
    if (b <= 0) continue;
    if (a >= 0) {
      sub += 0.5 * h * (s.Theta[i] + s.Theta[i + 1]);
    } else {
      const double th0 = s.Theta[i] + (s.Theta[i + 1] - s.Theta[i]) * (-a) / h;
      sub += 0.5 * b * (th0 + s.Theta[i + 1]);
    }
  }
  out.F_alt = -sub;
  out.shift = left < M ? g.node(left > 0 ? left - 1 : 0) : 0.0;
  out.lemma3_lhs = first / out.mass - out.shift;
  out.lemma3_rhs = std::exp(out.entropy - 1);
  out.lemma3_margin = out.lemma3_lhs - out.lemma3_rhs;
  return out;
}

// ---------------------------------------------------------------------------
// Quadratic forms

namespace detail {
// Integral of the cubic through q[k-1..k+2] from node k to node k + a (0 <= a <= 1), in units of h.
inline double cubic_partial_weights(double a, int which) {
  const double a2 = a * a, a3 = a2 * a, a4 = a3 * a;
  switch (which) {
    case -1: return -(a4 / 4 - a3 + a2) / 6;
    case 0: return (a4 / 4 - 2 * a3 / 3 - a2 / 2 + 2 * a) / 2;
    case 1: return -(a4 / 4 - a3 / 3 - a2) / 2;
    case 2: return (a4 / 4 - a2 / 2) / 6;
  }
  return 0;
}

// int_{x_0}^{x} q for uniform samples q (spacing h, first node x0), using
// cubic-cell weights; `at(i)` supplies samples, including ghost indices.
template <class At>
double cubic_cumulative(At&& at, std::size_t n, double x0, double h, double x) {
  const double pos = (x - x0) / h;
  if (pos <= 0) return 0;
  const auto full = static_cast<std::size_t>(std::min(std::floor(pos), static_cast<double>(n - 1)));
  double acc = 0;
  for (std::size_t k = 0; k < full; ++k) {
    const auto i = static_cast<long>(k);
    acc += (-at(i - 1) + 13 * at(i) + 13 * at(i + 1) - at(i + 2)) / 24;
  }
  const double frac = pos - static_cast<double>(full);
  if (frac > 0 && full + 1 < n) {
    const auto i = static_cast<long>(full);
    for (int w = -1; w <= 2; ++w) acc += cubic_partial_weights(frac, w) * at(i + w);
  }
  return acc * h;
}
}  // namespace detail

// int_{-inf}^{xi} U_xi Omega with U = K * Omega, computed as (K * Omega_xi) Omega.
inline double quadform_line(std::span<const double> Omega, double xi, const LogGrid& g,
                            const LogConvolution* conv = nullptr, double edge_tol = 1e-8) {
  detail::check_size(Omega.size(), g.M);
  require(edge_fraction(Omega) <= edge_tol, Errc::truncation, "vorticity support reaches the log-grid boundary");
  const auto dOmega = periodic_derivative(Omega, g.period());
  const auto Ux = conv ? conv->apply(dOmega) : LogConvolution(g).apply(dOmega);
  const std::size_t M = g.M;
  auto at = [&](long i) {
    if (i < 0 || i >= static_cast<long>(M)) return 0.0;
    return Ux[static_cast<std::size_t>(i)] * Omega[static_cast<std::size_t>(i)];
  };
  return detail::cubic_cumulative(at, M, g.xi_min, g.spacing(), std::min(xi, g.xi_max));
}

// v = u cot(mu x) on n+1 uniform nodes of [0, L/2] from the half-line representation.
template <class OmegaFn>
Samples halfline_velocity_profile(OmegaFn&& omega, double L, std::size_t n, double tol = 1e-12) {
  Samples v(n + 1, 0.0);
  const double dx = 0.5 * L / static_cast<double>(n);
  v[0] = velocity_halfline_at_zero(omega, L, tol);
  for (std::size_t k = 1; k < n; ++k) v[k] = velocity_halfline_representation(omega, dx * static_cast<double>(k), L, tol);
  v[n] = 0;
  return v;
}

// int_a^{L/2} omega [u cot(mu x)]_x dx. v is even about 0 and L/2, which
// supplies the ghost values for the fourth-order differences.
template <class OmegaFn>
double quadform_periodic(OmegaFn&& omega, double a, double L, std::size_t n = 256, double tol = 1e-12) {
  require(L > 0, Errc::domain, "period must be positive");
  require(a >= 0 && a <= L / 2, Errc::domain, "split point must lie in [0, L/2]");
  require(n >= 8, Errc::parameter, "quadform_periodic needs at least 8 cells");
  if (a == L / 2) return 0;
  const auto v = halfline_velocity_profile(omega, L, n, tol);
  const double dx = 0.5 * L / static_cast<double>(n);
  const long nn = static_cast<long>(n);
  auto vv = [&](long k) {
    if (k < 0) k = -k;
    if (k > nn) k = 2 * nn - k;
    return v[static_cast<std::size_t>(k)];
  };
  Samples q(n + 1);
  for (long k = 0; k <= nn; ++k) {
    const double dv = (vv(k - 2) - 8 * vv(k - 1) + 8 * vv(k + 1) - vv(k + 2)) / (12 * dx);
    const double x = dx * static_cast<double>(k);
    const double w = (k == 0 || k == nn) ? 0.0 : omega(x);
    q[static_cast<std::size_t>(k)] = w * dv;
  }
  auto at = [&](long k) {
    if (k < 0) k = -k;
    if (k > nn) k = 2 * nn - k;
    return q[static_cast<std::size_t>(k)];
  };
  const double total = detail::cubic_cumulative(at, n + 1, 0.0, dx, L / 2);
  const double head = detail::cubic_cumulative(at, n + 1, 0.0, dx, a);
  return total - head;
}

// CKY analogue int_a^X omega [u/x]_x dx with u from the CKY law; the discrete
// law gives [u/x]_x = c omega / x at every node. Integrated panel by panel so a
// compactly supported omega cannot hide between the first quadrature nodes.
template <class OmegaFn>
double quadform_cky(OmegaFn&& omega, double a, double X = 1.0, double scale = 1.0, std::size_t panels = 64) {
  require(a > 0 && a <= X, Errc::domain, "split point must lie in (0, X]");
  if (a == X) return 0;
  auto f = [&](double x) {
    const double w = omega(x);
    return scale * w * w / x;
  };
  const double h = (X - a) / static_cast<double>(panels);
  double acc = 0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p), hi = p + 1 == panels ? X : lo + h;
    acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 12, 1e-14);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Margins from recorded histories

namespace detail {
// First and second derivatives of samples f at nonuniform times t (3-point).
inline void nonuniform_derivatives(std::span<const double> t, std::span<const double> f, Samples& d1, Samples& d2) {
  const std::size_t n = t.size();
  d1.assign(n, nan_value);
  d2.assign(n, nan_value);
  if (n < 3) return;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = t[i] - t[i - 1], h2 = t[i + 1] - t[i];
    d1[i] = -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] + h1 / (h2 * (h1 + h2)) * f[i + 1];
    d2[i] = 2 * (f[i - 1] / (h1 * (h1 + h2)) - f[i] / (h1 * h2) + f[i + 1] / (h2 * (h1 + h2)));
  }
  {
    const double h1 = t[1] - t[0], h2 = t[2] - t[1];
    d1[0] = -(2 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] - h1 / (h2 * (h1 + h2)) * f[2];
  }
  {
    const std::size_t m = n - 1;
    const double h2 = t[m] - t[m - 1], h1 = t[m - 1] - t[m - 2];
    d1[m] = h2 / (h1 * (h1 + h2)) * f[m - 2] - (h1 + h2) / (h1 * h2) * f[m - 1] + (2 * h2 + h1) / (h2 * (h1 + h2)) * f[m];
  }
}
}  // namespace detail

// Fill the derivative-based margins of a recorded history in place.
inline void finalize_margins(std::vector<DiagnosticsRecord>& recs, double c0) {
  const std::size_t n = recs.size();
  if (n < 3) return;
  Samples t(n), I(n), J(n), F(n), G(n), E(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = recs[i].t;
    I[i] = recs[i].I;
    J[i] = recs[i].J;
    F[i] = recs[i].F;
    G[i] = recs[i].G;
    E[i] = recs[i].entropy;
  }
  Samples dI, d2I, dJ, d2J, dF, d2F, dG, d2G, dE, d2E;
  detail::nonuniform_derivatives(t, I, dI, d2I);
  detail::nonuniform_derivatives(t, J, dJ, d2J);
  detail::nonuniform_derivatives(t, F, dF, d2F);
  detail::nonuniform_derivatives(t, G, dG, d2G);
  detail::nonuniform_derivatives(t, E, dE, d2E);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = recs[i];
    r.dIdt_minus_J = dI[i] - J[i];
    r.dJdt_minus_c0I2 = dJ[i] - c0 * I[i] * I[i];
    r.dFdt_minus_G = dF[i] - G[i];
    r.dGdt_minus_F2 = dG[i] - F[i] * F[i] * inv_pi;
    const double expo = std::min(std::exp(E[i] - 1) - E[i], 700.0);
    r.entropy_ddot_margin = d2E[i] - 2 * inv_pi * std::exp(expo);
  }
}

// ---------------------------------------------------------------------------
// Blow-up time from the reciprocal sup norm

struct BlowupEstimate {
  double T_star = nan_value;
  double fit_quality = nan_value;
  double slope = nan_value;
  std::size_t samples = 0;
};

inline BlowupEstimate blowup_time_estimate(std::span<const double> t, std::span<const double> max_omega,
                                           std::size_t window = 16) {
  require(t.size() == max_omega.size(), Errc::shape, "time and max_omega histories differ in length");
  window = std::min(window, t.size());
  require(window >= 8, Errc::unreliable_estimate, "blow-up fit needs at least 8 samples");
  const std::size_t start = t.size() - window;
  for (std::size_t i = start + 1; i < t.size(); ++i) {
    require(max_omega[i] > max_omega[i - 1] && t[i] > t[i - 1], Errc::unreliable_estimate,
            "max_omega is not strictly increasing in the fit window");
  }
  double st = 0, sy = 0;
  for (std::size_t i = start; i < t.size(); ++i) {
    require(max_omega[i] > 0, Errc::unreliable_estimate, "max_omega must be positive");
    st += t[i];
    sy += 1 / max_omega[i];
  }
  const double n = static_cast<double>(window);
  const double tm = st / n, ym = sy / n;
  double stt = 0, sty = 0, syy = 0;
  for (std::size_t i = start; i < t.size(); ++i) {
    const double dt = t[i] - tm, dy = 1 / max_omega[i] - ym;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  const double slope = sty / stt;
  require(slope < 0, Errc::unreliable_estimate, "reciprocal sup norm is not decreasing");
  const double icpt = ym - slope * tm;
  double ssr = 0;
  for (std::size_t i = start; i < t.size(); ++i) {
    const double r = 1 / max_omega[i] - (icpt + slope * t[i]);
    ssr += r * r;
  }
  BlowupEstimate e;
  e.slope = slope;
  e.T_star = -icpt / slope;
  e.fit_quality = syy > 0 ? 1 - ssr / syy : 1.0;
  e.samples = window;
  return e;
}

}  // namespace hlb
