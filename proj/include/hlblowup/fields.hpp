#pragma once

// Field states, model selection, initial data, the odd/even symmetry class
// and the change of variables x = e^-xi.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "error.hpp"
#include "grid.hpp"

namespace hlb {

enum class Model { Euler2D, CLM, DeGregorio, OSW, CCF, HL, CKY };
enum class Domain { periodic, log_line };
enum class BiotSavartMethod { spectral, direct, mollified };

inline std::string to_string(Model m) {
  switch (m) {
    case Model::Euler2D: return "euler2d";
    case Model::CLM: return "clm";
    case Model::DeGregorio: return "degregorio";
    case Model::OSW: return "osw";
    case Model::CCF: return "ccf";
    case Model::HL: return "hl";
    case Model::CKY: return "cky";
  }
  return "?";
}
inline std::string to_string(Domain d) { return d == Domain::periodic ? "periodic" : "log-line"; }
inline std::string to_string(BiotSavartMethod m) {
  switch (m) {
    case BiotSavartMethod::spectral: return "spectral";
    case BiotSavartMethod::direct: return "direct";
    case BiotSavartMethod::mollified: return "mollified";
  }
  return "?";
}

namespace detail {
inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}
}  // namespace detail

inline Model parse_model(const std::string& name) {
  const auto s = detail::lower(name);
  if (s == "euler2d" || s == "euler") return Model::Euler2D;
  if (s == "clm") return Model::CLM;
  if (s == "degregorio" || s == "de-gregorio") return Model::DeGregorio;
  if (s == "osw") return Model::OSW;
  if (s == "ccf") return Model::CCF;
  if (s == "hl") return Model::HL;
  if (s == "cky") return Model::CKY;
  throw Error(Errc::spec, "unknown model '" + name + "'");
}
inline Domain parse_domain(const std::string& name) {
  const auto s = detail::lower(name);
  if (s == "periodic") return Domain::periodic;
  if (s == "log-line" || s == "log_line" || s == "log") return Domain::log_line;
  throw Error(Errc::spec, "unknown domain '" + name + "'");
}
inline BiotSavartMethod parse_method(const std::string& name) {
  const auto s = detail::lower(name);
  if (s == "spectral") return BiotSavartMethod::spectral;
  if (s == "direct" || s == "direct-quadrature") return BiotSavartMethod::direct;
  if (s == "mollified") return BiotSavartMethod::mollified;
  throw Error(Errc::spec, "unknown Biot-Savart method '" + name + "'");
}

struct ModelSpec {
  Model model = Model::HL;
  Domain domain = Domain::periodic;
  BiotSavartMethod method = BiotSavartMethod::spectral;
  double osw_a = 1.0;
  double a_layer = 0.0;    // mollification length, used by the mollified method
  double cky_scale = 1.0;  // constant in u = -c x int_x^inf omega/y

  void validate() const {
    require(std::isfinite(osw_a), Errc::spec, "OSW parameter a must be finite");
    if (method == BiotSavartMethod::mollified)
      require(a_layer > 0 && std::isfinite(a_layer), Errc::parameter, "mollified law needs a_layer > 0");
    require(cky_scale > 0 && std::isfinite(cky_scale), Errc::spec, "cky_scale must be positive");
    if (model == Model::CKY)
      require(domain == Domain::log_line, Errc::spec, "CKY is evolved on the log line only");
    if (domain == Domain::log_line)
      require(model == Model::HL || model == Model::CKY, Errc::spec,
              "log-line domain supports only the HL and CKY models");
  }
};

struct FieldState {
  double t = 0;
  PeriodicGrid grid;
  Samples omega;
  Samples theta;
};

struct LogState {
  double t = 0;
  LogGrid grid;
  Samples Omega;
  Samples Theta;
  Samples rho;
  double mass = 0;
};

using Params = std::map<std::string, double>;

namespace detail {
inline double param(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

// exp(1 - 1/(1 - r^2)) on |r| < 1; peak value 1 at r = 0.
inline double bump(double r) {
  if (std::abs(r) >= 1) return 0;
  return std::exp(1 - 1 / (1 - r * r));
}

// Bump supported on (a, b).
inline double bump_on(double x, double a, double b) {
  const double c = 0.5 * (a + b), w = 0.5 * (b - a);
  return bump((x - c) / w);
}

// int_a^x of bump_on(., a, b)
inline double bump_integral(double x, double a, double b) {
  if (x <= a) return 0;
  const double hi = std::min(x, b);
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [&](double y) { return bump_on(y, a, b); }, a, hi, 8, 1e-15);
}

inline double trapezoid(std::span<const double> f, double h) {
  if (f.size() < 2) return 0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}
}  // namespace detail

inline FieldState enforce_symmetry(const FieldState& in) {
  const std::size_t N = in.grid.N;
  detail::check_size(in.omega.size(), N);
  detail::check_size(in.theta.size(), N);
  FieldState out = in;
  for (std::size_t j = 1; j < N / 2; ++j) {
    const double wo = 0.5 * (in.omega[j] - in.omega[N - j]);
    out.omega[j] = wo;
    out.omega[N - j] = -wo;
    const double te = 0.5 * (in.theta[j] + in.theta[N - j]);
    out.theta[j] = te;
    out.theta[N - j] = te;
  }
  out.omega[0] = 0;
  out.omega[N / 2] = 0;
  const double t0 = in.theta[0];
  for (auto& v : out.theta) v -= t0;
  out.theta[0] = 0;
  return out;
}

// Largest deviation from omega(L-x) = -omega(x), theta(L-x) = theta(x), theta(0) = 0.
inline double symmetry_defect(const FieldState& s) {
  const std::size_t N = s.grid.N;
  double d = std::max(std::abs(s.omega[0]), std::abs(s.theta[0]));
  for (std::size_t j = 1; j < N; ++j) {
    d = std::max(d, std::abs(s.omega[j] + s.omega[N - j]));
    d = std::max(d, std::abs(s.theta[j] - s.theta[N - j]));
  }
  return d;
}

inline FieldState preset_initial_data(const std::string& name, const PeriodicGrid& grid, const Params& params = {}) {
  const std::size_t N = grid.N;
  const double L = grid.L, mu = grid.mu();
  FieldState s;
  s.grid = grid;
  s.omega.assign(N, 0.0);
  s.theta.assign(N, 0.0);
  if (name == "paper-basic") {
    const double A = detail::param(params, "A", 1.0), B = detail::param(params, "B", 1.0);
    require(A >= 0 && B >= 0, Errc::invalid_data, "paper-basic needs A >= 0 and B >= 0");
    for (std::size_t j = 0; j < N; ++j) {
      const double x = grid.node(j);
      s.omega[j] = A * std::sin(2 * mu * x);
      const double sn = std::sin(mu * x);
      s.theta[j] = B * sn * sn;
    }
  } else if (name == "quarter-support") {
    const double A = detail::param(params, "A", 1.0), B = detail::param(params, "B", 1.0);
    require(A >= 0 && B >= 0, Errc::invalid_data, "quarter-support needs A >= 0 and B >= 0");
    const double a = 0.0, b = L / 4;
    const double total = detail::bump_integral(b, a, b);
    for (std::size_t j = 0; j < N; ++j) {
      const double x = grid.node(j);
      const double xr = std::min(x, L - x);  // distance to 0 along the circle
      const double sign = x <= L / 2 ? 1.0 : -1.0;
      s.omega[j] = sign * A * detail::bump_on(xr, a, b);
      s.theta[j] = B * detail::bump_integral(xr, a, b) / total;
    }
  } else if (name == "custom-modes") {
    std::vector<double> a, b;
    for (int n = 1;; ++n) {
      const auto an = params.find("a" + std::to_string(n));
      const auto bn = params.find("b" + std::to_string(n));
      if (an == params.end() && bn == params.end()) break;
      a.push_back(an == params.end() ? 0.0 : an->second);
      b.push_back(bn == params.end() ? 0.0 : bn->second);
    }
    require(!a.empty(), Errc::invalid_data, "custom-modes needs at least one of a1, b1");
    double wmax = 0, tmax = 0, wmin = 0, tmin = 0;
    for (std::size_t j = 0; j < N; ++j) {
      const double x = grid.node(j);
      double w = 0, th = 0, thx = 0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double n = static_cast<double>(k + 1);
        w += a[k] * std::sin(2 * n * mu * x);
        const double sn = std::sin(n * mu * x);
        th += b[k] * sn * sn;
        thx += b[k] * n * mu * std::sin(2 * n * mu * x);
      }
      s.omega[j] = w;
      s.theta[j] = th;
      if (j <= N / 2) {
        wmax = std::max(wmax, std::abs(w));
        tmax = std::max(tmax, std::abs(thx));
        wmin = std::min(wmin, w);
        tmin = std::min(tmin, thx);
      }
    }
    require(wmin >= -1e-12 * std::max(1.0, wmax) && tmin >= -1e-12 * std::max(1.0, tmax), Errc::invalid_data,
            "custom-modes coefficients break omega >= 0, theta_x >= 0 on [0, L/2]");
  } else {
    throw Error(Errc::unknown_preset, "unknown preset '" + name + "'");
  }
  return s;
}

// Recompute Theta = -int_xi^inf rho and the mass from rho (trapezoid).
inline void refresh_theta(LogState& s) {
  const std::size_t M = s.grid.M;
  const double h = s.grid.spacing();
  s.Theta.assign(M, 0.0);
  double acc = 0;
  for (std::size_t i = M - 1; i-- > 0;) {
    acc += 0.5 * h * (s.rho[i] + s.rho[i + 1]);
    s.Theta[i] = -acc;
  }
  s.mass = acc;
}

// Log-line initial data: rho a bump of unit (or given) mass on (r0, r1),
// Omega = A times a bump on (w0, w1).
inline LogState preset_log_initial_data(const std::string& name, const LogGrid& grid, const Params& params = {}) {
  require(name == "log-bump", Errc::unknown_preset, "unknown log-line preset '" + name + "'");
  const double r0 = detail::param(params, "rho_lo", 0.5), r1 = detail::param(params, "rho_hi", 2.5);
  const double w0 = detail::param(params, "omega_lo", 0.5), w1 = detail::param(params, "omega_hi", 3.0);
  const double A = detail::param(params, "A", 1.0), mass = detail::param(params, "mass", 1.0);
  require(A >= 0 && mass > 0, Errc::invalid_data, "log-bump needs A >= 0 and mass > 0");
  require(r0 < r1 && w0 < w1, Errc::invalid_data, "log-bump intervals must be nonempty");
  require(r0 > grid.xi_min && r1 < grid.xi_max && w0 > grid.xi_min && w1 < grid.xi_max, Errc::domain,
          "log-bump support must lie inside the log grid");
  const double total = detail::bump_integral(r1, r0, r1);
  LogState s;
  s.grid = grid;
  s.Omega.resize(grid.M);
  s.rho.resize(grid.M);
  for (std::size_t i = 0; i < grid.M; ++i) {
    const double xi = grid.node(i);
    s.Omega[i] = A * detail::bump_on(xi, w0, w1);
    s.rho[i] = mass * detail::bump_on(xi, r0, r1) / total;
  }
  refresh_theta(s);
  return s;
}

// Sample omega, theta and x theta_x at x = e^-xi. The callables describe the
// field on (0, L/2] with theta(0) = 0.
template <class Omega, class Theta, class ThetaX>
LogState to_log_coordinates(Omega&& omega, Theta&& theta, ThetaX&& theta_x, double x_max, const LogGrid& g) {
  require(std::exp(-g.xi_min) <= x_max * (1 + 1e-14), Errc::domain,
          "log grid reaches x = e^-xi_min beyond the half period");
  LogState s;
  s.grid = g;
  s.Omega.resize(g.M);
  s.Theta.resize(g.M);
  s.rho.resize(g.M);
  for (std::size_t i = 0; i < g.M; ++i) {
    const double x = std::exp(-g.node(i));
    s.Omega[i] = omega(x);
    s.Theta[i] = -theta(x);
    s.rho[i] = x * theta_x(x);
  }
  s.mass = detail::trapezoid(s.rho, g.spacing());
  return s;
}

inline LogState to_log_coordinates(const FieldState& st, const LogGrid& g) {
  require(std::abs(st.theta[0]) <= 1e-12 * std::max(1.0, *std::max_element(st.theta.begin(), st.theta.end())),
          Errc::normalization, "theta(0) must be 0");
  TrigInterpolant w(st.omega, st.grid.L), th(st.theta, st.grid.L);
  auto s = to_log_coordinates([&](double x) { return w(x); }, [&](double x) { return th(x); },
                              [&](double x) { return th.derivative(x); }, st.grid.L / 2, g);
  s.t = st.t;
  return s;
}

// Inverse map: omega(x), theta(x) at the given points from cubic splines in xi.
// Points with xi > xi_max use the right-tail limits (0 for both fields).
struct PhysicalSamples {
  Samples omega, theta;
};

inline PhysicalSamples from_log_coordinates(const LogState& s, std::span<const double> x) {
  using boost::math::interpolators::cardinal_cubic_b_spline;
  const auto& g = s.grid;
  const double h = g.spacing();
  cardinal_cubic_b_spline<double> W(s.Omega.data(), s.Omega.size(), g.xi_min, h);
  cardinal_cubic_b_spline<double> T(s.Theta.data(), s.Theta.size(), g.xi_min, h);
  PhysicalSamples out;
  out.omega.resize(x.size());
  out.theta.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0, Errc::domain, "inverse log map needs x > 0");
    const double xi = -std::log(x[i]);
    require(xi >= g.xi_min - 1e-12, Errc::domain, "point lies left of the log grid");
    if (xi > g.xi_max) {
      out.omega[i] = 0;
      out.theta[i] = 0;
      continue;
    }
    const double q = std::clamp(xi, g.xi_min, g.xi_max);
    out.omega[i] = W(q);
    out.theta[i] = -T(q);
  }
  return out;
}

}  // namespace hlb
