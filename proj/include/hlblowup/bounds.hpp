#pragma once

// Comparison ODEs: equality cases of the I/J chain (y'' = c0 y^2 with the
// running integral h = int y^2), of the entropy inequality and of the F/G system.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "error.hpp"
#include "grid.hpp"

namespace hlb {

struct EnvelopeOptions {
  double horizon = 10;
  double cap = 1e3;  // blow-up proxy threshold on y
  double rtol = 1e-12;
  double atol = 1e-14;
  double max_step = 0;  // 0: unlimited
};

struct Envelope {
  Samples t, y, dy, h;  // h = int_0^t y^2
  bool blew_up = false;
  double T_cross = std::numeric_limits<double>::infinity();  // first time y reaches the cap
  double T_star = std::numeric_limits<double>::infinity();   // extrapolated singular time
  double T_star_upper = std::numeric_limits<double>::quiet_NaN();
  double t0_opt = std::numeric_limits<double>::quiet_NaN();
  std::string note;

  // Cubic Hermite interpolation of y between accepted steps.
  double value_at(double tq) const {
    require(!t.empty(), Errc::parameter, "empty envelope");
    if (tq <= t.front()) return y.front();
    require(tq <= t.back(), Errc::domain, "time beyond the integrated envelope");
    const auto it = std::upper_bound(t.begin(), t.end(), tq);
    const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
    if (i + 1 >= t.size()) return y.back();
    const double h0 = t[i + 1] - t[i], s = (tq - t[i]) / h0;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return h00 * y[i] + h10 * h0 * dy[i] + h01 * y[i + 1] + h11 * h0 * dy[i + 1];
  }
};

namespace detail {

using Ode3 = std::array<double, 3>;

// Integrate y'' = f(y) (with h' = y^2) until the horizon, the cap, or step underflow.
template <class Force>
Envelope integrate_second_order(Force&& f, double y0, double v0, const EnvelopeOptions& opt) {
  namespace odeint = boost::numeric::odeint;
  require(opt.horizon > 0, Errc::parameter, "horizon must be positive");
  require(opt.cap > std::abs(y0), Errc::parameter, "cap must exceed |y0|");
  auto sys = [&](const Ode3& x, Ode3& dxdt, double) {
    dxdt[0] = x[1];
    dxdt[1] = f(x[0]);
    dxdt[2] = x[0] * x[0];
  };
  using stepper_t = odeint::runge_kutta_dopri5<Ode3>;
  auto stepper = opt.max_step > 0 ? odeint::make_dense_output(opt.atol, opt.rtol, opt.max_step, stepper_t())
                                  : odeint::make_dense_output(opt.atol, opt.rtol, stepper_t());
  Envelope e;
  Ode3 x{y0, v0, 0.0};
  const double dt0 = std::min(1e-3, opt.horizon * 1e-3);
  stepper.initialize(x, 0.0, dt0);
  auto push = [&](double t, const Ode3& s) {
    e.t.push_back(t);
    e.y.push_back(s[0]);
    e.dy.push_back(s[1]);
    e.h.push_back(s[2]);
  };
  push(0.0, x);
  auto extrapolate = [&](double t, const Ode3& s) {
    // q = y/y' has q -> 0 linearly at the singularity: T = t - q/q'.
    const double y = s[0], v = s[1];
    if (v <= 0) return std::numeric_limits<double>::infinity();
    const double q = y / v;
    const double dq = 1 - y * f(y) / (v * v);
    if (dq >= 0) return t;
    return t - q / dq;
  };
  while (true) {
    const double t_old = stepper.current_time();
    if (stepper.current_time_step() < 1e-15 * std::max(1.0, t_old)) {
      // The solution outruns any representable step: treat as blow-up here.
      e.blew_up = true;
      e.T_cross = e.T_star = t_old;
      e.note = "step size underflow";
      break;
    }
    const auto span = stepper.do_step(sys);
    const double t_new = span.second;
    const Ode3 xn = stepper.current_state();
    if (!std::isfinite(xn[0]) || !std::isfinite(xn[1])) {
      e.blew_up = true;
      e.T_cross = e.T_star = t_old;
      e.note = "non-finite state";
      break;
    }
    if (std::abs(xn[0]) >= opt.cap) {
      double lo = span.first, hi = t_new;
      Ode3 mid{};
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double m = 0.5 * (lo + hi);
        stepper.calc_state(m, mid);
        (std::abs(mid[0]) >= opt.cap ? hi : lo) = m;
      }
      stepper.calc_state(hi, mid);
      if (hi <= opt.horizon) {
        push(hi, mid);
        e.blew_up = true;
        e.T_cross = hi;
        e.T_star = extrapolate(hi, mid);
        break;
      }
    }
    if (t_new >= opt.horizon) {
      Ode3 xe{};
      stepper.calc_state(opt.horizon, xe);
      push(opt.horizon, xe);
      break;
    }
    push(t_new, xn);
  }
  return e;
}

inline double golden_section_min(const auto& f, double a, double b, double tol = 1e-12) {
  const double r = (std::sqrt(5.0) - 1) / 2;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

// Blow-up time of h from the lower bound h(t) >= ((alpha t0)^(-1/3) - (1/3)(3c0/2)^(2/3)(t - t0))^-3.
inline double gengron_closed_form_bound(double alpha, double c0, double t0) {
  require(alpha > 0 && c0 > 0 && t0 > 0, Errc::parameter, "bound needs alpha, c0, t0 > 0");
  return t0 + 3 * std::cbrt(1 / (alpha * t0)) * std::pow(1.5 * c0, -2.0 / 3.0);
}

// Equality case I' = J0 + c0 int_0^t I^2, i.e. I'' = c0 I^2, I(0) = I0, I'(0) = J0.
inline Envelope gengron_envelope(double I0, double J0, double c0, const EnvelopeOptions& opt = {}) {
  require(I0 > 0, Errc::inapplicable, "the comparison argument needs I(0) > 0");
  require(J0 >= 0, Errc::parameter, "J(0) must be nonnegative");
  require(c0 > 0, Errc::parameter, "c0 must be positive");
  auto e = detail::integrate_second_order([c0](double y) { return c0 * y * y; }, I0, J0, opt);
  const double alpha = I0 * I0;
  const double hi = std::max(opt.horizon, 10.0);
  e.t0_opt = detail::golden_section_min([&](double t0) { return gengron_closed_form_bound(alpha, c0, t0); },
                                        1e-12 * hi, hi);
  e.T_star_upper = gengron_closed_form_bound(alpha, c0, e.t0_opt);
  return e;
}

// (h')^{3/2} - alpha^{3/2} - (3/2) c0 h^2 along an envelope started with J0 = 0.
inline Samples gengron_closed_form_residual(const Envelope& e, double c0) {
  Samples r(e.t.size());
  const double alpha = e.y.front() * e.y.front();
  for (std::size_t i = 0; i < e.t.size(); ++i) {
    const double hp = e.y[i] * e.y[i];
    r[i] = std::pow(hp, 1.5) - std::pow(alpha, 1.5) - 1.5 * c0 * e.h[i] * e.h[i];
  }
  return r;
}

// Equality case of I'' >= (2/pi) exp(e^{I-1} - I).
inline Envelope entropy_envelope(double I0, double Idot0, const EnvelopeOptions& opt = {}) {
  require(std::isfinite(I0) && std::isfinite(Idot0), Errc::parameter, "initial values must be finite");
  require(Idot0 >= 0, Errc::parameter, "initial entropy rate must be nonnegative");
  auto force = [](double y) {
    const double expo = std::min(std::exp(std::min(y - 1, 700.0)) - y, 700.0);
    return 2 * std::numbers::inv_pi * std::exp(expo);
  };
  return detail::integrate_second_order(force, I0, Idot0, opt);
}

// Equality case F' = G, G' = F^2/pi.
inline Envelope fg_envelope(double F0, double G0, const EnvelopeOptions& opt = {}) {
  require(F0 >= 0, Errc::inapplicable, "the F/G argument needs F(0) >= 0");
  require(G0 >= 0, Errc::parameter, "G(0) must be nonnegative");
  if (F0 == 0 && G0 == 0) {
    Envelope e;
    e.t = {0.0, opt.horizon};
    e.y = {0.0, 0.0};
    e.dy = {0.0, 0.0};
    e.h = {0.0, 0.0};
    e.note = "equilibrium";
    return e;
  }
  return detail::integrate_second_order([](double y) { return y * y * std::numbers::inv_pi; }, F0, G0, opt);
}

}  // namespace hlb
