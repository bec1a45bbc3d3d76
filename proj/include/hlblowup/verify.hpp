#pragma once

// Seeded verification suites: kernel lemmas, quadratic-form positivity on
// random admissible vorticities, and the differential inequalities along
// short simulated trajectories.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bounds.hpp"
#include "diagnostics.hpp"
#include "evolve.hpp"
#include "kernels.hpp"

namespace hlb {

using PropertyReport = KernelReport;

struct Bump {
  double amp, lo, hi;
  double operator()(double x) const { return amp * detail::bump_on(x, lo, hi); }
};

namespace detail {
// Composite Simpson with n (rounded up to even) panels.
template <class F>
double simpson(F&& f, double lo, double hi, std::size_t n) {
  n += n % 2;
  const double h = (hi - lo) / static_cast<double>(n);
  double acc = f(lo) + f(hi);
  for (std::size_t i = 1; i < n; ++i) acc += (i % 2 ? 4 : 2) * f(lo + h * static_cast<double>(i));
  return acc * h / 3;
}
}  // namespace detail

// Sum of bumps plus an optional A sin(2 mu x) term; nonnegative on (0, L/2).
struct BumpField {
  std::vector<Bump> bumps;
  double sine_amp = 0;
  double mu = 0.5;
  double operator()(double x) const {
    double v = sine_amp * std::sin(2 * mu * x);
    for (const auto& b : bumps) v += b(x);
    return v;
  }
};

inline BumpField random_line_field(std::mt19937_64& rng, double center_lo, double center_hi, double w_lo,
                                   double w_hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BumpField f;
  const int nb = 1 + static_cast<int>(u(rng) * 4);
  for (int i = 0; i < nb; ++i) {
    const double c = center_lo + (center_hi - center_lo) * u(rng);
    const double w = w_lo + (w_hi - w_lo) * u(rng);
    f.bumps.push_back({0.1 + 0.9 * u(rng), c - w, c + w});
  }
  return f;
}

inline BumpField random_halfperiod_field(std::mt19937_64& rng, double L) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double half = L / 2;
  BumpField f;
  f.mu = std::numbers::pi / L;
  const int nb = 1 + static_cast<int>(u(rng) * 3);
  for (int i = 0; i < nb; ++i) {
    const double c = half * (0.1 + 0.8 * u(rng));
    double w = half * (0.05 + 0.25 * u(rng));
    w = std::min({w, c, half - c});
    f.bumps.push_back({0.1 + 0.9 * u(rng), c - w, c + w});
  }
  if (u(rng) < 0.25) f.sine_amp = 0.5 * u(rng);
  return f;
}

struct QuadformPlan {
  std::size_t trials = 1000;
  std::uint64_t seed = 2024;
  double tolerance = 1e-6;  // relative to the squared L2 norm
  std::size_t log_nodes = 2048;
  double xi_half_width = 12;
  std::size_t half_cells = 256;
  double quad_tol = 1e-9;  // tanh-sinh termination for the half-line velocity
  double L = 2 * std::numbers::pi;
};

inline PropertyReport quadform_line_trials(const QuadformPlan& plan) {
  PropertyReport r;
  r.id = "quadform_line_nonnegative";
  r.description = "int_{-inf}^xi U_xi Omega >= -tol ||Omega||^2 for Omega >= 0 (HL line kernel)";
  r.tolerance = plan.tolerance;
  const auto g = make_log_grid(-plan.xi_half_width, plan.xi_half_width, plan.log_nodes);
  const LogConvolution conv(g);
  std::mt19937_64 rng(plan.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double span = plan.xi_half_width;
  Samples w(g.M);
  for (std::size_t k = 0; k < plan.trials; ++k) {
    const auto f = random_line_field(rng, -0.5 * span, 0.5 * span, 0.5, 0.25 * span);
    for (std::size_t i = 0; i < g.M; ++i) w[i] = f(g.node(i));
    const double xi = -0.8 * span + 1.6 * span * u(rng);
    double n2 = 0;
    for (double v : w) n2 += v * v;
    n2 *= g.spacing();
    const double val = quadform_line(w, xi, g, &conv);
    r.observe(val / n2, xi, static_cast<double>(k));
  }
  r.finish();
  return r;
}

inline PropertyReport quadform_periodic_trials(const QuadformPlan& plan) {
  PropertyReport r;
  r.id = "quadform_periodic_nonnegative";
  r.description = "int_a^{L/2} omega [u cot(mu x)]_x >= -tol ||omega||^2 for omega >= 0 on [0, L/2]";
  r.tolerance = plan.tolerance;
  std::mt19937_64 rng(plan.seed + 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < plan.trials; ++k) {
    const auto f = random_halfperiod_field(rng, plan.L);
    const double a = 0.5 * plan.L * u(rng);
    const double n2 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double x) { return f(x) * f(x); }, 0.0, plan.L / 2, 10, 1e-12);
    const double val = quadform_periodic(f, a, plan.L, plan.half_cells, plan.quad_tol);
    r.observe(val / n2, a, static_cast<double>(k));
  }
  r.finish();
  return r;
}

inline PropertyReport quadform_cky_trials(const QuadformPlan& plan) {
  PropertyReport r;
  r.id = "quadform_cky_matches_closed_form";
  r.description = "int_a^1 omega [u/x]_x equals int_a^1 omega^2/x >= 0";
  r.tolerance = 1e-10;
  std::mt19937_64 rng(plan.seed + 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = std::max<std::size_t>(10, plan.trials / 10);
  for (std::size_t k = 0; k < n; ++k) {
    const auto f = random_line_field(rng, 0.3, 0.7, 0.05, 0.25);
    const double a = 0.05 + 0.9 * u(rng);
    const double val = quadform_cky(f, a, 1.0);
    const double ref = detail::simpson([&](double x) { return f(x) * f(x) / x; }, a, 1.0, 400000);
    const double scale = std::max(1.0, std::abs(ref));
    r.observe(std::min(val, r.tolerance - std::abs(val - ref) / scale), a, static_cast<double>(k));
  }
  r.finish();
  return r;
}

inline std::vector<PropertyReport> verify_quadforms(const QuadformPlan& plan) {
  return {quadform_line_trials(plan), quadform_periodic_trials(plan), quadform_cky_trials(plan)};
}

// ---------------------------------------------------------------------------
// Differential inequalities along short runs and comparison-ODE checks

struct InequalityPlan {
  std::size_t N = 256;
  double t_end = 3;
  std::size_t log_nodes = 1024;
  double tolerance = 1e-3;
  std::uint64_t seed = 7;
  std::size_t ode_trials = 100;
};

inline std::vector<PropertyReport> verify_inequalities(const InequalityPlan& plan) {
  std::vector<PropertyReport> out;
  auto mk = [&](std::string id, std::string desc, double tol) {
    PropertyReport r;
    r.id = std::move(id);
    r.description = std::move(desc);
    r.tolerance = tol;
    return r;
  };

  // Periodic HL chain along a paper-basic run.
  {
    const auto g = make_periodic_grid(2 * std::numbers::pi, plan.N);
    const double c0 = 2 / (g.L * g.L);
    ModelSpec m;
    StepControl c;
    RunOptions o;
    o.t_end = plan.t_end;
    const auto tr = run(m, preset_initial_data("paper-basic", g), c, o);
    auto r1 = mk("dIdt_ge_J", "dI/dt - J >= -tol while resolved", plan.tolerance);
    auto r2 = mk("dJdt_ge_c0_I2", "dJ/dt - c0 I^2 >= -tol max(1, I^2) while resolved", plan.tolerance);
    auto r3 = mk("I_above_gengron_envelope", "I(t) >= envelope(t) - 1% I(t) while resolved", 0.0);
    EnvelopeOptions eo;
    eo.horizon = tr.records.back().t + 1e-9;
    const auto env = gengron_envelope(tr.records.front().I, tr.records.front().J, c0, eo);
    for (const auto& rec : tr.records) {
      if (rec.tail_fraction >= c.tail_threshold) continue;
      r1.observe(rec.dIdt_minus_J, rec.t);
      r2.observe(rec.dJdt_minus_c0I2 / std::max(1.0, rec.I * rec.I), rec.t);
      if (rec.t <= env.t.back()) r3.observe(rec.I - env.value_at(rec.t) + 0.01 * rec.I, rec.t);
    }
    for (auto* r : {&r1, &r2, &r3}) {
      r->finish();
      out.push_back(*r);
    }
  }

  // Log-line CKY and HL: entropy and F/G chains.
  for (Model model : {Model::CKY, Model::HL}) {
    const auto g = make_log_grid(-6, 18, plan.log_nodes);
    ModelSpec m;
    m.model = model;
    m.domain = Domain::log_line;
    StepControl c;
    c.dt_max = 1e-3;
    RunOptions o;
    o.t_end = 10;
    const auto tr = run_log(m, preset_log_initial_data("log-bump", g), c, o);
    const std::string tag = model == Model::CKY ? "cky" : "hl";
    auto rf = mk(tag + "_dFdt_ge_G", "dF/dt - G >= -eps while resolved", plan.tolerance);
    auto rg = mk(tag + "_dGdt_ge_F2_over_pi", "dG/dt - F^2/pi >= -eps while resolved", plan.tolerance);
    auto rl = mk(tag + "_lemma3", "int (xi - shift) rho >= exp(entropy - 1)", 1e-8);
    const std::size_t n = tr.records.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto& rec = tr.records[i];
      if (rec.tail_fraction >= c.tail_threshold) break;
      rf.observe(rec.dFdt_minus_G / std::max(1.0, std::abs(rec.G)), rec.t);
      rg.observe(rec.dGdt_minus_F2 / std::max(1.0, rec.F * rec.F * inv_pi), rec.t);
      rl.observe(rec.lemma3_margin, rec.t);
    }
    for (auto* r : {&rf, &rg, &rl}) {
      r->finish();
      out.push_back(*r);
    }
    if (model == Model::CKY) {
      auto re = mk("cky_entropy_nondecreasing_convex",
                   "entropy increments and slope increments (divided second differences) >= -1e-6", 1e-6);
      auto rd = mk("cky_entropy_ddot_bound", "d2I/dt2 - (2/pi) exp(e^{I-1} - I) >= -tol", plan.tolerance);
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const auto &a = tr.records[i - 1], &b = tr.records[i], &d = tr.records[i + 1];
        if (d.tail_fraction >= c.tail_threshold) break;
        re.observe(b.entropy - a.entropy, b.t);
        re.observe((d.entropy - b.entropy) / (d.t - b.t) - (b.entropy - a.entropy) / (b.t - a.t), b.t);
        rd.observe(b.entropy_ddot_margin, b.t);
      }
      for (auto* r : {&re, &rd}) {
        r->finish();
        out.push_back(*r);
      }
    }
  }

  // Comparison ODEs.
  {
    auto rb = mk("gengron_bound_dominates", "numerical blow-up time <= closed-form bound", 0.0);
    std::mt19937_64 rng(plan.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t k = 0; k < plan.ode_trials; ++k) {
      const double I0 = 0.1 + 4.9 * u(rng), c0 = 0.01 + 2 * u(rng);
      EnvelopeOptions eo;
      eo.horizon = 1e3;
      const auto e = gengron_envelope(I0, 0.0, c0, eo);
      rb.observe(e.blew_up ? e.T_star_upper - e.T_star : -1.0, I0, c0);
    }
    rb.finish();
    out.push_back(rb);

    auto rc = mk("gengron_closed_form", "(h')^{3/2} - alpha^{3/2} - (3/2) c0 h^2 = 0 along the equality solution", 1e-8);
    EnvelopeOptions eo;
    eo.horizon = 10;
    eo.cap = 50;
    const auto e = gengron_envelope(1.0, 0.0, 1.0, eo);
    const auto res = gengron_closed_form_residual(e, 1.0);
    for (std::size_t i = 0; i < res.size(); ++i) {
      const double scale = std::max(1.0, std::pow(e.y[i], 3));
      rc.observe(-std::abs(res[i]) / scale, e.t[i]);
    }
    rc.finish();
    out.push_back(rc);
  }
  return out;
}

}  // namespace hlb
