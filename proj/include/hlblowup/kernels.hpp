#pragma once

// Closed-form Biot-Savart kernels and numerical checks of their sign and
// monotonicity properties.
//
//   l(s)     = log|(s+1)/(s-1)|
//   M(s)     = l(s)/s,  M_sym = (1/s + s) l / 2,  M_a = (1/s - s) l / 2
//   K(xi)    = M(e^-xi)/pi              (line kernel in log coordinates)
//   K(x,y)   = s l(s),  s = tan(mu y)/tan(mu x)   (periodic kernel)
//   G        = dK/dx,   T(x,y) = cot(mu y) G(x,y) + cot(mu x) G(y,x)

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"

namespace hlb {

inline constexpr double inv_pi = std::numbers::inv_pi;

// l(s) for s >= 0, s != 1.
inline double log_ratio(double s) {
  if (s < 1) return std::log1p(2 * s / (1 - s));
  return std::log1p(2 / (s - 1));
}

// l(s) given s and an accurately computed s - 1.
inline double log_ratio(double s, double s_minus_1) {
  if (std::abs(s_minus_1) > 0.25) return log_ratio(s);
  return std::log(s + 1) - std::log(std::abs(s_minus_1));
}

// l(e^-xi) = log coth(|xi|/2), accurate for every xi != 0.
inline double log_ratio_xi(double xi) {
  const double a = std::abs(xi);
  const double t = std::exp(-a);
  if (t < 0.5) return std::log1p(t) - std::log1p(-t);
  return std::log1p(t) - std::log(-std::expm1(-a));
}

struct MValues {
  double M, M_sym, M_a;
};

inline MValues eval_M(double s) {
  require(std::isfinite(s) && s > 0, Errc::domain, "M(s) needs s > 0");
  require(s != 1, Errc::singular_point, "M(s) is singular at s = 1");
  const double l = log_ratio(s);
  MValues v;
  v.M = l / s;
  if (s < 1) {
    v.M_a = 0.5 * (1 - s * s) * v.M;
  } else {
    v.M_a = 0.5 * (1 / s - s) * l;
  }
  v.M_sym = v.M - v.M_a;
  return v;
}

namespace detail {
// sum_{n>=1} t^{2n} * 4n / (4n^2 - 1), accurate for small t.
inline double stretched_tail_series(double t) {
  const double t2 = t * t;
  double p = t2, acc = 0;
  for (int n = 1; n < 60; ++n) {
    const double term = p * 4.0 * n / (4.0 * n * n - 1.0);
    acc += term;
    if (term < 1e-18 * acc) break;
    p *= t2;
  }
  return acc;
}
// 2 sum_{n>=1} t^{2n} / (2n+1)
inline double M_minus_two_series(double t) {
  const double t2 = t * t;
  double p = t2, acc = 0;
  for (int n = 1; n < 60; ++n) {
    const double term = 2 * p / (2.0 * n + 1.0);
    acc += term;
    if (term < 1e-18 * acc) break;
    p *= t2;
  }
  return acc;
}
}  // namespace detail

// dM/ds.
inline double eval_M_prime(double s) {
  require(s > 0 && s != 1, Errc::domain, "M'(s) needs s > 0, s != 1");
  if (s < 0.1) {
    double acc = 0, p = s;
    for (int n = 1; n < 40; ++n) {
      acc += 4.0 * n * p / (2.0 * n + 1.0);
      p *= s * s;
    }
    return acc;
  }
  if (s > 10) {
    const double r = 1 / s;
    return -2 * eval_M(r).M * r * r * r - eval_M_prime(r) * r * r * r * r;
  }
  const double l = log_ratio(s);
  return -l / (s * s) + 2 / (s * (1 - s * s));
}

// dM_a/ds.
inline double eval_Ma_prime(double s) {
  require(s > 0 && s != 1, Errc::domain, "M_a'(s) needs s > 0, s != 1");
  if (s < 0.1) return -detail::stretched_tail_series(s) / s;
  if (s > 10) return eval_Ma_prime(1 / s) / (s * s);
  return 1 / s - 0.5 * (1 + 1 / (s * s)) * log_ratio(s);
}

// Line kernel in log coordinates and its parts.
inline double kernel_line(double xi) {
  require(xi != 0, Errc::singular_point, "K(xi) is singular at xi = 0");
  return inv_pi * std::exp(xi) * log_ratio_xi(xi);
}
inline double kernel_line_antisym(double xi) {
  if (xi == 0) return 0;
  return inv_pi * std::sinh(xi) * log_ratio_xi(xi);
}
// cosh(xi) l(xi) - 1, which is >= 0 and tends to 0 as |xi| -> infinity.
inline double cosh_log_ratio_excess(double xi) {
  const double t = std::exp(-std::abs(xi));
  if (t < 0.1) return detail::stretched_tail_series(t);
  return std::cosh(xi) * log_ratio_xi(xi) - 1;
}
inline double kernel_line_sym(double xi) {
  require(xi != 0, Errc::singular_point, "K_sym(xi) is singular at xi = 0");
  return inv_pi * (1 + cosh_log_ratio_excess(xi));
}
// dK_a/dxi = (cosh(xi) l(xi) - 1)/pi.
inline double kernel_line_antisym_prime(double xi) {
  require(xi != 0, Errc::singular_point, "K_a'(xi) is singular at xi = 0");
  return inv_pi * cosh_log_ratio_excess(xi);
}

struct PeriodicKernelValues {
  double K, s, G, T;
};

inline PeriodicKernelValues eval_K_periodic(double x, double y, double L) {
  require(L > 0, Errc::domain, "period must be positive");
  require(x > 0 && x < L / 2 && y > 0 && y < L / 2, Errc::domain, "x, y must lie in (0, L/2)");
  require(x != y, Errc::singular_point, "K(x,y) is singular on the diagonal");
  const double mu = std::numbers::pi / L;
  const double sx = std::sin(mu * x), cx = std::cos(mu * x);
  const double sy = std::sin(mu * y), cy = std::cos(mu * y);
  const double tx = sx / cx, ty = sy / cy;
  const double s = ty / tx;
  const double sm1 = std::sin(mu * (y - x)) / (sx * cy);
  const double l = log_ratio(s, sm1);
  const double csc2x = 1 / (sx * sx), csc2y = 1 / (sy * sy);

  // bracket = l - 2s/(s^2-1)
  double bracket;
  if (s > 10) {
    const double t = 1 / s, t2 = t * t;
    double p = t * t2, acc = 0;
    for (int n = 1; n < 40; ++n) {
      acc += 2 * p * (1.0 / (2.0 * n + 1.0) - 1.0);
      p *= t2;
    }
    bracket = acc;
  } else {
    bracket = l - 2 * s / (sm1 * (s + 1));
  }
  PeriodicKernelValues v;
  v.s = s;
  v.K = s * l;
  v.G = -mu * csc2x * ty * bracket;
  // (csc^2 x - csc^2 y)/(s-1), written without cancellation.
  const double ratio = std::sin(mu * (x + y)) * cy / (sx * sy * sy);
  v.T = -mu * (csc2x + csc2y) * l + mu * ratio * 2 * s / (s + 1);
  return v;
}

struct KernelReport {
  std::string id;
  std::string description;
  std::size_t samples = 0;
  double worst_violation = std::numeric_limits<double>::infinity();
  std::array<double, 2> worst_location{std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN()};
  double tolerance = 0;
  bool pass = false;

  // Record a value that should be >= 0.
  void observe(double margin, double a, double b = std::numeric_limits<double>::quiet_NaN()) {
    ++samples;
    if (!(margin >= worst_violation)) {
      worst_violation = std::isnan(margin) ? -std::numeric_limits<double>::infinity() : margin;
      worst_location = {a, b};
    }
  }
  void finish() { pass = worst_violation >= -tolerance; }
};

struct SamplingPlan {
  std::size_t deterministic = 10000;
  std::size_t random = 10000;
  std::uint64_t seed = 12345;
  double tolerance = 1e-10;
  double L = 2 * std::numbers::pi;
  double exclusion = 1e-8;  // samples with |s - 1| below this are skipped
};

struct DefaultPeriodicKernel {
  PeriodicKernelValues operator()(double x, double y, double L) const { return eval_K_periodic(x, y, L); }
};

template <class PeriodicKernel = DefaultPeriodicKernel>
std::vector<KernelReport> verify_kernel_properties(const SamplingPlan& plan, PeriodicKernel kernel = {}) {
  require(plan.deterministic >= 1000 && plan.random >= 1000, Errc::parameter,
          "sampling plan needs at least 1000 deterministic and random samples");
  std::mt19937_64 rng(plan.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double L = plan.L;
  const double half = L / 2;
  const double tol = plan.tolerance;
  const std::size_t nd = plan.deterministic, nr = plan.random;
  std::vector<KernelReport> out;
  auto report = [&](std::string id, std::string desc) {
    KernelReport r;
    r.id = std::move(id);
    r.description = std::move(desc);
    r.tolerance = tol;
    return r;
  };
  auto keep = [&](double s) { return std::abs(s - 1) >= plan.exclusion; };

  // s samples: deterministic log-spaced over [1e-6, 1e6], random log-uniform.
  auto s_det = [&](std::size_t i) { return std::pow(10.0, -6.0 + 12.0 * (i + 0.5) / static_cast<double>(nd)); };
  auto s_rand = [&] { return std::pow(10.0, -6.0 + 12.0 * unit(rng)); };

  // M monotone on (0,1) and (1, inf): analytic derivative on all samples,
  // difference quotients on a uniform deterministic grid.
  {
    auto inc = report("M_increasing_below_1", "M'(s) >= 0 and sampled slopes >= 0 on (0,1)");
    auto dec = report("M_decreasing_above_1", "M'(s) <= 0 and sampled slopes <= 0 on (1,inf)");
    auto ma = report("Ma_decreasing", "M_a'(s) <= 0 and sampled slopes <= 0 on (0,inf)");
    double prev_s = 0, prev_m = 0, prev_a = 0;
    for (std::size_t i = 0; i < nd; ++i) {
      const double s = (i + 1.0) / (nd + 1.0);
      if (!keep(s)) continue;
      const auto v = eval_M(s);
      inc.observe(eval_M_prime(s), s);
      ma.observe(-eval_Ma_prime(s), s);
      if (i > 0) {
        inc.observe((v.M - prev_m) / (s - prev_s), s);
        ma.observe(-(v.M_a - prev_a) / (s - prev_s), s);
      }
      prev_s = s;
      prev_m = v.M;
      prev_a = v.M_a;
    }
    prev_s = 0;
    for (std::size_t i = 0; i < nd; ++i) {
      const double s = 1 + 99.0 * (i + 1.0) / (nd + 1.0);
      if (!keep(s)) continue;
      const auto v = eval_M(s);
      dec.observe(-eval_M_prime(s), s);
      ma.observe(-eval_Ma_prime(s), s);
      if (i > 0) {
        dec.observe(-(v.M - prev_m) / (s - prev_s), s);
        ma.observe(-(v.M_a - prev_a) / (s - prev_s), s);
      }
      prev_s = s;
      prev_m = v.M;
      prev_a = v.M_a;
    }
    for (std::size_t i = 0; i < nr; ++i) {
      const double s = s_rand();
      if (!keep(s)) continue;
      if (s < 1) inc.observe(eval_M_prime(s), s);
      else dec.observe(-eval_M_prime(s), s);
      ma.observe(-eval_Ma_prime(s), s);
    }
    for (auto* r : {&inc, &dec, &ma}) {
      r->finish();
      out.push_back(*r);
    }
  }

  // Limits at 0 and the 2/s^2 decay at infinity.
  {
    auto lim = report("M_limits_at_0", "|M(s)-2| and |M_a(s)-1| vanish as s -> 0+ (checked down to s = 1e-8)");
    for (double s : {1e-8, 1e-10, 1e-12}) {
      const auto v = eval_M(s);
      lim.observe(-std::abs(v.M - 2), s);
      lim.observe(-std::abs(v.M_a - 1), s);
    }
    lim.finish();
    out.push_back(lim);

    auto decay = report("M_decay_at_infinity", "|M(s) - 2/s^2| <= 10/s^3 for s >= 10");
    for (std::size_t i = 0; i < nd; ++i) {
      const double s = std::pow(10.0, 1.0 + 5.0 * i / static_cast<double>(nd));
      decay.observe(10 / (s * s * s) - std::abs(eval_M(s).M - 2 / (s * s)), s);
    }
    for (std::size_t i = 0; i < nr; ++i) {
      const double s = std::pow(10.0, 1.0 + 5.0 * unit(rng));
      decay.observe(10 / (s * s * s) - std::abs(eval_M(s).M - 2 / (s * s)), s);
    }
    decay.finish();
    out.push_back(decay);
  }

  // l(s) >= 2s/(s^2+1).
  {
    auto r = report("log_ratio_lower_bound", "log|(s+1)/(s-1)| >= 2s/(s^2+1) for s >= 0");
    r.observe(log_ratio(0.0), 0.0);
    for (std::size_t i = 0; i < nd; ++i) {
      const double s = s_det(i);
      if (keep(s)) r.observe(log_ratio(s) - 2 * s / (s * s + 1), s);
    }
    for (std::size_t i = 0; i < nr; ++i) {
      const double s = s_rand();
      if (keep(s)) r.observe(log_ratio(s) - 2 * s / (s * s + 1), s);
    }
    r.finish();
    out.push_back(r);
  }

  // Line kernel parts.
  {
    auto ka = report("Ka_increasing", "K_a'(xi) >= 0 and sampled slopes >= 0");
    auto kal = report("Ka_limits", "K_a(xi) -> +-1/pi as xi -> +-inf (checked at |xi| = 40)");
    auto ks = report("Ksym_above_inv_pi", "K_sym(xi) >= 1/pi");
    double prev_xi = 0, prev_k = 0;
    bool have_prev = false;
    for (std::size_t i = 0; i < nd; ++i) {
      const double xi = -30.0 + 60.0 * (i + 0.5) / static_cast<double>(nd);
      if (std::abs(xi) < plan.exclusion) continue;
      const double k = kernel_line_antisym(xi);
      ka.observe(kernel_line_antisym_prime(xi), xi);
      if (have_prev) ka.observe((k - prev_k) / (xi - prev_xi), xi);
      ks.observe(kernel_line_sym(xi) - inv_pi, xi);
      prev_xi = xi;
      prev_k = k;
      have_prev = true;
    }
    for (std::size_t i = 0; i < nr; ++i) {
      const double xi = -30.0 + 60.0 * unit(rng);
      if (std::abs(xi) < plan.exclusion) continue;
      ka.observe(kernel_line_antisym_prime(xi), xi);
      ks.observe(kernel_line_sym(xi) - inv_pi, xi);
    }
    kal.observe(-std::abs(kernel_line_antisym(40.0) - inv_pi), 40.0);
    kal.observe(-std::abs(kernel_line_antisym(-40.0) + inv_pi), -40.0);
    for (auto* r : {&ka, &kal, &ks}) {
      r->finish();
      out.push_back(*r);
    }
  }

  // Periodic kernel: K >= 0; x<y: K >= 2, G >= 0; y<x: K >= 2s^2, G <= 0; T <= 0.
  {
    auto kpos = report("K_nonnegative", "K(x,y) >= 0");
    auto klo = report("K_at_least_2_for_x_lt_y", "K(x,y) >= 2 for 0 < x < y < L/2");
    auto glo = report("Kx_nonnegative_for_x_lt_y", "G = K_x >= 0 for 0 < x < y < L/2");
    auto khi = report("K_at_least_2s2_for_y_lt_x", "K(x,y) >= 2 s^2 for 0 < y < x < L/2");
    auto ghi = report("Kx_nonpositive_for_y_lt_x", "G = K_x <= 0 for 0 < y < x < L/2");
    auto tneg = report("T_nonpositive", "T(x,y) <= 0");
    auto visit = [&](double x, double y) {
      if (!(x > 0 && x < half && y > 0 && y < half) || x == y) return;
      const double s = std::tan(std::numbers::pi / L * y) / std::tan(std::numbers::pi / L * x);
      if (!keep(s)) return;
      const auto v = kernel(x, y, L);
      kpos.observe(v.K, x, y);
      tneg.observe(-v.T, x, y);
      if (x < y) {
        klo.observe(v.K - 2, x, y);
        glo.observe(v.G, x, y);
      } else {
        khi.observe(v.K - 2 * v.s * v.s, x, y);
        ghi.observe(-v.G, x, y);
      }
    };
    const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(nd))));
    for (std::size_t i = 0; i < side; ++i)
      for (std::size_t j = 0; j < side; ++j)
        visit(half * (i + 0.5) / static_cast<double>(side), half * (j + 0.3) / static_cast<double>(side));
    for (std::size_t i = 0; i < nr; ++i) {
      const double x = half * unit(rng);
      double y;
      if (i % 3 == 2) {
        // near-diagonal pairs
        const double rel = std::pow(10.0, -7.0 + 6.0 * unit(rng));
        y = x * (1 + (unit(rng) < 0.5 ? -rel : rel));
      } else {
        y = half * unit(rng);
      }
      visit(x, y);
    }
    for (auto* r : {&kpos, &klo, &glo, &khi, &ghi, &tneg}) {
      r->finish();
      out.push_back(*r);
    }
  }
  return out;
}

}  // namespace hlb
