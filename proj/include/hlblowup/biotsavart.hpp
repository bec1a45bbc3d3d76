#pragma once

// Velocity reconstruction: periodic Hilbert/log-sin laws (spectral and direct
// quadrature), the half-line kernel representation of u cot(mu x), the CKY
// law, log-coordinate convolutions and the mollified kernel.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "error.hpp"
#include "fft.hpp"
#include "fields.hpp"
#include "grid.hpp"
#include "kernels.hpp"

namespace hlb {

struct VelocityField {
  Samples u;
  Samples ux;
  BiotSavartMethod method = BiotSavartMethod::spectral;
};

// ---------------------------------------------------------------------------
// Periodic laws

namespace detail {

inline Samples hilbert_spectral(std::span<const double> w) {
  const std::size_t n = w.size();
  auto& fft = fft_for(n);
  auto spec = fft.forward(w);
  spec[0] = 0;
  for (std::size_t k = 1; k < spec.size(); ++k) spec[k] *= cplx(0, -1);
  if (n % 2 == 0) spec[n / 2] = 0;
  return fft.inverse(spec);
}

// Punctured trapezoid restricted to odd offsets (weight 2h). Exact for every
// mode |k| < N/2, unlike the plain punctured rule which is only first order.
inline Samples hilbert_direct(std::span<const double> w, const PeriodicGrid& g) {
  const std::size_t n = g.N;
  const double h = g.spacing(), mu = g.mu();
  std::vector<double> cot(n, 0.0);
  for (std::size_t m = 1; m < n; m += 2) cot[m] = 1 / std::tan(mu * h * static_cast<double>(m));
  Samples out(n, 0.0);
  const double scale = 2 * h / g.L;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0;
    for (std::size_t j = (i + 1) % 2; j < n; j += 2) acc += w[j] * cot[(i + n - j) % n];
    out[i] = scale * acc;
  }
  return out;
}

inline Samples logsin_spectral(std::span<const double> w, double L) {
  const std::size_t n = w.size();
  auto& fft = fft_for(n);
  auto spec = fft.forward(w);
  spec[0] *= -(L / std::numbers::pi) * std::numbers::ln2;
  for (std::size_t k = 1; k < spec.size(); ++k) spec[k] *= -L / (2 * std::numbers::pi * static_cast<double>(k));
  return fft.inverse(spec);
}

// Punctured trapezoid plus the log-singularity correction h w_i log(mu h / 2 pi).
inline Samples logsin_direct(std::span<const double> w, const PeriodicGrid& g) {
  const std::size_t n = g.N;
  const double h = g.spacing(), mu = g.mu();
  std::vector<double> ker(n);
  ker[0] = std::log(mu * h / (2 * std::numbers::pi));
  for (std::size_t m = 1; m < n; ++m) ker[m] = std::log(std::abs(std::sin(mu * h * static_cast<double>(m))));
  Samples out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0;
    for (std::size_t j = 0; j < n; ++j) acc += w[j] * ker[(i + n - j) % n];
    out[i] = h * acc / std::numbers::pi;
  }
  return out;
}

}  // namespace detail

// (1/pi) log(|z| / sqrt(z^2 + a^2))
inline double mollified_kernel(double z, double a) {
  require(a > 0, Errc::parameter, "mollification length must be positive");
  if (z == 0) return -std::numeric_limits<double>::infinity();
  return -0.5 * inv_pi * std::log1p(a * a / (z * z));
}

// Mollified velocity on a uniform line grid (no periodization).
inline Samples velocity_mollified_line(std::span<const double> w, double h, double a) {
  require(a > 0, Errc::parameter, "a_layer must be positive");
  const std::size_t n = w.size();
  std::vector<double> ker(n);
  ker[0] = inv_pi * (std::log(h / (2 * std::numbers::pi)) - std::log(a));
  for (std::size_t m = 1; m < n; ++m) ker[m] = mollified_kernel(h * static_cast<double>(m), a);
  Samples u(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0;
    for (std::size_t j = 0; j < n; ++j) acc += w[j] * ker[i > j ? i - j : j - i];
    u[i] = h * acc;
  }
  return u;
}

// Mollified velocity on the circle: kernel summed over the images |p| <= images,
// centred on the nearest image so the table stays even in the offset.
inline VelocityField velocity_mollified(std::span<const double> w, const PeriodicGrid& g, double a, int images = 8) {
  require(a > 0, Errc::parameter, "a_layer must be positive");
  detail::check_size(w.size(), g.N);
  const std::size_t n = g.N;
  const double h = g.spacing(), L = g.L;
  std::vector<double> ker(n, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    const double z = h * (m <= n / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(n));
    double acc = 0;
    for (int p = -images; p <= images; ++p) {
      if (m == 0 && p == 0) {
        acc += inv_pi * (std::log(h / (2 * std::numbers::pi)) - std::log(a));
        continue;
      }
      acc += mollified_kernel(z + p * L, a);
    }
    ker[m] = acc;
  }
  VelocityField v;
  v.method = BiotSavartMethod::mollified;
  v.u.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0;
    for (std::size_t j = 0; j < n; ++j) acc += w[j] * ker[(i + n - j) % n];
    v.u[i] = h * acc;
  }
  v.ux = spectral_derivative(v.u, g);
  return v;
}

inline Samples hilbert_ux(std::span<const double> w, const PeriodicGrid& g,
                          BiotSavartMethod method = BiotSavartMethod::spectral) {
  detail::check_size(w.size(), g.N);
  switch (method) {
    case BiotSavartMethod::spectral: return detail::hilbert_spectral(w);
    case BiotSavartMethod::direct: return detail::hilbert_direct(w, g);
    case BiotSavartMethod::mollified:
      throw Error(Errc::parameter, "hilbert_ux: use velocity_mollified for the mollified law");
  }
  return {};
}

// u = (1/pi) int_0^L w(y) log|sin(mu(x-y))| dy and u_x = H w.
inline VelocityField velocity_periodic(std::span<const double> w, const PeriodicGrid& g,
                                       BiotSavartMethod method = BiotSavartMethod::spectral, double a_layer = 0) {
  detail::check_size(w.size(), g.N);
  VelocityField v;
  v.method = method;
  switch (method) {
    case BiotSavartMethod::spectral:
      v.u = detail::logsin_spectral(w, g.L);
      v.ux = detail::hilbert_spectral(w);
      break;
    case BiotSavartMethod::direct:
      v.u = detail::logsin_direct(w, g);
      v.ux = detail::hilbert_direct(w, g);
      break;
    case BiotSavartMethod::mollified: return velocity_mollified(w, g, a_layer);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Half-line representation u(x) cot(mu x) = -(1/pi) int_0^{L/2} K(x,y) w(y) cot(mu y) dy

namespace detail {
// K(x,y) with d = y - x supplied accurately.
// K(x, y) cot(mu y) with d = y - x supplied separately for accuracy near the diagonal.
inline double kernel_cot_offset(double sx, double cx, double y, double d, double mu) {
  const double sy = std::sin(mu * y), cy = std::cos(mu * y);
  const double s = (sy * cx) / (cy * sx);
  const double sm1 = std::sin(mu * d) / (sx * cy);
  return s * log_ratio(s, sm1) * (cy / sy);
}
}  // namespace detail

template <class OmegaFn>
double velocity_halfline_representation(OmegaFn&& omega, double x, double L, double tol = 1e-12) {
  require(L > 0, Errc::domain, "period must be positive");
  require(x > 0 && x < L / 2, Errc::domain, "x must lie in (0, L/2)");
  const double mu = std::numbers::pi / L;
  const double half = L / 2;
  thread_local boost::math::quadrature::tanh_sinh<double> integrator(12);
  const double sx = std::sin(mu * x), cx = std::cos(mu * x);
  // y in [0, x]; tc > 0 near the right end x gives x - y.
  auto left = [&](double y, double tc) {
    const double d = tc > 0 ? -tc : y - x;
    if (d == 0 || y <= 0) return 0.0;
    const double w = omega(y);
    return w == 0 ? 0.0 : detail::kernel_cot_offset(sx, cx, y, d, mu) * w;
  };
  // y in [x, L/2]; tc < 0 near the left end x gives x - y.
  auto right = [&](double y, double tc) {
    const double d = tc < 0 ? -tc : y - x;
    if (d == 0 || y >= half) return 0.0;
    const double w = omega(y);
    return w == 0 ? 0.0 : detail::kernel_cot_offset(sx, cx, y, d, mu) * w;
  };
  const double a = integrator.integrate(left, 0.0, x, tol);
  const double b = integrator.integrate(right, x, half, tol);
  return -inv_pi * (a + b);
}

// Limit of u cot(mu x) at x = 0: -(2/pi) int_0^{L/2} w cot(mu y) dy.
template <class OmegaFn>
double velocity_halfline_at_zero(OmegaFn&& omega, double L, double tol = 1e-12) {
  const double mu = std::numbers::pi / L;
  thread_local boost::math::quadrature::tanh_sinh<double> integrator(12);
  auto f = [&](double y) { return y <= 0 || y >= L / 2 ? 0.0 : omega(y) / std::tan(mu * y); };
  return -2 * inv_pi * integrator.integrate(f, 0.0, L / 2, tol);
}

// ---------------------------------------------------------------------------
// CKY law on an increasing node vector: u(x) = -c x int_x^{X} w(y)/y dy.

inline VelocityField velocity_cky(std::span<const double> w, std::span<const double> x, double scale = 1.0) {
  const std::size_t n = x.size();
  require(w.size() == n && n >= 2, Errc::shape, "velocity_cky needs matching node and sample vectors");
  for (std::size_t i = 1; i < n; ++i) require(x[i] > x[i - 1], Errc::shape, "CKY nodes must increase");
  require(x[0] >= 0, Errc::domain, "CKY nodes must be nonnegative");
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > 0) {
      q[i] = w[i] / x[i];
    } else {
      require(w[i] == 0, Errc::quadrature_singular, "omega(0) != 0 makes omega/y non-integrable at 0");
      q[i] = w[1] / x[1];
    }
  }
  VelocityField v;
  v.u.assign(n, 0.0);
  v.ux.assign(n, 0.0);
  double acc = 0;
  for (std::size_t i = n - 1;; --i) {
    if (i + 1 < n) acc += 0.5 * (x[i + 1] - x[i]) * (q[i] + q[i + 1]);
    v.u[i] = -scale * x[i] * acc;
    v.ux[i] = -scale * acc + scale * w[i];
    if (i == 0) break;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Log-coordinate laws U = K * Omega (HL) and U = (2/pi) c int_{-inf}^xi Omega (CKY).

enum class LineKernel { HL, CKY };

// Toeplitz convolution with the HL line kernel on a LogGrid. The centre weight
// (h/pi) log(4 pi / h) carries the log singularity of K at 0.
class LogConvolution {
 public:
  explicit LogConvolution(const LogGrid& g) : grid_(g), M_(g.M), P_(2 * g.M) {
    const double h = g.spacing();
    std::vector<double> table(P_, 0.0);
    table[0] = h * inv_pi * std::log(4 * std::numbers::pi / h);
    for (std::size_t m = 1; m < M_; ++m) {
      const double z = h * static_cast<double>(m);
      table[m] = h * kernel_line(z);
      table[P_ - m] = h * kernel_line(-z);
    }
    kernel_spec_ = fft_for(P_).forward(table);
    center_weight_ = table[0];
  }

  const LogGrid& grid() const { return grid_; }
  double center_weight() const { return center_weight_; }

  Samples apply(std::span<const double> f) const {
    detail::check_size(f.size(), M_);
    auto& fft = fft_for(P_);
    std::vector<double> pad(P_, 0.0);
    std::copy(f.begin(), f.end(), pad.begin());
    auto spec = fft.forward(pad);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= kernel_spec_[k];
    auto full = fft.inverse(spec);
    return Samples(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(M_));
  }

 private:
  LogGrid grid_;
  std::size_t M_, P_;
  std::vector<cplx> kernel_spec_;
  double center_weight_ = 0;
};

// Largest |f| among the outermost `band` nodes relative to max |f|.
inline double edge_fraction(std::span<const double> f, std::size_t band = 2) {
  double peak = 0, edge = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    peak = std::max(peak, std::abs(f[i]));
    if (i < band || i + band >= f.size()) edge = std::max(edge, std::abs(f[i]));
  }
  return peak > 0 ? edge / peak : 0.0;
}

inline Samples cumulative_from_left(std::span<const double> f, double h) {
  Samples c(f.size(), 0.0);
  for (std::size_t i = 1; i < f.size(); ++i) c[i] = c[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
  return c;
}

inline Samples velocity_log_convolution(std::span<const double> Omega, const LogGrid& g, LineKernel kernel,
                                        const LogConvolution* conv = nullptr, double cky_scale = 1.0,
                                        double edge_tol = 1e-8) {
  detail::check_size(Omega.size(), g.M);
  require(edge_fraction(Omega) <= edge_tol, Errc::truncation, "vorticity support reaches the log-grid boundary");
  if (kernel == LineKernel::CKY) {
    auto U = cumulative_from_left(Omega, g.spacing());
    for (auto& v : U) v *= 2 * inv_pi * cky_scale;
    return U;
  }
  if (conv) return conv->apply(Omega);
  return LogConvolution(g).apply(Omega);
}

}  // namespace hlb
