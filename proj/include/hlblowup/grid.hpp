#pragma once

// Uniform grids, Fourier differentiation, trigonometric interpolation and
// the spectral-tail resolution monitor.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "error.hpp"
#include "fft.hpp"

namespace hlb {

using Samples = std::vector<double>;

struct PeriodicGrid {
  double L = 2 * std::numbers::pi;
  std::size_t N = 0;

  double mu() const { return std::numbers::pi / L; }
  double spacing() const { return L / static_cast<double>(N); }
  double node(std::size_t j) const { return static_cast<double>(j) * L / static_cast<double>(N); }
  Samples nodes() const {
    Samples x(N);
    for (std::size_t j = 0; j < N; ++j) x[j] = node(j);
    return x;
  }
  // Physical wavenumber of discrete mode k.
  double wavenumber(std::size_t k) const { return 2 * std::numbers::pi * static_cast<double>(k) / L; }
};

inline PeriodicGrid make_periodic_grid(double L, std::size_t N) {
  require(std::isfinite(L) && L > 0, Errc::invalid_grid, "period L must be positive");
  require(N >= 8 && N % 2 == 0, Errc::invalid_grid, "N must be even and at least 8");
  return PeriodicGrid{L, N};
}

struct LogGrid {
  double xi_min = 0;
  double xi_max = 1;
  std::size_t M = 0;

  double spacing() const { return (xi_max - xi_min) / static_cast<double>(M - 1); }
  double node(std::size_t i) const {
    return i + 1 == M ? xi_max : xi_min + static_cast<double>(i) * spacing();
  }
  Samples nodes() const {
    Samples x(M);
    for (std::size_t i = 0; i < M; ++i) x[i] = node(i);
    return x;
  }
  // Period used when compactly supported data are treated spectrally.
  double period() const { return static_cast<double>(M) * spacing(); }
};

inline LogGrid make_log_grid(double xi_min, double xi_max, std::size_t M) {
  require(std::isfinite(xi_min) && std::isfinite(xi_max) && xi_min < xi_max, Errc::invalid_grid,
          "log grid needs xi_min < xi_max");
  require(M >= 16, Errc::invalid_grid, "log grid needs at least 16 nodes");
  return LogGrid{xi_min, xi_max, M};
}

struct SpectrumReport {
  double tail_fraction = 0;
  std::size_t max_wavenumber_active = 0;
};

namespace detail {
inline void check_size(std::size_t got, std::size_t want) {
  require(got == want, Errc::shape, "sample count " + std::to_string(got) + " does not match grid size " +
                                        std::to_string(want));
}
}  // namespace detail

// Zero every retained coefficient with index above kmax.
inline void truncate_spectrum(std::span<cplx> spec, std::size_t kmax) {
  for (std::size_t k = kmax + 1; k < spec.size(); ++k) spec[k] = 0;
}

// d/dx of periodic samples with period P; the Nyquist mode is dropped.
inline Samples periodic_derivative(std::span<const double> f, double period) {
  const std::size_t n = f.size();
  auto& fft = fft_for(n);
  auto spec = fft.forward(f);
  const double base = 2 * std::numbers::pi / period;
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= cplx(0, base * static_cast<double>(k));
  if (n % 2 == 0) spec[n / 2] = 0;
  return fft.inverse(spec);
}

inline Samples spectral_derivative(std::span<const double> f, const PeriodicGrid& g) {
  detail::check_size(f.size(), g.N);
  return periodic_derivative(f, g.L);
}

// Low-pass filter keeping modes |k| <= kmax.
inline Samples lowpass(std::span<const double> f, std::size_t kmax) {
  auto& fft = fft_for(f.size());
  auto spec = fft.forward(f);
  truncate_spectrum(spec, kmax);
  return fft.inverse(spec);
}

// Tail mass over the band 1 <= |k| <= kmax, with tail |k| >= floor(2 kmax / 3).
inline SpectrumReport spectrum_report(std::span<const double> f, std::size_t kmax) {
  const std::size_t n = f.size();
  auto spec = fft_for(n).forward(f);
  kmax = std::min(kmax, n / 2);
  const std::size_t ktail = (2 * kmax) / 3;
  double total = 0, tail = 0, peak = 0;
  std::vector<double> power(kmax + 1, 0.0);
  for (std::size_t k = 1; k <= kmax; ++k) {
    const double mult = (n % 2 == 0 && k == n / 2) ? 1.0 : 2.0;
    power[k] = mult * std::norm(spec[k]);
    total += power[k];
    if (k >= ktail) tail += power[k];
    peak = std::max(peak, power[k]);
  }
  SpectrumReport r;
  if (total > 0) r.tail_fraction = std::clamp(tail / total, 0.0, 1.0);
  for (std::size_t k = kmax; k >= 1; --k) {
    if (power[k] > 1e-28 * peak && peak > 0) {
      r.max_wavenumber_active = k;
      break;
    }
  }
  return r;
}

inline SpectrumReport tail_fraction(std::span<const double> f, const PeriodicGrid& g) {
  detail::check_size(f.size(), g.N);
  return spectrum_report(f, g.N / 2);
}

// Trigonometric interpolant of periodic samples (cosine convention for the
// Nyquist term so real data stay real at every x).
class TrigInterpolant {
 public:
  TrigInterpolant(std::span<const double> f, double period) : n_(f.size()), period_(period) {
    coef_ = fft_for(n_).forward(f);
    for (auto& c : coef_) c /= static_cast<double>(n_);
  }

  double operator()(double x) const { return sum(x, false); }
  double derivative(double x) const { return sum(x, true); }

  std::size_t size() const { return n_; }
  double period() const { return period_; }

 private:
  double sum(double x, bool deriv) const {
    const double base = 2 * std::numbers::pi / period_;
    const std::size_t last = (n_ % 2 == 0) ? n_ / 2 - 1 : (n_ - 1) / 2;
    double acc = deriv ? 0.0 : coef_[0].real();
    cplx z(1, 0);
    const cplx step = std::polar(1.0, base * x);
    for (std::size_t k = 1; k <= last; ++k) {
      z = (k % 64 == 0) ? std::polar(1.0, base * static_cast<double>(k) * x) : z * step;
      const cplx term = coef_[k] * z;
      acc += deriv ? -2 * base * static_cast<double>(k) * term.imag() : 2 * term.real();
    }
    if (n_ % 2 == 0 && !deriv) acc += coef_[n_ / 2].real() * std::cos(base * static_cast<double>(n_ / 2) * x);
    return acc;
  }

  std::size_t n_;
  double period_;
  std::vector<cplx> coef_;
};

// Re-grid periodic samples onto n_out nodes. Upsampling is exact evaluation of
// the interpolant; downsampling truncates to the modes the target can hold.
inline Samples resample(std::span<const double> f, std::size_t n_out) {
  const std::size_t n = f.size();
  if (n_out == n) return Samples(f.begin(), f.end());
  auto in = fft_for(n).forward(f);
  std::vector<cplx> out(n_out / 2 + 1, cplx(0, 0));
  const double scale = static_cast<double>(n_out) / static_cast<double>(n);
  if (n_out > n) {
    const std::size_t last = (n % 2 == 0) ? n / 2 - 1 : (n - 1) / 2;
    for (std::size_t k = 0; k <= last; ++k) out[k] = in[k] * scale;
    if (n % 2 == 0) out[n / 2] = 0.5 * in[n / 2].real() * scale;
  } else {
    const std::size_t last = (n_out % 2 == 0) ? n_out / 2 - 1 : (n_out - 1) / 2;
    for (std::size_t k = 0; k <= last; ++k) out[k] = in[k] * scale;
  }
  return fft_for(n_out).inverse(out);
}

}  // namespace hlb
