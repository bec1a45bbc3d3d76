#pragma once

// Thin RAII wrapper over FFTW's real-to-complex transforms.
//
// Each RealFft owns its plan and its own aligned buffers, so a given input
// always takes the same code path and produces bit-identical output.
// FFTW's planner is not thread-safe; plan creation and destruction are
// serialized through a process-wide mutex.

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "error.hpp"

namespace hlb {

using cplx = std::complex<double>;

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    require(n >= 2, Errc::shape, "FFT length must be at least 2");
    real_ = fftw_alloc_real(n);
    spec_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(detail::fftw_planner_mutex());
    r2c_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec_, FFTW_ESTIMATE);
    c2r_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec_, real_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(r2c_);
    fftw_destroy_plan(c2r_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t spectrum_size() const { return n_ / 2 + 1; }

  // Unnormalized forward transform: F_k = sum_j f_j exp(-2 pi i jk/n), k = 0..n/2.
  void forward(std::span<const double> in, std::span<cplx> out) {
    require(in.size() == n_ && out.size() == spectrum_size(), Errc::shape, "FFT buffer size");
    std::copy(in.begin(), in.end(), real_);
    fftw_execute(r2c_);
    auto* s = reinterpret_cast<const cplx*>(spec_);
    std::copy(s, s + spectrum_size(), out.begin());
  }
  std::vector<cplx> forward(std::span<const double> in) {
    std::vector<cplx> out(spectrum_size());
    forward(in, out);
    return out;
  }

  // Normalized inverse: returns f with forward(f) == in.
  void inverse(std::span<const cplx> in, std::span<double> out) {
    require(in.size() == spectrum_size() && out.size() == n_, Errc::shape, "FFT buffer size");
    auto* s = reinterpret_cast<cplx*>(spec_);
    std::copy(in.begin(), in.end(), s);
    fftw_execute(c2r_);
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t j = 0; j < n_; ++j) out[j] = real_[j] * scale;
  }
  std::vector<double> inverse(std::span<const cplx> in) {
    std::vector<double> out(n_);
    inverse(in, out);
    return out;
  }

 private:
  std::size_t n_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan r2c_ = nullptr;
  fftw_plan c2r_ = nullptr;
};

// Per-thread transform cache keyed by length.
inline RealFft& fft_for(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

}  // namespace hlb
