#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hlb {

enum class Errc {
  invalid_grid,
  shape,
  domain,
  singular_point,
  unknown_preset,
  invalid_data,
  parameter,
  spec,
  normalization,
  sign,
  degenerate,
  truncation,
  quadrature_singular,
  unreliable_estimate,
  inapplicable,
  nan_detected,
  config,
};

constexpr std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::invalid_grid: return "invalid-grid";
    case Errc::shape: return "shape";
    case Errc::domain: return "domain";
    case Errc::singular_point: return "singular-point";
    case Errc::unknown_preset: return "unknown-preset";
    case Errc::invalid_data: return "invalid-data";
    case Errc::parameter: return "parameter";
    case Errc::spec: return "spec";
    case Errc::normalization: return "normalization";
    case Errc::sign: return "sign";
    case Errc::degenerate: return "degenerate";
    case Errc::truncation: return "truncation";
    case Errc::quadrature_singular: return "quadrature-singular";
    case Errc::unreliable_estimate: return "unreliable-estimate";
    case Errc::inapplicable: return "inapplicable";
    case Errc::nan_detected: return "nan-detected";
    case Errc::config: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + " error: " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace hlb
