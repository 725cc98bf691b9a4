// Error types shared by every dynlattice module.
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dynlattice {

enum class ErrorCode {
  InvalidInput,
  Aperture,
  ImpossibleGeometry,
  InfinitePeriod,
  FocalSingularity,
  Sampling,
  GridMismatch,
  Resolution,
  Envelope,
  NoLattice,
  Range,
  Coverage,
  Contract,
  Io,
  Parse,
  Validation,
};

/// Stable machine-readable token for an error code (printed by the CLI).
constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid_input";
    case ErrorCode::Aperture: return "aperture";
    case ErrorCode::ImpossibleGeometry: return "impossible_geometry";
    case ErrorCode::InfinitePeriod: return "infinite_period";
    case ErrorCode::FocalSingularity: return "focal_singularity";
    case ErrorCode::Sampling: return "sampling";
    case ErrorCode::GridMismatch: return "grid_mismatch";
    case ErrorCode::Resolution: return "resolution";
    case ErrorCode::Envelope: return "envelope";
    case ErrorCode::NoLattice: return "no_lattice";
    case ErrorCode::Range: return "range";
    case ErrorCode::Coverage: return "coverage";
    case ErrorCode::Contract: return "contract";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Validation: return "validation";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace dynlattice
