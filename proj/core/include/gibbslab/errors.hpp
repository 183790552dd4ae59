#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gibbslab {

// Failure taxonomy shared by the library and the command line driver.
// Codes up to io_error map to process exit code 2 (bad input), the rest
// to exit code 3 (numerical failure at the requested resolution).
enum class errc {
  parse_error,
  validation_error,
  empty_system,
  empty_constraint_set,
  io_error,
  depth_overflow,
  depth_mismatch,
  word_too_short,
  degenerate_potential,
  not_normalized,
  invalid_probe,
  no_convergence,
  solver_failure,
  no_gap,
  insufficient_decay_data,
  zero_variance,
  depth_exhausted,
};

inline std::string_view errc_name(errc code) noexcept {
  switch (code) {
    case errc::parse_error: return "ParseError";
    case errc::validation_error: return "ValidationError";
    case errc::empty_system: return "EmptySystem";
    case errc::empty_constraint_set: return "EmptyConstraintSet";
    case errc::io_error: return "IoError";
    case errc::depth_overflow: return "DepthOverflow";
    case errc::depth_mismatch: return "DepthMismatch";
    case errc::word_too_short: return "WordTooShort";
    case errc::degenerate_potential: return "DegeneratePotential";
    case errc::not_normalized: return "NotNormalized";
    case errc::invalid_probe: return "InvalidProbe";
    case errc::no_convergence: return "NoConvergence";
    case errc::solver_failure: return "SolverFailure";
    case errc::no_gap: return "NoGap";
    case errc::insufficient_decay_data: return "InsufficientDecayData";
    case errc::zero_variance: return "ZeroVariance";
    case errc::depth_exhausted: return "DepthExhausted";
  }
  return "UnknownError";
}

// True for conditions caused by malformed or inconsistent input, false for
// conditions where the input was sound but the numerics could not deliver.
inline bool errc_is_input_fault(errc code) noexcept {
  switch (code) {
    case errc::parse_error:
    case errc::validation_error:
    case errc::empty_system:
    case errc::empty_constraint_set:
    case errc::io_error:
    case errc::depth_mismatch:
    case errc::word_too_short:
    case errc::invalid_probe:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace gibbslab
