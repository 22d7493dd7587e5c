#pragma once

#include <stdexcept>
#include <string>

namespace exwave {

// Failure taxonomy shared by all modules.  Codes are stable so tests and the
// CLI can dispatch on them; the message carries the human-readable context.
enum class errc {
  invalid_argument,
  non_positive_spacing,
  horizon_negative,
  dimension_too_low,
  singular_system,
  empty_near_region,
  sign_violation,
  support_violation,
  trivial_data,
  cfl_violation,
  overflow_blowup,
  support_leak,
  grid_mismatch,
  unknown_inequality,
  insufficient_samples,
  missing_phi0,
  regime_mismatch,
  critical_or_supercritical,
  insufficient_points,
  no_blowup_observed,
  io_failure,
  config_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::invalid_argument: return "invalid_argument";
    case errc::non_positive_spacing: return "non_positive_spacing";
    case errc::horizon_negative: return "horizon_negative";
    case errc::dimension_too_low: return "dimension_too_low";
    case errc::singular_system: return "singular_system";
    case errc::empty_near_region: return "empty_near_region";
    case errc::sign_violation: return "sign_violation";
    case errc::support_violation: return "support_violation";
    case errc::trivial_data: return "trivial_data";
    case errc::cfl_violation: return "cfl_violation";
    case errc::overflow_blowup: return "overflow_blowup";
    case errc::support_leak: return "support_leak";
    case errc::grid_mismatch: return "grid_mismatch";
    case errc::unknown_inequality: return "unknown_inequality";
    case errc::insufficient_samples: return "insufficient_samples";
    case errc::missing_phi0: return "missing_phi0";
    case errc::regime_mismatch: return "regime_mismatch";
    case errc::critical_or_supercritical: return "critical_or_supercritical";
    case errc::insufficient_points: return "insufficient_points";
    case errc::no_blowup_observed: return "no_blowup_observed";
    case errc::io_failure: return "io_failure";
    case errc::config_error: return "config_error";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

inline void require(bool ok, errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace exwave
