#pragma once

#include <stdexcept>
#include <string>

namespace kgscat {

// Stable machine-readable failure identifiers. CLI maps these to exit codes
// and diagnostics; tests match on them.
enum class errc {
  invalid_config,
  invalid_data,
  insufficient_samples,
  ill_conditioned_weight,
  not_positive,
  not_self_adjoint,
  singular_resolvent,
  invalid_geometry,
  positivity_violated,
  integration_failure,
  iteration_diverged,
  gap_repair_failed,
  no_convergence,
  bad_packet,
  cache_corrupt,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::invalid_config: return "invalid-config";
    case errc::invalid_data: return "invalid-data";
    case errc::insufficient_samples: return "insufficient-samples";
    case errc::ill_conditioned_weight: return "ill-conditioned-weight";
    case errc::not_positive: return "not-positive";
    case errc::not_self_adjoint: return "not-self-adjoint";
    case errc::singular_resolvent: return "singular-resolvent";
    case errc::invalid_geometry: return "invalid-geometry";
    case errc::positivity_violated: return "positivity-violated";
    case errc::integration_failure: return "integration-failure";
    case errc::iteration_diverged: return "iteration-diverged";
    case errc::gap_repair_failed: return "gap-repair-failed";
    case errc::no_convergence: return "no-convergence";
    case errc::bad_packet: return "bad-packet";
    case errc::cache_corrupt: return "cache-corrupt";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace kgscat
