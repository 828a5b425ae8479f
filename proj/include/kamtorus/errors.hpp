#pragma once

#include <stdexcept>
#include <string>

namespace kamtorus {

enum class Errc {
  ok = 0,
  invalid_argument,
  shape_mismatch,
  domain_escape,
  resonance,
  cutoff_exceeded,
  twist_failure,
  rank_deficient,
  budget_exceeded,
  norm_overflow,
  config_error,
  io_error,
  divergence,
  h2_violation,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::ok: return "ok";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::domain_escape: return "domain_escape";
    case Errc::resonance: return "resonance";
    case Errc::cutoff_exceeded: return "cutoff_exceeded";
    case Errc::twist_failure: return "twist_failure";
    case Errc::rank_deficient: return "rank_deficient";
    case Errc::budget_exceeded: return "budget_exceeded";
    case Errc::norm_overflow: return "norm_overflow";
    case Errc::config_error: return "config_error";
    case Errc::io_error: return "io_error";
    case Errc::divergence: return "divergence";
    case Errc::h2_violation: return "h2_violation";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

}  // namespace kamtorus
