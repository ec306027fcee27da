#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace grwlim {

enum class Errc {
  invalid_dimension,
  dimension_mismatch,
  invalid_argument,
  not_hermitian,
  invalid_effect,
  invalid_density_matrix,
  invalid_povm,
  non_orthonormal_basis,
  numerical,
  internal_consistency,
  out_of_branch,
  degenerate_prior,
  conditioning,
  unsupported_instrument,
  memory_budget,
  resolution,
  undefined_ratio,
  config,
};

const char* to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

/// Schema violation in a configuration file. `field()` is a dotted path such
/// as `initial_state.particles[0].packets[1].width`.
class ConfigError : public Error {
public:
  ConfigError(std::string field, const std::string& what)
      : Error(Errc::config, field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

inline const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_dimension: return "invalid-dimension";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::not_hermitian: return "not-hermitian";
    case Errc::invalid_effect: return "invalid-effect";
    case Errc::invalid_density_matrix: return "invalid-density-matrix";
    case Errc::invalid_povm: return "invalid-povm";
    case Errc::non_orthonormal_basis: return "non-orthonormal-basis";
    case Errc::numerical: return "numerical";
    case Errc::internal_consistency: return "internal-consistency";
    case Errc::out_of_branch: return "out-of-branch";
    case Errc::degenerate_prior: return "degenerate-prior";
    case Errc::conditioning: return "conditioning";
    case Errc::unsupported_instrument: return "unsupported-instrument";
    case Errc::memory_budget: return "memory-budget";
    case Errc::resolution: return "resolution";
    case Errc::undefined_ratio: return "undefined-ratio";
    case Errc::config: return "config";
  }
  return "unknown";
}

}  // namespace grwlim
