#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace steinlab {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  missing_residual,
  degenerate_density,
  nonfinite_moment,
  quadrature_failure,
  infinite_expectation,
  parameter_domain,
  singular_point,
  config,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace steinlab
