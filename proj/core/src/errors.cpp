#include "steinlab/errors.hpp"

namespace steinlab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::missing_residual: return "missing_residual";
    case ErrorCode::degenerate_density: return "degenerate_density";
    case ErrorCode::nonfinite_moment: return "nonfinite_moment";
    case ErrorCode::quadrature_failure: return "quadrature_failure";
    case ErrorCode::infinite_expectation: return "infinite_expectation";
    case ErrorCode::parameter_domain: return "parameter_domain";
    case ErrorCode::singular_point: return "singular_point";
    case ErrorCode::config: return "config";
  }
  return "unknown";
}

}  // namespace steinlab
