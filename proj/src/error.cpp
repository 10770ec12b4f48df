#include "cdloss/error.hpp"

namespace cdl {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ok: return "ok";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::out_of_range: return "out_of_range";
    case ErrorCode::empty_mask: return "empty_mask";
    case ErrorCode::degenerate_mask: return "degenerate_mask";
    case ErrorCode::no_common_slices: return "no_common_slices";
    case ErrorCode::grid_too_small: return "grid_too_small";
    case ErrorCode::malformed_header: return "malformed_header";
    case ErrorCode::size_mismatch: return "size_mismatch";
    case ErrorCode::unsupported_dtype: return "unsupported_dtype";
    case ErrorCode::unsupported_format: return "unsupported_format";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

}  // namespace cdl
