#pragma once

#include <stdexcept>
#include <string>

namespace cdl {

// Numeric values are part of the C ABI (see cdloss.h); append only.
enum class ErrorCode : int {
  ok = 0,
  invalid_argument = 1,
  shape_mismatch = 2,
  out_of_range = 3,
  empty_mask = 4,
  degenerate_mask = 5,
  no_common_slices = 6,
  grid_too_small = 7,
  malformed_header = 8,
  size_mismatch = 9,
  unsupported_dtype = 10,
  unsupported_format = 11,
  io_error = 12,
  config_error = 13,
  divergence = 14,
  internal = 15,
};

const char* to_string(ErrorCode code) noexcept;

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

}  // namespace cdl
