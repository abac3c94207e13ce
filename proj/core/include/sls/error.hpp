#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sls {

enum class ErrorCode {
  invalid_argument,
  behind_camera,
  invalid_camera,
  invalid_rig,
  numeric,
  non_convergence,
  near_parallel,
  degenerate_input,
  io,
  format,
  lock_held,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto a documented exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace sls
