#include "sls/error.hpp"

namespace sls {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::behind_camera: return "behind-camera";
    case ErrorCode::invalid_camera: return "invalid-camera";
    case ErrorCode::invalid_rig: return "invalid-rig";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::non_convergence: return "non-convergence";
    case ErrorCode::near_parallel: return "near-parallel";
    case ErrorCode::degenerate_input: return "degenerate-input";
    case ErrorCode::io: return "io";
    case ErrorCode::format: return "format";
    case ErrorCode::lock_held: return "lock-held";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace sls
