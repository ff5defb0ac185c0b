#pragma once

#include <iosfwd>

namespace siamhan::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidationError = 1;
inline constexpr int kRuntimeError = 2;

/// Default output directory when --out is not given.
inline constexpr const char* kOutputDirEnv = "SIAMHAN_OUT";

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace siamhan::cli
