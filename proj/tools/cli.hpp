#pragma once

#include <ostream>

namespace srtest::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;
inline constexpr int kReject = 3;
inline constexpr int kNumericError = 4;

/// Entry point behind the `srtest` executable; writes results to `out` and
/// diagnostics to `err`, returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace srtest::cli
