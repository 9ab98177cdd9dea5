#pragma once

#include <iosfwd>

namespace ehalloc {

/// Exit codes of eh_allocate.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;       // bad input, infeasible problem, failed suite
inline constexpr int kExitNotConverged = 2;

/// Entry point of eh_allocate (solve | experiment | bench | validate).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ehalloc
