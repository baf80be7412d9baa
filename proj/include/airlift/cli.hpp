#pragma once

// Command-line front end: sim, plan, plot and sweep subcommands.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
// error, 3 numerical failure, 4 I/O failure.

#include <exception>
#include <string>
#include <vector>

namespace airlift::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

/// Exit code for an exception thrown by the library.
int exit_code_for(const std::exception_ptr& error);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace airlift::cli
