#pragma once

namespace newsrisk {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Parses argv and runs one subcommand; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace newsrisk
