#pragma once

#include <iosfwd>

namespace scvi::cli {

/// Exit codes beyond CLI11's own parse errors.
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalidConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitModelFile = 4;

/// Entry point for the `scvi` tool: subcommands train, eval and generate.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scvi::cli
