#pragma once

#include <iosfwd>

namespace memsync::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerdictFail = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitBlowUp = 4;
inline constexpr int kExitUsage = 64;

/// Runs one subcommand (constants | threshold | simulate | verify | sweep).
/// Results go to `out` unless --output is given; diagnostics go to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace memsync::cli
