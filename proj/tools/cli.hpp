#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace authcoin::cli {

/// Exit codes: 0 success, 1 domain error, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (without the program name).
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Every verb path the CLI accepts, e.g. "chain verify".
std::vector<std::string> verbs();

}  // namespace authcoin::cli
