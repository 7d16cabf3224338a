#ifndef SIGEVAL_TOOLS_CLI_H_
#define SIGEVAL_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace sigeval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitBackend = 2;
// `verify` found entries that no longer check out.
inline constexpr int kExitMismatch = 3;

// Runs one command line. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sigeval::cli

#endif  // SIGEVAL_TOOLS_CLI_H_
