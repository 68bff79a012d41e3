#ifndef COMPPROBE_TOOLS_CLI_H_
#define COMPPROBE_TOOLS_CLI_H_

#include <iosfwd>

namespace compprobe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Runs one subcommand. Results printed to the console go to `out`, logs and
// errors to `err`; everything else goes to the files named by flags.
int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace compprobe::cli

#endif  // COMPPROBE_TOOLS_CLI_H_
