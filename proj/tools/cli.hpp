#ifndef ADESENS_TOOLS_CLI_HPP_
#define ADESENS_TOOLS_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace adesens::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kDataError = 3,
  kVerificationFailed = 4,
};

// args[0] is the program name.  Artifacts go to the paths named by the
// arguments; messages go to out and err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adesens::cli

#endif  // ADESENS_TOOLS_CLI_HPP_
