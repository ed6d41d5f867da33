#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sandpile::cli {

enum ExitCode : int { kOk = 0, kCheckFailure = 1, kUsage = 2, kSolverFailure = 3 };

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sandpile::cli
