#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qinv::cli {

// Runs one command line; args[0] is the program name. Returns 0 on success,
// 2 when the instance is infeasible and 1 on errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qinv::cli
