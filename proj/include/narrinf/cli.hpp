#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace narrinf::cli {

/// Runs the command line `args` (args[0] is the program name) and returns
/// the process exit code: 0 ok, 2 input, 3 empty, 4 convergence,
/// 5 unsupported configuration, 6 singular design.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace narrinf::cli
