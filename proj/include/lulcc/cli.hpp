#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lulcc::cli {

// Exit codes: 0 success, 1 module/validation failure, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace lulcc::cli
