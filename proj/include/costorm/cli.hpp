#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace costorm {

// Entry point of the costorm command-line tool. Returns 0 on success, 2 on a
// usage error and 1 on any other failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace costorm
