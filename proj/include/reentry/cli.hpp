#pragma once

#include <string>
#include <vector>

namespace reentry::cli {

// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int run(int argc, char** argv);
// argv[0] excluded.
int run(const std::vector<std::string>& args);

}  // namespace reentry::cli
