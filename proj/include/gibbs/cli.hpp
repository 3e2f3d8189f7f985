#pragma once

#include <string>
#include <vector>

namespace gibbs::cli {

// Entry point shared by the binary and the tests. Returns the process exit
// code: 0 success, 1 config/build error, 2 completed with per-t convergence
// failures (artifacts still written).
int run(const std::vector<std::string>& args);

}  // namespace gibbs::cli
