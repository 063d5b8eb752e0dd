#pragma once

#include <string>
#include <vector>

namespace pcons {

/// Entry point shared by the pcons binary and the tests. Returns the process
/// exit code (0 success, 1 verification failure, 2 input error, 3 invariant
/// violation, 4 synthesis infeasible, 5 integration failure).
int run_cli(const std::vector<std::string>& args);

}  // namespace pcons
