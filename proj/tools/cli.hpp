#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pfm {

/// Runs the command line tool on `args` (program name excluded).
/// Returns 0 on success, 1 on domain errors, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace pfm
