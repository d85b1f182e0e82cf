#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace epf {

/// Entry point behind the `epf` binary. Returns 0 on success, 1 on runtime
/// failure and 2 on usage or configuration errors. Diagnostics go to `err`,
/// progress and summaries to `out`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, char** argv);

}  // namespace epf
