#pragma once

#include <string>
#include <vector>

namespace facet::cli {

// Full toolkit invocation (argv without the program name). Catches all
// errors, prints a single machine-readable `ERROR <CATEGORY>: ...` line on
// failure, and returns the process exit code: 0 success, 2 config error,
// 3 data error, 4 runtime error.
int run(const std::vector<std::string>& args);

}  // namespace facet::cli
