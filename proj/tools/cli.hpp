#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sonarflow::cli {

enum ExitCode : int { ok = 0, usage = 1, io_failure = 2, pipeline_failure = 3 };

/// Runs one command line (without the program name). Summaries go to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sonarflow::cli
