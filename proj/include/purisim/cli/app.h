#pragma once

#include <iosfwd>
#include <string>

#include "purisim/cli/config.h"

namespace purisim::cli {

/// Output writers for each subcommand. Each writes into config.out and
/// returns a one-line report for the terminal.
std::string analyze(const RunConfig& config);
std::string simulate(const RunConfig& config);
std::string sweep(const RunConfig& config);
std::string compare(const RunConfig& config);
std::string calibrate(const RunConfig& config);

/// Full command line handling. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace purisim::cli
