#pragma once

#include <string>

#include "shiftlab/config.hpp"

namespace shiftlab::cli {

// Runs one subcommand end to end: computes results, writes summary.json,
// CSV files and run.log into cfg.out, prints a short line to stdout.
// Returns the process exit code for a completed run (always 0; statistical
// verdicts live in the outputs). Throws on configuration or numeric errors.
int run_command(const std::string& name, const ExperimentConfig& cfg);

} // namespace shiftlab::cli
