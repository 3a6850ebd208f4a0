#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace shiftlab {

// Run settings shared by all subcommands. Values come from built-in defaults,
// then an optional key=value config file, then explicit command line flags,
// in that order. `threads` is an execution detail: it is logged but never
// echoed into result files, so reruns with different parallelism produce
// identical outputs.
struct ExperimentConfig {
    std::string drift = "zero";
    std::string tau;
    std::size_t steps = 256;
    std::size_t paths = 1000;
    std::uint64_t seed = 1;
    std::string filter = "auto";
    std::string out = "runs";
    std::vector<std::size_t> refine_grids = {64, 256, 1024};
    std::size_t reference_steps = 8192;
    std::size_t train_paths = 0;
    double allowance = 0.10;
    unsigned threads = 1;
};

// Applies one key=value entry. Throws std::invalid_argument on unknown keys
// or malformed values.
void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Reads a config file: one key=value per line, '#' starts a comment,
// blank lines ignored. The value is everything after the first '=' with
// surrounding whitespace trimmed, so drift specs may contain spaces.
void load_config_file(ExperimentConfig& cfg, const std::string& path);

// Structural checks that do not need a grid: power-of-two step counts,
// ranges, parseable drift and stopping specs. Throws std::invalid_argument.
void validate_config(const ExperimentConfig& cfg);

// Everything except threads, in a fixed key order.
nlohmann::ordered_json config_echo(const ExperimentConfig& cfg);

bool is_power_of_two(std::size_t n);

} // namespace shiftlab
