#include "shiftlab/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "shiftlab/drift.hpp"
#include "shiftlab/filter.hpp"
#include "shiftlab/grid.hpp"

namespace shiftlab {

bool is_power_of_two(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_unsigned(const std::string& key, const std::string& value) {
    T out{};
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end)
        throw std::invalid_argument("config: bad integer for " + key + ": '" + value + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for " + key + ": '" + value + "'");
    }
    if (pos != value.size())
        throw std::invalid_argument("config: bad number for " + key + ": '" + value + "'");
    return out;
}

std::vector<std::size_t> parse_grid_list(const std::string& value) {
    std::vector<std::size_t> grids;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw std::invalid_argument("config: empty entry in refine_grids");
        grids.push_back(parse_unsigned<std::size_t>("refine_grids", item));
    }
    if (grids.empty()) throw std::invalid_argument("config: refine_grids is empty");
    return grids;
}

} // namespace

void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "drift") {
        cfg.drift = value;
    } else if (key == "tau") {
        cfg.tau = value;
    } else if (key == "steps") {
        cfg.steps = parse_unsigned<std::size_t>(key, value);
    } else if (key == "paths") {
        cfg.paths = parse_unsigned<std::size_t>(key, value);
    } else if (key == "seed") {
        cfg.seed = parse_unsigned<std::uint64_t>(key, value);
    } else if (key == "filter") {
        cfg.filter = value;
    } else if (key == "out") {
        cfg.out = value;
    } else if (key == "refine_grids") {
        cfg.refine_grids = parse_grid_list(value);
    } else if (key == "reference_steps") {
        cfg.reference_steps = parse_unsigned<std::size_t>(key, value);
    } else if (key == "train_paths") {
        cfg.train_paths = parse_unsigned<std::size_t>(key, value);
    } else if (key == "allowance") {
        cfg.allowance = parse_double(key, value);
    } else if (key == "threads") {
        cfg.threads = parse_unsigned<unsigned>(key, value);
    } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open file '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " of '" + path + "' has no '='");
        apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void validate_config(const ExperimentConfig& cfg) {
    if (!is_power_of_two(cfg.steps))
        throw std::invalid_argument("config: steps must be a power of two, got " +
                                    std::to_string(cfg.steps));
    if (cfg.paths == 0) throw std::invalid_argument("config: paths must be at least 1");
    if (cfg.threads == 0) throw std::invalid_argument("config: threads must be at least 1");
    if (!(cfg.allowance >= 0.0 && cfg.allowance <= 1.0))
        throw std::invalid_argument("config: allowance must lie in [0,1]");
    if (cfg.out.empty()) throw std::invalid_argument("config: out must not be empty");
    if (cfg.filter != "auto") parse_filter_method(cfg.filter);
    if (!is_power_of_two(cfg.reference_steps))
        throw std::invalid_argument("config: reference_steps must be a power of two");
    for (const std::size_t g : cfg.refine_grids) {
        if (!is_power_of_two(g))
            throw std::invalid_argument("config: refine grid " + std::to_string(g) +
                                        " is not a power of two");
        if (cfg.reference_steps % g != 0 || cfg.reference_steps <= g)
            throw std::invalid_argument("config: reference_steps must be a proper multiple of "
                                        "every refine grid");
    }
    const TimeGrid probe(cfg.steps);
    parse_drift(cfg.drift, probe);
    if (!cfg.tau.empty()) parse_stopping(cfg.tau);
}

nlohmann::ordered_json config_echo(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["drift"] = cfg.drift;
    j["tau"] = cfg.tau;
    j["steps"] = cfg.steps;
    j["paths"] = cfg.paths;
    j["seed"] = cfg.seed;
    j["filter"] = cfg.filter;
    j["out"] = cfg.out;
    j["refine_grids"] = cfg.refine_grids;
    j["reference_steps"] = cfg.reference_steps;
    j["train_paths"] = cfg.train_paths;
    j["allowance"] = cfg.allowance;
    return j;
}

} // namespace shiftlab
