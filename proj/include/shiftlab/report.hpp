#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "shiftlab/entropy.hpp"
#include "shiftlab/filter.hpp"
#include "shiftlab/numeric.hpp"
#include "shiftlab/solver.hpp"

namespace shiftlab {

using ordered_json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

ordered_json to_json(const Estimate& e);
ordered_json estimate_record(const std::string& name, const Estimate& e, std::uint64_t seed);
ordered_json to_json(const ResidualPair& r);
ordered_json to_json(const RefinementStudy& s);
ordered_json to_json(const GapReport& g);
ordered_json to_json(const PreservationReport& p);
ordered_json to_json(const BrownianityReport& b);

// Shortest round-trip decimal form, locale independent.
std::string csv_number(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);

} // namespace shiftlab
