#include "shiftlab/report.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace shiftlab {

ordered_json to_json(const Estimate& e) {
    return ordered_json{{"mean", e.mean}, {"half_width", e.half_width}, {"n", e.n}};
}

ordered_json estimate_record(const std::string& name, const Estimate& e, std::uint64_t seed) {
    ordered_json j;
    j["name"] = name;
    j["mean"] = e.mean;
    j["half_width"] = e.half_width;
    j["n"] = e.n;
    j["seed"] = seed;
    return j;
}

ordered_json to_json(const ResidualPair& r) {
    return ordered_json{{"left", r.left}, {"right", r.right}};
}

ordered_json to_json(const RefinementStudy& s) {
    ordered_json j;
    j["reference_steps"] = s.reference_steps;
    j["n_paths"] = s.n_paths;
    j["grids"] = s.grids;
    j["inverse_residuals"] = s.inverse_residuals;
    j["forward_residuals"] = s.forward_residuals;
    j["identity_residuals"] = s.identity_residuals;
    j["fitted_order"] = s.fitted_order;
    j["order_threshold"] = refinement_order_threshold;
    j["decaying"] = s.decaying;
    j["floor"] = refinement_floor;
    j["at_floor"] = s.at_floor;
    return j;
}

ordered_json to_json(const GapReport& g) {
    ordered_json j;
    j["drift"] = g.drift_label;
    j["n_steps"] = g.n_steps;
    j["n_paths"] = g.n_paths;
    j["seed"] = g.seed;
    j["entropy_method"] = g.entropy_method;
    j["filter"] = g.filter_description;
    j["train_seed"] = g.train_seed;
    j["energy"] = to_json(g.energy);
    j["entropy"] = to_json(g.entropy);
    if (g.has_inverse_estimator) {
        j["entropy_inverse"] = to_json(g.entropy_inverse);
        j["estimators_agree"] = g.estimators_agree;
    } else {
        j["entropy_inverse"] = nullptr;
        j["estimators_agree"] = nullptr;
    }
    j["gap"] = to_json(g.gap);
    j["allowance"] = g.allowance;
    j["novikov"] = to_json(g.novikov);
    j["confidence"] = 0.99;
    j["verdict_rule"] = "invertible-consistent iff |gap| <= half_width + allowance + 1e-12; "
                        "non-invertible iff gap - half_width - allowance - 1e-12 > 0; else inconclusive";
    j["verdict"] = verdict_name(g.verdict);
    j["reason"] = g.reason;
    return j;
}

ordered_json to_json(const PreservationReport& p) {
    ordered_json j;
    j["n_paths"] = p.n_paths;
    j["time_indices"] = p.time_indices;
    j["times"] = p.times;
    j["pvalues"] = p.pvalues;
    j["p_threshold"] = p.p_threshold;
    j["covariance_residual"] = p.covariance_residual;
    j["covariance_threshold"] = p.covariance_threshold;
    j["pass"] = p.pass;
    return j;
}

ordered_json to_json(const BrownianityReport& b) {
    ordered_json j;
    j["n_increments"] = b.n_increments;
    j["variance_ratio"] = b.variance_ratio;
    j["variance_band"] = b.variance_band;
    j["autocorr"] = b.autocorr;
    j["autocorr_bands"] = b.autocorr_bands;
    j["pass"] = b.pass;
    return j;
}

std::string csv_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("failed to format number");
    return std::string(buf, p);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

} // namespace shiftlab
