#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shiftlab/drift.hpp"
#include "shiftlab/filter.hpp"
#include "shiftlab/grid.hpp"
#include "shiftlab/numeric.hpp"

namespace shiftlab {

// Monte Carlo mean of half the squared drift norm along sampled paths.
Estimate energy(const AdaptedDrift& u, const SampleBatch& batch, unsigned threads = 1);

// Mean of half the squared filtered-drift norm; valid with or without an
// inverse, inherits the filter's bias.
Estimate entropy_via_filter(const std::vector<FilteredDrift>& filtered);

// Mean of the log inverse-weight along shifted paths; trustworthy only when
// (u, v) genuinely invert each other. The one-argument form realizes v by
// solving the inverse equation on each shifted path.
Estimate entropy_via_inverse(const AdaptedDrift& u, const AdaptedDrift& v, const SampleBatch& batch,
                             unsigned threads = 1);
Estimate entropy_via_inverse(const AdaptedDrift& u, const SampleBatch& batch, unsigned threads = 1);

enum class Verdict { invertible_consistent, non_invertible, inconclusive };

std::string verdict_name(Verdict v);

// Absolute slack added to the verdict threshold so a gap at rounding level
// can never decide against invertibility.
inline constexpr double gap_rounding_floor = 1e-12;

struct CertifyOptions {
    double regression_allowance_frac = 0.10; // allowance as a fraction of the entropy mean
    std::size_t train_paths = 0;             // 0: match the evaluation batch size
    unsigned threads = 1;
    bool with_inverse_estimator = true;
    bool keep_per_path = false;
};

struct GapReport {
    Estimate energy;
    Estimate entropy;
    Estimate gap; // mean pinned to energy.mean - entropy.mean; paired half-width
    Estimate novikov;
    Estimate entropy_inverse;
    bool has_inverse_estimator = false;
    bool estimators_agree = true;
    std::string drift_label;
    std::string entropy_method;
    std::string filter_description;
    double allowance = 0.0;
    Verdict verdict = Verdict::inconclusive;
    std::string reason;
    std::size_t n_steps = 0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    std::uint64_t train_seed = 0; // regression only
    std::vector<double> per_path_energy;
    std::vector<double> per_path_entropy;
};

// The invertibility certificate: energy vs filtered entropy with a paired
// confidence interval and pre-registered verdict rules.
GapReport certify(const AdaptedDrift& u, FilterMethod method, const SampleBatch& batch,
                  const CertifyOptions& opt = {});

} // namespace shiftlab
