#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shiftlab/drift.hpp"
#include "shiftlab/grid.hpp"

namespace shiftlab {

enum class FilterMethod { gaussian, regression, analytic };

std::string filter_method_name(FilterMethod m);
FilterMethod parse_filter_method(const std::string& name);

// Picks a method for the "auto" setting: gaussian for linear drifts,
// otherwise the exact sequential reconstruction when the drift family
// supports it, otherwise regression.
FilterMethod resolve_filter_method(const std::string& name, const AdaptedDrift& u);

// Pathwise estimate of the conditional drift given the observed transformed
// path up to each step.
struct FilteredDrift {
    TimeGrid grid;
    std::vector<double> values;
    FilterMethod method = FilterMethod::analytic;
};

// Exact conditional mean for the linear drift model. The discrete observation
// model determines the latent path uniquely, so Gaussian conditioning
// collapses to a closed-form reconstruction; accepts any observed path.
FilteredDrift gaussian_filter(double theta, const WienerPath& observed);

// Exact filters where the conditional mean has a closed form: zero and
// deterministic densities, and their stopped variants (the latent path is
// sequentially recoverable from the observation, so the stopping indicator is
// observable too).
FilteredDrift analytic_filter(const AdaptedDrift& u, const WienerPath& observed);
bool analytic_filter_available(const AdaptedDrift& u);

// Declared per-drift summary of the observed prefix that the regression
// conditions on: a discrete bucket plus one scalar. Must read only prefix
// entries 0..step.
struct FeatureRule {
    std::string name;
    std::function<std::pair<std::int64_t, double>(const TimeGrid&, std::size_t, std::span<const double>)> eval;
};

FeatureRule feature_rule_for(const AdaptedDrift& u);

// k-nearest-neighbor regression of the drift value on declared features of
// the observed prefix, trained on simulated (latent, observed) pairs.
class RegressionFilter {
public:
    RegressionFilter(const AdaptedDrift& u, FeatureRule rule, const SampleBatch& train, unsigned threads = 1);

    FilteredDrift filter(const WienerPath& observed) const;

    std::size_t k() const { return k_; }
    const std::string& feature_name() const { return rule_.name; }
    const TimeGrid& grid() const { return grid_; }

private:
    struct Bucket {
        std::vector<double> x;      // sorted feature scalars
        std::vector<double> prefix; // prefix sums of the aligned targets
    };

    TimeGrid grid_;
    FeatureRule rule_;
    std::size_t k_;
    std::map<std::int64_t, Bucket> buckets_;
};

// Train-and-apply convenience with the drift's declared features.
FilteredDrift regression_filter(const AdaptedDrift& u, const SampleBatch& train, const WienerPath& observed,
                                unsigned threads = 1);

// One object that owns whatever state the chosen method needs; run() is pure
// and safe to call concurrently. The drift must outlive the engine.
class FilterEngine {
public:
    FilterEngine(const AdaptedDrift& u, FilterMethod method, const TimeGrid& grid, std::size_t train_paths,
                 std::uint64_t train_seed, unsigned threads = 1);

    FilteredDrift run(const WienerPath& observed) const;

    FilterMethod method() const { return method_; }
    bool exact() const { return method_ != FilterMethod::regression; }
    std::uint64_t train_seed() const { return train_seed_; }
    std::string description() const;

private:
    const AdaptedDrift* drift_;
    FilterMethod method_;
    double theta_ = 0.0;
    std::uint64_t train_seed_ = 0;
    std::optional<RegressionFilter> model_;
};

// Observed path minus the running primitive of the filtered drift.
WienerPath innovation_path(const WienerPath& observed, const FilteredDrift& filtered);

// Log of the conditional weight up to t_index:
// -sum_{j<t_index} f_j dz_j - 1/2 sum_{j<t_index} f_j^2 dt.
double conditional_girsanov(const FilteredDrift& filtered, const WienerPath& z, std::size_t t_index);

// Marginal normality at a spread of grid times plus covariance agreement
// with s ^ t, for paths that claim to be Brownian under the Wiener measure.
struct PreservationReport {
    std::vector<std::size_t> time_indices;
    std::vector<double> times;
    std::vector<double> pvalues;
    double p_threshold = 1e-3;
    double covariance_residual = 0.0;
    double covariance_threshold = 0.0; // 5 / sqrt(n_paths)
    std::size_t n_paths = 0;
    bool pass = false;
};

PreservationReport measure_preservation_test(const std::vector<WienerPath>& paths);

// Pooled increment variance and per-lag autocorrelation against CLT bands.
struct BrownianityReport {
    std::size_t n_increments = 0;
    double variance_ratio = 0.0; // mean increment^2 / dt
    double variance_band = 0.0;  // z99 * sqrt(2 / n_increments)
    std::vector<double> autocorr;
    std::vector<double> autocorr_bands;
    bool pass = false;
};

BrownianityReport brownianity_test(const std::vector<WienerPath>& paths);

} // namespace shiftlab
