#include "shiftlab/entropy.hpp"

#include <cmath>
#include <stdexcept>

#include "shiftlab/girsanov.hpp"
#include "shiftlab/rng.hpp"
#include "shiftlab/solver.hpp"

namespace shiftlab {

namespace {

double half_norm_sq(const DensityPath& d) { return 0.5 * cm_norm_sq(d); }

} // namespace

Estimate energy(const AdaptedDrift& u, const SampleBatch& batch, unsigned threads) {
    std::vector<double> samples(batch.count);
    parallel_for(batch.count, threads, [&](std::size_t j) {
        const WienerPath w = batch.path(j);
        samples[j] = half_norm_sq(drift_path(u, w));
    });
    return mean_estimate(samples);
}

Estimate entropy_via_filter(const std::vector<FilteredDrift>& filtered) {
    if (filtered.empty()) throw std::invalid_argument("entropy_via_filter: empty batch");
    const TimeGrid& g = filtered.front().grid;
    std::vector<double> samples(filtered.size());
    for (std::size_t j = 0; j < filtered.size(); ++j) {
        if (!(filtered[j].grid == g)) throw std::invalid_argument("entropy_via_filter: grids differ");
        samples[j] = half_norm_sq(DensityPath{g, filtered[j].values});
    }
    return mean_estimate(samples);
}

Estimate entropy_via_inverse(const AdaptedDrift& u, const AdaptedDrift& v, const SampleBatch& batch,
                             unsigned threads) {
    std::vector<double> samples(batch.count);
    parallel_for(batch.count, threads, [&](std::size_t j) {
        const WienerPath w = batch.path(j);
        const ShiftResult forward = apply_shift(u, w);
        samples[j] = log_rho_minus(v, forward.output);
    });
    return mean_estimate(samples);
}

Estimate entropy_via_inverse(const AdaptedDrift& u, const SampleBatch& batch, unsigned threads) {
    std::vector<double> samples(batch.count);
    parallel_for(batch.count, threads, [&](std::size_t j) {
        const WienerPath w = batch.path(j);
        const ShiftResult forward = apply_shift(u, w);
        const InverseResult inverse = solve_inverse_sde(u, forward.output);
        samples[j] = log_rho_minus(inverse.drift_trace, forward.output);
    });
    return mean_estimate(samples);
}

std::string verdict_name(Verdict v) {
    switch (v) {
    case Verdict::invertible_consistent: return "invertible-consistent";
    case Verdict::non_invertible: return "non-invertible";
    case Verdict::inconclusive: return "inconclusive";
    }
    throw std::logic_error("unknown verdict");
}

GapReport certify(const AdaptedDrift& u, FilterMethod method, const SampleBatch& batch, const CertifyOptions& opt) {
    GapReport rep;
    rep.drift_label = u.label();
    rep.entropy_method = filter_method_name(method);
    rep.n_steps = batch.grid.n_steps;
    rep.n_paths = batch.count;
    rep.seed = batch.seed;

    const std::size_t train_paths = opt.train_paths == 0 ? batch.count : opt.train_paths;
    const std::uint64_t train_seed =
        method == FilterMethod::regression ? rng::stream_key(batch.seed, 0x66696c74u) : 0;
    const FilterEngine engine(u, method, batch.grid, train_paths, train_seed, opt.threads);
    rep.filter_description = engine.description();
    rep.train_seed = engine.train_seed();

    std::vector<double> e_j(batch.count), h_j(batch.count), gap_j(batch.count), li_j;
    if (opt.with_inverse_estimator) li_j.resize(batch.count);
    parallel_for(batch.count, opt.threads, [&](std::size_t j) {
        const WienerPath w = batch.path(j);
        const ShiftResult forward = apply_shift(u, w);
        e_j[j] = half_norm_sq(forward.drift_trace);
        const FilteredDrift f = engine.run(forward.output);
        h_j[j] = half_norm_sq(DensityPath{batch.grid, f.values});
        gap_j[j] = e_j[j] - h_j[j];
        if (opt.with_inverse_estimator) {
            const InverseResult inverse = solve_inverse_sde(u, forward.output);
            li_j[j] = log_rho_minus(inverse.drift_trace, forward.output);
        }
    });

    rep.energy = mean_estimate(e_j);
    rep.entropy = mean_estimate(h_j);
    rep.gap = mean_estimate(gap_j);
    rep.gap.mean = rep.energy.mean - rep.entropy.mean;
    if (opt.with_inverse_estimator) {
        rep.entropy_inverse = mean_estimate(li_j);
        rep.has_inverse_estimator = true;
        rep.estimators_agree = std::abs(rep.entropy.mean - rep.entropy_inverse.mean) <=
                               rep.entropy.half_width + rep.entropy_inverse.half_width;
    }
    if (opt.keep_per_path) {
        rep.per_path_energy = std::move(e_j);
        rep.per_path_entropy = std::move(h_j);
    }

    rep.allowance = engine.exact() ? 0.0 : opt.regression_allowance_frac * rep.entropy.mean;

    rep.novikov = novikov_check(u, batch, opt.threads);
    if (std::abs(rep.novikov.mean - 1.0) > rep.novikov.half_width) {
        rep.verdict = Verdict::inconclusive;
        rep.reason = "weight mean strays from 1 beyond its interval; the change of measure is suspect";
        return rep;
    }

    // An exact filter recomputes the energy through different arithmetic, so
    // the paired gap can be a few ulps wide with an even narrower interval;
    // the rounding floor keeps such gaps from deciding anything.
    const double tol = rep.gap.half_width + rep.allowance + gap_rounding_floor;
    if (std::abs(rep.gap.mean) <= tol) {
        rep.verdict = Verdict::invertible_consistent;
    } else if (rep.gap.mean - tol > 0.0) {
        rep.verdict = Verdict::non_invertible;
    } else {
        rep.verdict = Verdict::inconclusive;
        rep.reason = "gap interval straddles the decision boundary";
    }
    return rep;
}

} // namespace shiftlab
