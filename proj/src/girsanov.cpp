#include "shiftlab/girsanov.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "shiftlab/solver.hpp"

namespace shiftlab {

namespace {

double log_weight(const DensityPath& u_dot, const WienerPath& path, double sign) {
    if (!(u_dot.grid == path.grid))
        throw std::invalid_argument("log weight: density and path grids differ");
    for (std::size_t i = 0; i < u_dot.values.size(); ++i)
        if (!std::isfinite(u_dot.values[i])) throw numeric_error("log weight: non-finite drift value", i);
    const double total = sign * ito_sum(u_dot, path) - 0.5 * cm_norm_sq(u_dot);
    if (!std::isfinite(total)) throw numeric_error("log weight: non-finite accumulation", path.grid.n_steps);
    return total;
}

} // namespace

double log_rho_minus(const DensityPath& u_dot, const WienerPath& path) { return log_weight(u_dot, path, -1.0); }

double log_rho_minus(const AdaptedDrift& drift, const WienerPath& path) {
    return log_rho_minus(drift_path(drift, path), path);
}

double log_rho_plus(const DensityPath& u_dot, const WienerPath& path) { return log_weight(u_dot, path, 1.0); }

double log_rho_plus(const AdaptedDrift& drift, const WienerPath& path) {
    return log_rho_plus(drift_path(drift, path), path);
}

Estimate novikov_check(const AdaptedDrift& drift, const SampleBatch& batch, unsigned threads) {
    std::vector<double> logs(batch.count);
    parallel_for(batch.count, threads, [&](std::size_t j) {
        const WienerPath w = batch.path(j);
        logs[j] = log_rho_minus(drift, w);
    });
    const double shift = *std::max_element(logs.begin(), logs.end());
    std::vector<double> weights(batch.count);
    for (std::size_t j = 0; j < batch.count; ++j) weights[j] = std::exp(logs[j] - shift);
    Estimate e = mean_estimate(weights);
    const double scale = std::exp(shift);
    e.mean *= scale;
    e.half_width *= scale;
    return e;
}

double density_identity_residual(const AdaptedDrift& u, const AdaptedDrift& v, const WienerPath& path) {
    const ShiftResult forward = apply_shift(u, path);
    return log_rho_minus(v, forward.output) + log_rho_minus(u, path);
}

double density_identity_residual(const AdaptedDrift& u, const WienerPath& path) {
    const ShiftResult forward = apply_shift(u, path);
    const InverseResult inverse = solve_inverse_sde(u, forward.output);
    return log_rho_minus(inverse.drift_trace, forward.output) + log_rho_minus(u, path);
}

} // namespace shiftlab
