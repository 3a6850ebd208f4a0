#include "shiftlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "shiftlab/girsanov.hpp"
#include "shiftlab/numeric.hpp"

namespace shiftlab {

ShiftResult apply_shift(const AdaptedDrift& u, const WienerPath& w) {
    const TimeGrid& g = w.grid;
    const std::size_t n = g.n_steps;
    ShiftResult r{WienerPath{g, std::vector<double>(n + 1, 0.0)}, DensityPath{g, std::vector<double>(n)}};
    for (std::size_t i = 0; i < n; ++i) {
        const double d = u.eval(g, i, w.values);
        if (!std::isfinite(d)) throw numeric_error("apply_shift: non-finite drift value", i);
        r.drift_trace.values[i] = d;
        r.output.values[i + 1] = r.output.values[i] + (w.values[i + 1] - w.values[i]) + d * g.dt;
        if (!std::isfinite(r.output.values[i + 1])) throw numeric_error("apply_shift: non-finite state", i + 1);
    }
    return r;
}

InverseResult solve_inverse_sde(const AdaptedDrift& u, const WienerPath& w) {
    const TimeGrid& g = w.grid;
    const std::size_t n = g.n_steps;
    InverseResult r{WienerPath{g, std::vector<double>(n + 1, 0.0)}, DensityPath{g, std::vector<double>(n)}, true, 1};
    for (std::size_t i = 0; i < n; ++i) {
        // The drift reads the solution prefix, so each step closes over what
        // was already produced; entries past i are still zero placeholders.
        const double d = u.eval(g, i, r.output.values);
        if (!std::isfinite(d)) throw numeric_error("solve_inverse_sde: non-finite drift value", i);
        r.drift_trace.values[i] = -d;
        r.output.values[i + 1] = r.output.values[i] - d * g.dt + (w.values[i + 1] - w.values[i]);
        if (!std::isfinite(r.output.values[i + 1])) throw numeric_error("solve_inverse_sde: non-finite state", i + 1);
    }
    return r;
}

InverseResult picard_inverse(const AdaptedDrift& u, const WienerPath& w, std::size_t max_iter, double tol) {
    if (max_iter == 0) throw std::invalid_argument("picard_inverse: max_iter must be >= 1");
    const TimeGrid& g = w.grid;
    const std::size_t n = g.n_steps;
    WienerPath x{g, w.values};
    WienerPath next{g, std::vector<double>(n + 1, 0.0)};
    DensityPath trace{g, std::vector<double>(n)};
    bool converged = false;
    std::size_t it = 0;
    while (it < max_iter) {
        ++it;
        double primitive = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = u.eval(g, i, x.values);
            if (!std::isfinite(d)) throw numeric_error("picard_inverse: non-finite drift value", i);
            trace.values[i] = -d;
            primitive += d * g.dt;
            next.values[i + 1] = w.values[i + 1] - primitive;
        }
        const double change = sup_distance(next, x);
        x.values.swap(next.values);
        if (change < tol) {
            converged = true;
            break;
        }
    }
    return {std::move(x), std::move(trace), converged, it};
}

ResidualPair inverse_residuals(const AdaptedDrift& u, const SampleBatch& batch, unsigned threads) {
    std::vector<double> left(batch.count), right(batch.count);
    parallel_for(batch.count, threads, [&](std::size_t j) {
        const WienerPath w = batch.path(j);
        const ShiftResult forward = apply_shift(u, w);
        left[j] = sup_distance(solve_inverse_sde(u, forward.output).output, w);
        const InverseResult inverse = solve_inverse_sde(u, w);
        right[j] = sup_distance(apply_shift(u, inverse.output).output, w);
    });
    ResidualPair out;
    for (std::size_t j = 0; j < batch.count; ++j) {
        out.left = std::max(out.left, left[j]);
        out.right = std::max(out.right, right[j]);
    }
    return out;
}

StoppedInverseResult stopped_inverse(const AdaptedDrift& u, const StoppingTime& tau, const WienerPath& w) {
    const std::shared_ptr<const AdaptedDrift> inner(&u, [](const AdaptedDrift*) {});
    const std::shared_ptr<const StoppingTime> rule(&tau, [](const StoppingTime*) {});
    const StoppedDrift stopped(inner, rule);
    InverseResult inv = solve_inverse_sde(stopped, w);
    StoppedInverseResult out{std::move(inv.output), std::move(inv.drift_trace), 0};
    out.stop_index = stopping_index(tau, out.output);
    return out;
}

namespace {

double alpha_residual_against(const StoppedInverseResult& s, const StoppingTime& tau, const WienerPath& w,
                              const std::function<double(std::size_t)>& inverse_drift_at) {
    double worst = 0.0;
    for (std::size_t i = 0; i < w.grid.n_steps; ++i) {
        const bool active = !tau.stopped_by(w.grid, i, s.output.values);
        const double rhs = active ? inverse_drift_at(i) : 0.0;
        worst = std::max(worst, std::abs(s.drift_trace.values[i] - rhs));
    }
    return worst;
}

} // namespace

double alpha_identity_residual(const AdaptedDrift& u, const AdaptedDrift& v, const StoppingTime& tau,
                               const WienerPath& w) {
    const StoppedInverseResult s = stopped_inverse(u, tau, w);
    return alpha_residual_against(s, tau, w,
                                  [&](std::size_t i) { return v.eval(w.grid, i, s.output.values); });
}

double alpha_identity_residual(const AdaptedDrift& u, const StoppingTime& tau, const WienerPath& w) {
    const StoppedInverseResult s = stopped_inverse(u, tau, w);
    const InverseResult v = solve_inverse_sde(u, w);
    return alpha_residual_against(s, tau, w, [&](std::size_t i) { return v.drift_trace.values[i]; });
}

namespace {

std::vector<double> restrict_values(const std::vector<double>& fine, std::size_t stride, std::size_t coarse_n) {
    std::vector<double> out(coarse_n + 1);
    for (std::size_t i = 0; i <= coarse_n; ++i) out[i] = fine[i * stride];
    return out;
}

} // namespace

RefinementStudy refinement_study(const DriftFactory& make_drift, std::vector<std::size_t> grids,
                                 std::size_t reference_steps, std::size_t n_paths, std::uint64_t seed,
                                 unsigned threads) {
    if (!make_drift) throw std::invalid_argument("refinement_study: missing drift factory");
    if (grids.empty()) throw std::invalid_argument("refinement_study: need at least one grid");
    if (n_paths == 0) throw std::invalid_argument("refinement_study: need at least one path");
    std::sort(grids.begin(), grids.end());
    if (std::adjacent_find(grids.begin(), grids.end()) != grids.end())
        throw std::invalid_argument("refinement_study: duplicate grid sizes");
    for (const std::size_t n : grids) {
        if (n == 0) throw std::invalid_argument("refinement_study: grid size must be positive");
        if (reference_steps % n != 0)
            throw std::invalid_argument("refinement_study: reference grid must refine every coarse grid");
    }

    const TimeGrid fine(reference_steps);
    const auto u_fine = make_drift(fine);
    if (!u_fine) throw std::invalid_argument("refinement_study: drift factory returned null");
    const SampleBatch batch = sample_paths(fine, n_paths, seed);

    struct CoarseSetup {
        TimeGrid grid;
        std::shared_ptr<const AdaptedDrift> drift;
        std::size_t stride;
    };
    std::vector<CoarseSetup> setups;
    setups.reserve(grids.size());
    for (const std::size_t n : grids) {
        TimeGrid g(n);
        auto d = make_drift(g);
        if (!d) throw std::invalid_argument("refinement_study: drift factory returned null");
        setups.push_back({g, std::move(d), reference_steps / n});
    }

    const std::size_t g_count = grids.size();
    std::vector<double> inv(g_count * n_paths), fwd(g_count * n_paths), ident(g_count * n_paths);
    parallel_for(n_paths, threads, [&](std::size_t j) {
        const WienerPath w = batch.path(j);
        const ShiftResult fine_shift = apply_shift(*u_fine, w);
        for (std::size_t g = 0; g < g_count; ++g) {
            const CoarseSetup& s = setups[g];
            const WienerPath w_c{s.grid, restrict_values(w.values, s.stride, s.grid.n_steps)};
            const WienerPath y_c{s.grid, restrict_values(fine_shift.output.values, s.stride, s.grid.n_steps)};
            const InverseResult v = solve_inverse_sde(*s.drift, y_c);
            inv[g * n_paths + j] = sup_distance(v.output, w_c);
            fwd[g * n_paths + j] = sup_distance(apply_shift(*s.drift, w_c).output, y_c);
            ident[g * n_paths + j] = std::abs(log_rho_minus(v.drift_trace, y_c) + log_rho_minus(*s.drift, w_c));
        }
    });

    RefinementStudy study;
    study.reference_steps = reference_steps;
    study.n_paths = n_paths;
    study.grids = grids;
    study.inverse_residuals.resize(g_count);
    study.forward_residuals.resize(g_count);
    study.identity_residuals.resize(g_count);
    for (std::size_t g = 0; g < g_count; ++g) {
        const std::span<const double> inv_g(inv.data() + g * n_paths, n_paths);
        const std::span<const double> fwd_g(fwd.data() + g * n_paths, n_paths);
        const std::span<const double> ident_g(ident.data() + g * n_paths, n_paths);
        study.inverse_residuals[g] = *std::max_element(inv_g.begin(), inv_g.end());
        study.forward_residuals[g] = *std::max_element(fwd_g.begin(), fwd_g.end());
        study.identity_residuals[g] = pairwise_sum(ident_g) / static_cast<double>(n_paths);
    }

    if (g_count >= 2) {
        // Slope of log residual against log dt; a positive slope means the
        // residual shrinks as the grid refines.
        std::vector<double> xs(g_count), ys(g_count);
        for (std::size_t g = 0; g < g_count; ++g) {
            xs[g] = -std::log(static_cast<double>(grids[g]));
            ys[g] = std::log(std::max(study.inverse_residuals[g], 1e-300));
        }
        const double xbar = pairwise_sum(xs) / static_cast<double>(g_count);
        const double ybar = pairwise_sum(ys) / static_cast<double>(g_count);
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t g = 0; g < g_count; ++g) {
            sxy += (xs[g] - xbar) * (ys[g] - ybar);
            sxx += (xs[g] - xbar) * (xs[g] - xbar);
        }
        study.fitted_order = sxy / sxx;
    }
    study.at_floor = *std::max_element(study.inverse_residuals.begin(), study.inverse_residuals.end()) <=
                     refinement_floor;
    // At the floor every residual is rounding noise, so the fitted slope
    // carries no signal and must not be read as decay.
    study.decaying = !study.at_floor && study.fitted_order >= refinement_order_threshold;
    return study;
}

} // namespace shiftlab
