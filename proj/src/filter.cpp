#include "shiftlab/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shiftlab/numeric.hpp"
#include "shiftlab/solver.hpp"

namespace shiftlab {

std::string filter_method_name(FilterMethod m) {
    switch (m) {
    case FilterMethod::gaussian: return "gaussian";
    case FilterMethod::regression: return "regression";
    case FilterMethod::analytic: return "analytic";
    }
    throw std::logic_error("unknown filter method");
}

FilterMethod parse_filter_method(const std::string& name) {
    if (name == "gaussian") return FilterMethod::gaussian;
    if (name == "regression") return FilterMethod::regression;
    if (name == "analytic") return FilterMethod::analytic;
    throw std::invalid_argument("unknown filter method: '" + name + "'");
}

FilterMethod resolve_filter_method(const std::string& name, const AdaptedDrift& u) {
    if (name != "auto") return parse_filter_method(name);
    if (dynamic_cast<const LinearDrift*>(&u) != nullptr) return FilterMethod::gaussian;
    if (analytic_filter_available(u)) return FilterMethod::analytic;
    return FilterMethod::regression;
}

FilteredDrift gaussian_filter(double theta, const WienerPath& observed) {
    const TimeGrid& g = observed.grid;
    FilteredDrift f{g, std::vector<double>(g.n_steps), FilterMethod::gaussian};
    // The observation increments pin the latent path exactly:
    // latent_{i+1} = (1 + theta dt) latent_i + (obs_{i+1} - obs_i),
    // so the conditional mean of the drift is -theta * latent.
    double latent = 0.0;
    for (std::size_t i = 0; i < g.n_steps; ++i) {
        f.values[i] = -theta * latent;
        latent = (1.0 + theta * g.dt) * latent + (observed.values[i + 1] - observed.values[i]);
        if (!std::isfinite(latent)) throw numeric_error("gaussian_filter: non-finite reconstruction", i + 1);
    }
    return f;
}

bool analytic_filter_available(const AdaptedDrift& u) {
    if (dynamic_cast<const ZeroDrift*>(&u)) return true;
    if (dynamic_cast<const DeterministicDrift*>(&u)) return true;
    if (dynamic_cast<const LinearDrift*>(&u)) return true;
    if (const auto* stopped = dynamic_cast<const StoppedDrift*>(&u)) return analytic_filter_available(stopped->inner());
    return false;
}

FilteredDrift analytic_filter(const AdaptedDrift& u, const WienerPath& observed) {
    if (!analytic_filter_available(u))
        throw std::invalid_argument("analytic filter not available for drift '" + u.label() + "'");
    // For these drift families the observed path determines the latent path
    // one step at a time, so the conditional mean is the drift evaluated on
    // the reconstruction.
    const TimeGrid& g = observed.grid;
    FilteredDrift f{g, std::vector<double>(g.n_steps), FilterMethod::analytic};
    std::vector<double> latent(g.n_steps + 1, 0.0);
    for (std::size_t i = 0; i < g.n_steps; ++i) {
        f.values[i] = u.eval(g, i, latent);
        latent[i + 1] = latent[i] + (observed.values[i + 1] - observed.values[i]) - f.values[i] * g.dt;
        if (!std::isfinite(latent[i + 1])) throw numeric_error("analytic_filter: non-finite reconstruction", i + 1);
    }
    return f;
}

FeatureRule feature_rule_for(const AdaptedDrift& u) {
    if (const auto* ts = dynamic_cast<const TsirelsonDrift*>(&u)) {
        const unsigned depth = ts->depth();
        return {"(active cell, previous observed increment ratio)",
                [depth](const TimeGrid& g, std::size_t step, std::span<const double> v) {
                    const TsirelsonCell cell = tsirelson_cell(depth, g, step);
                    if (!cell.active) return std::pair<std::int64_t, double>{-1, 0.0};
                    const double len = g.dt * static_cast<double>(cell.prev_hi - cell.prev_lo);
                    const double ratio = (v[cell.prev_hi] - v[cell.prev_lo]) / len;
                    return std::pair<std::int64_t, double>{static_cast<std::int64_t>(cell.lo), ratio};
                }};
    }
    return {"(step, observed value)", [](const TimeGrid&, std::size_t step, std::span<const double> v) {
                return std::pair<std::int64_t, double>{static_cast<std::int64_t>(step), v[step]};
            }};
}

RegressionFilter::RegressionFilter(const AdaptedDrift& u, FeatureRule rule, const SampleBatch& train,
                                   unsigned threads)
    : grid_(train.grid), rule_(std::move(rule)) {
    if (!rule_.eval) throw std::invalid_argument("regression filter: empty feature rule");
    k_ = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(train.count))));
    if (k_ == 0) k_ = 1;

    struct Row {
        std::int64_t bucket;
        double x;
        double y;
    };
    std::vector<std::vector<Row>> per_path(train.count);
    parallel_for(train.count, threads, [&](std::size_t j) {
        const WienerPath w = train.path(j);
        const ShiftResult shifted = apply_shift(u, w);
        auto& out = per_path[j];
        bool have_prev = false;
        Row prev{0, 0.0, 0.0};
        for (std::size_t i = 0; i < grid_.n_steps; ++i) {
            const auto [bucket, x] = rule_.eval(grid_, i, shifted.output.values);
            if (!std::isfinite(x)) throw std::invalid_argument("regression filter: non-finite feature value");
            const Row row{bucket, x, shifted.drift_trace.values[i]};
            // Piecewise-constant drifts repeat the same (feature, target) pair
            // across a cell; one copy carries the same information.
            if (have_prev && row.bucket == prev.bucket && row.x == prev.x && row.y == prev.y) continue;
            out.push_back(row);
            prev = row;
            have_prev = true;
        }
    });

    std::map<std::int64_t, std::vector<std::pair<double, double>>> raw;
    for (const auto& rows : per_path)
        for (const Row& row : rows) raw[row.bucket].emplace_back(row.x, row.y);
    for (auto& [bucket, xy] : raw) {
        std::sort(xy.begin(), xy.end());
        Bucket b;
        b.x.resize(xy.size());
        b.prefix.resize(xy.size() + 1, 0.0);
        for (std::size_t i = 0; i < xy.size(); ++i) {
            b.x[i] = xy[i].first;
            b.prefix[i + 1] = b.prefix[i] + xy[i].second;
        }
        buckets_.emplace(bucket, std::move(b));
    }
}

namespace {

double knn_average(const std::vector<double>& xs, const std::vector<double>& prefix, double x, std::size_t k) {
    const std::size_t size = xs.size();
    const std::size_t take = std::min(k, size);
    std::size_t lo = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin());
    std::size_t hi = lo;
    while (hi - lo < take) {
        if (lo == 0) {
            ++hi;
        } else if (hi == size) {
            --lo;
        } else if (x - xs[lo - 1] <= xs[hi] - x) { // tie prefers the smaller value
            --lo;
        } else {
            ++hi;
        }
    }
    return (prefix[hi] - prefix[lo]) / static_cast<double>(take);
}

} // namespace

FilteredDrift RegressionFilter::filter(const WienerPath& observed) const {
    if (!(observed.grid == grid_)) throw std::invalid_argument("regression filter: grid mismatch");
    FilteredDrift f{grid_, std::vector<double>(grid_.n_steps), FilterMethod::regression};
    bool have_memo = false;
    std::int64_t memo_bucket = 0;
    double memo_x = 0.0, memo_value = 0.0;
    for (std::size_t i = 0; i < grid_.n_steps; ++i) {
        const auto [bucket, x] = rule_.eval(grid_, i, observed.values);
        if (have_memo && bucket == memo_bucket && x == memo_x) {
            f.values[i] = memo_value;
            continue;
        }
        const auto it = buckets_.find(bucket);
        if (it == buckets_.end()) throw std::invalid_argument("regression filter: unseen feature bucket");
        f.values[i] = knn_average(it->second.x, it->second.prefix, x, k_);
        have_memo = true;
        memo_bucket = bucket;
        memo_x = x;
        memo_value = f.values[i];
    }
    return f;
}

FilteredDrift regression_filter(const AdaptedDrift& u, const SampleBatch& train, const WienerPath& observed,
                                unsigned threads) {
    const RegressionFilter model(u, feature_rule_for(u), train, threads);
    return model.filter(observed);
}

FilterEngine::FilterEngine(const AdaptedDrift& u, FilterMethod method, const TimeGrid& grid,
                           std::size_t train_paths, std::uint64_t train_seed, unsigned threads)
    : drift_(&u), method_(method) {
    switch (method) {
    case FilterMethod::gaussian: {
        const auto* lin = dynamic_cast<const LinearDrift*>(&u);
        if (!lin) throw std::invalid_argument("gaussian filter requires a linear drift");
        theta_ = lin->theta();
        break;
    }
    case FilterMethod::analytic:
        if (!analytic_filter_available(u))
            throw std::invalid_argument("analytic filter not available for drift '" + u.label() + "'");
        break;
    case FilterMethod::regression: {
        if (train_paths == 0) throw std::invalid_argument("regression filter needs a nonempty training batch");
        train_seed_ = train_seed;
        const SampleBatch train = sample_paths(grid, train_paths, train_seed);
        model_.emplace(u, feature_rule_for(u), train, threads);
        break;
    }
    }
}

FilteredDrift FilterEngine::run(const WienerPath& observed) const {
    switch (method_) {
    case FilterMethod::gaussian: return gaussian_filter(theta_, observed);
    case FilterMethod::analytic: return analytic_filter(*drift_, observed);
    case FilterMethod::regression: return model_->filter(observed);
    }
    throw std::logic_error("unknown filter method");
}

std::string FilterEngine::description() const {
    switch (method_) {
    case FilterMethod::gaussian: return "gaussian, exact conditional mean of the linear model";
    case FilterMethod::analytic: return "analytic, closed-form conditional mean";
    case FilterMethod::regression:
        return "regression, k=" + std::to_string(model_->k()) + " nearest neighbors on features " +
               model_->feature_name();
    }
    throw std::logic_error("unknown filter method");
}

WienerPath innovation_path(const WienerPath& observed, const FilteredDrift& filtered) {
    if (!(observed.grid == filtered.grid)) throw std::invalid_argument("innovation_path: grid mismatch");
    const TimeGrid& g = observed.grid;
    WienerPath z{g, std::vector<double>(g.n_steps + 1, 0.0)};
    double primitive = 0.0;
    for (std::size_t i = 0; i < g.n_steps; ++i) {
        primitive += filtered.values[i] * g.dt;
        z.values[i + 1] = observed.values[i + 1] - primitive;
    }
    return z;
}

double conditional_girsanov(const FilteredDrift& filtered, const WienerPath& z, std::size_t t_index) {
    if (!(filtered.grid == z.grid)) throw std::invalid_argument("conditional_girsanov: grid mismatch");
    if (t_index > filtered.grid.n_steps) throw std::invalid_argument("conditional_girsanov: index out of range");
    if (t_index == 0) return 0.0;
    std::vector<double> ito_terms(t_index), sq_terms(t_index);
    for (std::size_t j = 0; j < t_index; ++j) {
        ito_terms[j] = filtered.values[j] * (z.values[j + 1] - z.values[j]);
        sq_terms[j] = filtered.values[j] * filtered.values[j] * filtered.grid.dt;
    }
    return -pairwise_sum(ito_terms) - 0.5 * pairwise_sum(sq_terms);
}

namespace {

const TimeGrid& common_grid(const std::vector<WienerPath>& paths, const char* who) {
    if (paths.empty()) throw std::invalid_argument(std::string(who) + ": empty batch");
    const TimeGrid& g = paths.front().grid;
    for (const auto& p : paths)
        if (!(p.grid == g)) throw std::invalid_argument(std::string(who) + ": paths on different grids");
    return g;
}

} // namespace

PreservationReport measure_preservation_test(const std::vector<WienerPath>& paths) {
    const TimeGrid& g = common_grid(paths, "measure_preservation_test");
    const std::size_t n = g.n_steps;
    const std::size_t n_paths = paths.size();

    PreservationReport rep;
    rep.n_paths = n_paths;
    const std::size_t marks = std::min<std::size_t>(8, n);
    for (std::size_t m = 1; m <= marks; ++m) rep.time_indices.push_back(m * n / marks);
    for (const std::size_t idx : rep.time_indices) rep.times.push_back(g.times[idx]);

    std::vector<double> sample(n_paths);
    for (const std::size_t idx : rep.time_indices) {
        const double scale = 1.0 / std::sqrt(g.times[idx]);
        for (std::size_t j = 0; j < n_paths; ++j) sample[j] = paths[j].values[idx] * scale;
        rep.pvalues.push_back(ks_pvalue(ks_statistic_normal(sample), n_paths));
    }

    std::vector<double> products(n_paths);
    for (std::size_t a = 0; a < rep.time_indices.size(); ++a) {
        for (std::size_t b = a; b < rep.time_indices.size(); ++b) {
            const std::size_t ia = rep.time_indices[a], ib = rep.time_indices[b];
            for (std::size_t j = 0; j < n_paths; ++j) products[j] = paths[j].values[ia] * paths[j].values[ib];
            const double emp = pairwise_sum(products) / static_cast<double>(n_paths);
            rep.covariance_residual = std::max(rep.covariance_residual, std::abs(emp - g.times[ia]));
        }
    }
    rep.covariance_threshold = 5.0 / std::sqrt(static_cast<double>(n_paths));

    bool ok = rep.covariance_residual < rep.covariance_threshold;
    for (const double p : rep.pvalues) ok = ok && p > rep.p_threshold;
    rep.pass = ok;
    return rep;
}

BrownianityReport brownianity_test(const std::vector<WienerPath>& paths) {
    const TimeGrid& g = common_grid(paths, "brownianity_test");
    const std::size_t n = g.n_steps;
    const std::size_t n_paths = paths.size();

    BrownianityReport rep;
    rep.n_increments = n_paths * n;
    std::vector<double> buf(rep.n_increments);
    for (std::size_t j = 0; j < n_paths; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            const double d = paths[j].values[i + 1] - paths[j].values[i];
            buf[j * n + i] = d * d;
        }
    rep.variance_ratio = pairwise_sum(buf) / (static_cast<double>(rep.n_increments) * g.dt);
    rep.variance_band = z99 * std::sqrt(2.0 / static_cast<double>(rep.n_increments));

    const std::size_t max_lag = std::min<std::size_t>(4, n > 0 ? n - 1 : 0);
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        const std::size_t pairs = n_paths * (n - lag);
        std::vector<double> prod(pairs);
        std::size_t pos = 0;
        for (std::size_t j = 0; j < n_paths; ++j)
            for (std::size_t i = 0; i + lag < n; ++i) {
                const double a = paths[j].values[i + 1] - paths[j].values[i];
                const double b = paths[j].values[i + lag + 1] - paths[j].values[i + lag];
                prod[pos++] = a * b;
            }
        rep.autocorr.push_back(pairwise_sum(prod) / (static_cast<double>(pairs) * g.dt));
        rep.autocorr_bands.push_back(z99 / std::sqrt(static_cast<double>(pairs)));
    }

    bool ok = std::abs(rep.variance_ratio - 1.0) <= rep.variance_band;
    for (std::size_t l = 0; l < rep.autocorr.size(); ++l) ok = ok && std::abs(rep.autocorr[l]) <= rep.autocorr_bands[l];
    rep.pass = ok;
    return rep;
}

} // namespace shiftlab
