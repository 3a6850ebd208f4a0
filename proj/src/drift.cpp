#include "shiftlab/drift.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "shiftlab/rng.hpp"

namespace shiftlab {

namespace {

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace

DeterministicDrift::DeterministicDrift(DensityPath h, std::string label)
    : h_(std::move(h)), label_(std::move(label)) {}

double DeterministicDrift::eval(const TimeGrid& grid, std::size_t step, std::span<const double>) const {
    if (!(grid == h_.grid))
        throw std::invalid_argument("deterministic drift evaluated on a different grid than its density");
    return h_.values[step];
}

LinearDrift::LinearDrift(double theta) : theta_(theta) {}

std::string LinearDrift::label() const { return "linear theta=" + fmt_num(theta_); }

TsirelsonDrift::TsirelsonDrift(unsigned depth) : depth_(depth) {
    if (depth == 0) throw std::invalid_argument("tsirelson drift: depth must be >= 1");
    if (depth >= 60) throw std::invalid_argument("tsirelson drift: depth too large");
}

std::string TsirelsonDrift::label() const { return "tsirelson K=" + std::to_string(depth_); }

TsirelsonCell tsirelson_cell(unsigned depth, const TimeGrid& grid, std::size_t step) {
    const std::size_t n = grid.n_steps;
    const std::size_t span = std::size_t{1} << depth;
    if (n % span != 0)
        throw std::invalid_argument("tsirelson drift: grid does not resolve 2^-K");
    TsirelsonCell cell;
    // Index of the truncation point 2^-K; cells below it carry no drift.
    const std::size_t base = n / span;
    if (step < base) return cell;
    // Left boundary of the cell containing this step; boundaries are
    // grid-aligned because n is a multiple of 2^K.
    std::size_t lo = n / 2;
    while (step < lo) lo /= 2;
    // The previous increment spans (t_{k-2}, t_{k-1}]; on the first active
    // cell it ends at the truncation point, which the grid resolves only when
    // n is a multiple of 2^(K+1).
    if (lo == base && n % (2 * span) != 0) return cell;
    cell.active = true;
    cell.lo = lo;
    cell.prev_hi = lo;
    cell.prev_lo = lo / 2;
    return cell;
}

double TsirelsonDrift::eval(const TimeGrid& grid, std::size_t step, std::span<const double> values) const {
    const TsirelsonCell cell = tsirelson_cell(depth_, grid, step);
    if (!cell.active) return 0.0;
    const double len = grid.dt * static_cast<double>(cell.prev_hi - cell.prev_lo);
    const double ratio = (values[cell.prev_hi] - values[cell.prev_lo]) / len;
    return ratio - std::floor(ratio);
}

double TsirelsonDrift::active_length(const TimeGrid& grid) const {
    const std::size_t n = grid.n_steps;
    const std::size_t span = std::size_t{1} << depth_;
    if (n % span != 0)
        throw std::invalid_argument("tsirelson drift: grid does not resolve 2^-K");
    const double trunc = 1.0 / static_cast<double>(span);
    if (n % (2 * span) != 0) return 1.0 - 2.0 * trunc; // first active cell is zero
    return 1.0 - trunc;
}

StoppedDrift::StoppedDrift(std::shared_ptr<const AdaptedDrift> inner, std::shared_ptr<const StoppingTime> tau)
    : inner_(std::move(inner)), tau_(std::move(tau)) {
    if (!inner_ || !tau_) throw std::invalid_argument("stopped drift: null component");
}

double StoppedDrift::eval(const TimeGrid& grid, std::size_t step, std::span<const double> values) const {
    if (tau_->stopped_by(grid, step, values)) return 0.0;
    return inner_->eval(grid, step, values);
}

std::string StoppedDrift::label() const {
    return "stopped inner=" + inner_->label() + " tau=" + tau_->label();
}

ConstantTime::ConstantTime(double a) : a_(a) {
    if (a < 0.0 || a > 1.0) throw std::invalid_argument("constant stopping time must lie in [0,1]");
}

bool ConstantTime::stopped_by(const TimeGrid& grid, std::size_t step, std::span<const double>) const {
    // Snap an off-grid time down to the last grid point not past it.
    const double scaled = a_ * static_cast<double>(grid.n_steps);
    const auto k = static_cast<std::size_t>(std::floor(scaled + 1e-12));
    return step >= std::min<std::size_t>(k, grid.n_steps);
}

std::string ConstantTime::label() const { return "const a=" + fmt_num(a_); }

FirstHitting::FirstHitting(double level) : b_(level) {
    if (level < 0.0) throw std::invalid_argument("hitting level must be nonnegative");
}

bool FirstHitting::stopped_by(const TimeGrid&, std::size_t step, std::span<const double> values) const {
    for (std::size_t k = 0; k <= step; ++k)
        if (std::abs(values[k]) >= b_) return true;
    return false;
}

std::string FirstHitting::label() const { return "hit b=" + fmt_num(b_); }

DensityPath drift_path(const AdaptedDrift& drift, const WienerPath& path) {
    DensityPath out{path.grid, std::vector<double>(path.grid.n_steps)};
    for (std::size_t i = 0; i < path.grid.n_steps; ++i)
        out.values[i] = drift.eval(path.grid, i, path.values);
    return out;
}

namespace {

template <typename Eval>
bool suffix_corruption_holds(const WienerPath& path, std::size_t trials, std::uint64_t seed, Eval&& eval) {
    const std::size_t n = path.grid.n_steps;
    std::vector<double> scratch(path.values);
    for (std::size_t i = 0; i < n; ++i) {
        const auto baseline = eval(i, std::span<const double>(path.values));
        for (std::size_t t = 0; t < trials; ++t) {
            const std::uint64_t key = rng::stream_key(seed, i * trials + t);
            for (std::size_t j = i + 1; j <= n; ++j)
                scratch[j] = 10.0 * rng::gaussian(key, j);
            const auto corrupted = eval(i, std::span<const double>(scratch));
            if (corrupted != baseline) return false;
        }
        for (std::size_t j = i + 1; j <= n; ++j) scratch[j] = path.values[j];
    }
    return true;
}

} // namespace

bool causality_check(const AdaptedDrift& drift, const WienerPath& path, std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw std::invalid_argument("causality_check: trials must be >= 1");
    return suffix_corruption_holds(path, trials, seed, [&](std::size_t i, std::span<const double> v) {
        return drift.eval(path.grid, i, v);
    });
}

bool causality_check(const StoppingTime& tau, const WienerPath& path, std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw std::invalid_argument("causality_check: trials must be >= 1");
    return suffix_corruption_holds(path, trials, seed, [&](std::size_t i, std::span<const double> v) {
        return tau.stopped_by(path.grid, i, v);
    });
}

std::size_t stopping_index(const StoppingTime& tau, const WienerPath& path) {
    const std::size_t n = path.grid.n_steps;
    for (std::size_t k = 0; k <= n; ++k)
        if (tau.stopped_by(path.grid, k, path.values)) return k;
    return n;
}

bool drift_stable_on_grid(const AdaptedDrift& drift, const TimeGrid& grid) {
    if (const auto* ts = dynamic_cast<const TsirelsonDrift*>(&drift)) {
        const auto window = std::size_t{1} << (ts->depth() + 1);
        return grid.n_steps % window == 0;
    }
    if (const auto* st = dynamic_cast<const StoppedDrift*>(&drift))
        return drift_stable_on_grid(st->inner(), grid);
    return true;
}

namespace {

std::vector<std::string> tokenize(const std::string& spec) {
    std::vector<std::string> tokens;
    std::istringstream in(spec);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

std::map<std::string, std::string> parse_kv(const std::vector<std::string>& tokens, std::size_t from, std::size_t to,
                                            const std::string& context) {
    std::map<std::string, std::string> kv;
    for (std::size_t i = from; i < to; ++i) {
        const auto eq = tokens[i].find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument(context + ": expected key=value, got '" + tokens[i] + "'");
        kv[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
    }
    return kv;
}

double require_num(const std::map<std::string, std::string>& kv, const std::string& key, const std::string& context) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument(context + ": missing parameter '" + key + "'");
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(it->second, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(context + ": parameter '" + key + "' is not a number");
    }
    if (used != it->second.size())
        throw std::invalid_argument(context + ": parameter '" + key + "' is not a number");
    return v;
}

std::shared_ptr<const StoppingTime> make_stopping(const std::string& name,
                                                  const std::map<std::string, std::string>& kv) {
    if (name == "const") return std::make_shared<ConstantTime>(require_num(kv, "a", "stopping 'const'"));
    if (name == "hit") return std::make_shared<FirstHitting>(require_num(kv, "b", "stopping 'hit'"));
    throw std::invalid_argument("unknown stopping-time label: '" + name + "'");
}

} // namespace

std::shared_ptr<const AdaptedDrift> parse_drift(const std::string& spec, const TimeGrid& grid) {
    const auto tokens = tokenize(spec);
    if (tokens.empty()) throw std::invalid_argument("empty drift spec");
    const std::string& name = tokens[0];
    if (name == "zero") {
        return std::make_shared<ZeroDrift>();
    }
    if (name == "deterministic") {
        const auto kv = parse_kv(tokens, 1, tokens.size(), "drift 'deterministic'");
        const double c = require_num(kv, "c", "drift 'deterministic'");
        DensityPath h{grid, std::vector<double>(grid.n_steps, c)};
        return std::make_shared<DeterministicDrift>(std::move(h), "deterministic c=" + fmt_num(c));
    }
    if (name == "linear") {
        const auto kv = parse_kv(tokens, 1, tokens.size(), "drift 'linear'");
        return std::make_shared<LinearDrift>(require_num(kv, "theta", "drift 'linear'"));
    }
    if (name == "tsirelson") {
        const auto kv = parse_kv(tokens, 1, tokens.size(), "drift 'tsirelson'");
        const double k = require_num(kv, "K", "drift 'tsirelson'");
        if (k < 1.0 || k != std::floor(k))
            throw std::invalid_argument("drift 'tsirelson': K must be a positive integer");
        return std::make_shared<TsirelsonDrift>(static_cast<unsigned>(k));
    }
    if (name == "stopped") {
        // Grammar: stopped inner=<label> [inner params...] tau=<label> [tau params...]
        std::size_t tau_at = tokens.size();
        for (std::size_t i = 1; i < tokens.size(); ++i)
            if (tokens[i].rfind("tau=", 0) == 0) tau_at = i;
        if (tokens.size() < 2 || tokens[1].rfind("inner=", 0) != 0 || tau_at == tokens.size())
            throw std::invalid_argument("drift 'stopped': expected inner=<label> ... tau=<label> ...");
        const std::string inner_name = tokens[1].substr(6);
        if (inner_name == "stopped")
            throw std::invalid_argument("drift 'stopped': nested stopped drifts are not supported in specs");
        std::string inner_spec = inner_name;
        for (std::size_t i = 2; i < tau_at; ++i) inner_spec += " " + tokens[i];
        const std::string tau_name = tokens[tau_at].substr(4);
        const auto tau_kv = parse_kv(tokens, tau_at + 1, tokens.size(), "stopping '" + tau_name + "'");
        return std::make_shared<StoppedDrift>(parse_drift(inner_spec, grid), make_stopping(tau_name, tau_kv));
    }
    throw std::invalid_argument("unknown drift label: '" + name + "'");
}

std::shared_ptr<const StoppingTime> parse_stopping(const std::string& spec) {
    const auto tokens = tokenize(spec);
    if (tokens.empty()) throw std::invalid_argument("empty stopping-time spec");
    const auto kv = parse_kv(tokens, 1, tokens.size(), "stopping '" + tokens[0] + "'");
    return make_stopping(tokens[0], kv);
}

} // namespace shiftlab
