#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "shiftlab/grid.hpp"

namespace shiftlab {

// A causal drift functional: eval returns the density on [t_i, t_{i+1}) and
// may read only values[0..i], even when the span extends further. Objects are
// immutable after construction and eval must be a pure function; both are
// load-bearing (Picard iteration, causality tests, parallel batches).
class AdaptedDrift {
public:
    virtual ~AdaptedDrift() = default;
    virtual double eval(const TimeGrid& grid, std::size_t step, std::span<const double> values) const = 0;
    virtual std::string label() const = 0;
};

// Grid-valued stopping time. stopped_by reports whether the event
// {tau <= t_step} has occurred, which must be decidable from values[0..step].
class StoppingTime {
public:
    virtual ~StoppingTime() = default;
    virtual bool stopped_by(const TimeGrid& grid, std::size_t step, std::span<const double> values) const = 0;
    virtual std::string label() const = 0;
};

class ZeroDrift final : public AdaptedDrift {
public:
    double eval(const TimeGrid&, std::size_t, std::span<const double>) const override { return 0.0; }
    std::string label() const override { return "zero"; }
};

// State-independent drift with a fixed density h-dot.
class DeterministicDrift final : public AdaptedDrift {
public:
    explicit DeterministicDrift(DensityPath h, std::string label = "deterministic");
    double eval(const TimeGrid& grid, std::size_t step, std::span<const double> values) const override;
    std::string label() const override { return label_; }
    const DensityPath& density() const { return h_; }

private:
    DensityPath h_;
    std::string label_;
};

// u-dot_t(w) = -theta * w(t_i); the Gaussian test case with an exact filter.
class LinearDrift final : public AdaptedDrift {
public:
    explicit LinearDrift(double theta);
    double eval(const TimeGrid&, std::size_t step, std::span<const double> values) const override {
        return -theta_ * values[step];
    }
    std::string label() const override;
    double theta() const { return theta_; }

private:
    double theta_;
};

// Which dyadic cell a grid step falls in, and where the increment feeding its
// density lives. Shared between the drift itself and filter feature rules so
// both read the same structure.
struct TsirelsonCell {
    bool active = false;     // the step carries drift
    std::size_t lo = 0;      // left grid index of the containing cell
    std::size_t prev_lo = 0; // grid indexes bounding the previous increment
    std::size_t prev_hi = 0;
};

TsirelsonCell tsirelson_cell(unsigned depth, const TimeGrid& grid, std::size_t step);

// Fractional parts of rescaled increments over the dyadic partition
// t_k = 2^k, k = 0..-K. On the cell (t_{k-1}, t_k] the density is
// frac((w(t_{k-1}) - w(t_{k-2})) / (t_{k-1} - t_{k-2})); it is zero on
// [0, 2^-K] and on the first active cell when the grid cannot resolve the
// increment ending at 2^-K (i.e. when n is not a multiple of 2^(K+1)).
class TsirelsonDrift final : public AdaptedDrift {
public:
    explicit TsirelsonDrift(unsigned depth);
    double eval(const TimeGrid& grid, std::size_t step, std::span<const double> values) const override;
    std::string label() const override;
    unsigned depth() const { return depth_; }

    // Total length of cells that carry drift on this grid.
    double active_length(const TimeGrid& grid) const;

private:
    unsigned depth_;
};

// inner's density until the stopping event has occurred, zero afterwards.
// A cell [t_i, t_{i+1}) is active iff the event {tau <= t_i} has not occurred,
// i.e. iff t_{i+1} <= tau, decidable from the prefix.
class StoppedDrift final : public AdaptedDrift {
public:
    StoppedDrift(std::shared_ptr<const AdaptedDrift> inner, std::shared_ptr<const StoppingTime> tau);
    double eval(const TimeGrid& grid, std::size_t step, std::span<const double> values) const override;
    std::string label() const override;
    const AdaptedDrift& inner() const { return *inner_; }
    const StoppingTime& tau() const { return *tau_; }

private:
    std::shared_ptr<const AdaptedDrift> inner_;
    std::shared_ptr<const StoppingTime> tau_;
};

// tau = t_k with k the largest grid index such that t_k <= a (clamped to [0,1]).
class ConstantTime final : public StoppingTime {
public:
    explicit ConstantTime(double a);
    bool stopped_by(const TimeGrid& grid, std::size_t step, std::span<const double>) const override;
    std::string label() const override;
    double time() const { return a_; }

private:
    double a_;
};

// First grid time with |w(t_k)| >= b, capped at the horizon.
class FirstHitting final : public StoppingTime {
public:
    explicit FirstHitting(double level);
    bool stopped_by(const TimeGrid& grid, std::size_t step, std::span<const double> values) const override;
    std::string label() const override;
    double level() const { return b_; }

private:
    double b_;
};

// Materializes the drift density along a fixed path.
DensityPath drift_path(const AdaptedDrift& drift, const WienerPath& path);

// Suffix-corruption check of the causality contract: true iff every eval(i, .)
// is bit-identical under `trials` random corruptions of entries beyond i.
bool causality_check(const AdaptedDrift& drift, const WienerPath& path, std::size_t trials, std::uint64_t seed);
bool causality_check(const StoppingTime& tau, const WienerPath& path, std::size_t trials, std::uint64_t seed);

// Realized stopping index tau(path) in [0, n_steps].
std::size_t stopping_index(const StoppingTime& tau, const WienerPath& path);

// True when rebuilding the same drift family on any finer dyadic grid keeps
// this grid's discretization unchanged. The cell-averaging drift needs the
// grid to resolve the window below its earliest cell, otherwise that cell is
// dropped and coarse and fine versions disagree; every other family is
// grid-stable. Refinement studies should skip unstable grids.
bool drift_stable_on_grid(const AdaptedDrift& drift, const TimeGrid& grid);

// Registry: build drifts / stopping times from flat spec strings, e.g.
//   "zero" | "deterministic c=1" | "linear theta=1" | "tsirelson K=6"
//   | "stopped inner=linear theta=1 tau=hit b=0.5"
//   and stopping times "const a=0.5" | "hit b=0.5".
// Unknown labels or malformed parameters raise std::invalid_argument.
std::shared_ptr<const AdaptedDrift> parse_drift(const std::string& spec, const TimeGrid& grid);
std::shared_ptr<const StoppingTime> parse_stopping(const std::string& spec);

} // namespace shiftlab
