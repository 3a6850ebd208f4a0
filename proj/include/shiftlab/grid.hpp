#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

#include "shiftlab/numeric.hpp"

namespace shiftlab {

// Uniform discretization of [0,1].
struct TimeGrid {
    explicit TimeGrid(std::size_t n_steps);

    std::size_t n_steps;
    double dt;
    std::vector<double> times; // n_steps + 1 points, times[i] = i * dt

    bool operator==(const TimeGrid& other) const { return n_steps == other.n_steps; }
};

// A sampled (or transformed) path on a grid; values[0] is always 0.
struct WienerPath {
    TimeGrid grid;
    std::vector<double> values; // n_steps + 1 entries
};

// Piecewise-constant density on the grid cells [t_i, t_{i+1}).
struct DensityPath {
    TimeGrid grid;
    std::vector<double> values; // n_steps entries
};

// Lazy batch: path j is regenerated on demand as a pure function of
// (seed, j, grid), so batches of any size cost O(1) memory and regenerate
// bit-identically regardless of traversal order or worker count.
struct SampleBatch {
    SampleBatch(TimeGrid grid, std::size_t count, std::uint64_t seed);

    WienerPath path(std::size_t index) const;

    TimeGrid grid;
    std::size_t count;
    std::uint64_t seed;
};

SampleBatch sample_paths(const TimeGrid& grid, std::size_t count, std::uint64_t seed);

// Left-endpoint Ito sum  sum_i density[i] * (w(t_{i+1}) - w(t_i)).
double ito_sum(const DensityPath& density, const WienerPath& path);

// Discrete Cameron-Martin norm squared  sum_i density[i]^2 * dt.
double cm_norm_sq(const DensityPath& density);

// Sup distance  max_i |a(t_i) - b(t_i)|.
double sup_distance(const WienerPath& a, const WienerPath& b);

} // namespace shiftlab
