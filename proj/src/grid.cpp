#include "shiftlab/grid.hpp"

#include <cmath>
#include <stdexcept>

#include "shiftlab/rng.hpp"

namespace shiftlab {

TimeGrid::TimeGrid(std::size_t steps) : n_steps(steps), dt(0.0) {
    if (n_steps == 0) throw std::invalid_argument("TimeGrid: n_steps must be positive");
    dt = 1.0 / static_cast<double>(n_steps);
    times.resize(n_steps + 1);
    for (std::size_t i = 0; i <= n_steps; ++i) times[i] = static_cast<double>(i) * dt;
    times[n_steps] = 1.0;
}

SampleBatch::SampleBatch(TimeGrid g, std::size_t c, std::uint64_t s)
    : grid(std::move(g)), count(c), seed(s) {
    if (count == 0) throw std::invalid_argument("SampleBatch: count must be positive");
}

WienerPath SampleBatch::path(std::size_t index) const {
    if (index >= count) throw std::invalid_argument("SampleBatch: path index out of range");
    const std::uint64_t key = rng::stream_key(seed, index);
    const double sd = std::sqrt(grid.dt);
    WienerPath p{grid, std::vector<double>(grid.n_steps + 1)};
    p.values[0] = 0.0;
    for (std::size_t i = 0; i < grid.n_steps; ++i)
        p.values[i + 1] = p.values[i] + sd * rng::gaussian(key, i);
    return p;
}

SampleBatch sample_paths(const TimeGrid& grid, std::size_t count, std::uint64_t seed) {
    return SampleBatch(grid, count, seed);
}

double ito_sum(const DensityPath& density, const WienerPath& path) {
    if (!(density.grid == path.grid))
        throw std::invalid_argument("ito_sum: density and path grids differ");
    const std::size_t n = density.grid.n_steps;
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i)
        terms[i] = density.values[i] * (path.values[i + 1] - path.values[i]);
    return pairwise_sum(terms);
}

double cm_norm_sq(const DensityPath& density) {
    const std::size_t n = density.grid.n_steps;
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i)
        terms[i] = density.values[i] * density.values[i] * density.grid.dt;
    return pairwise_sum(terms);
}

double sup_distance(const WienerPath& a, const WienerPath& b) {
    if (!(a.grid == b.grid))
        throw std::invalid_argument("sup_distance: path grids differ");
    double d = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        d = std::max(d, std::abs(a.values[i] - b.values[i]));
    return d;
}

} // namespace shiftlab
