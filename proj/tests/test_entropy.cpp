#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "shiftlab/drift.hpp"
#include "shiftlab/entropy.hpp"
#include "shiftlab/grid.hpp"
#include "shiftlab/rng.hpp"

using namespace shiftlab;

namespace {

DensityPath const_density(const TimeGrid& g, double c) {
    return DensityPath{g, std::vector<double>(g.n_steps, c)};
}

} // namespace

TEST_CASE("energy of the zero drift is exactly zero") {
    const TimeGrid g(64);
    const auto e = energy(ZeroDrift{}, SampleBatch(g, 50, 3));
    CHECK(e.mean == 0.0);
    CHECK(e.half_width == 0.0);
    CHECK(e.n == 50);
}

TEST_CASE("energy of a constant drift is half its squared norm, exactly") {
    const TimeGrid g(64);
    const auto unit = energy(DeterministicDrift{const_density(g, 1.0)}, SampleBatch(g, 20, 5));
    CHECK(unit.mean == 0.5);
    CHECK(unit.half_width == 0.0);
    // quadratic scaling in the density
    const auto twice = energy(DeterministicDrift{const_density(g, 2.0)}, SampleBatch(g, 20, 5));
    CHECK(twice.mean == 2.0);
}

TEST_CASE("energy of the state-linear drift matches the discrete mean") {
    const TimeGrid g(64);
    const auto e = energy(LinearDrift{1.0}, SampleBatch(g, 5000, 7));
    // E[w(t_i)^2] = t_i makes the exact discrete mean (1 - dt) / 4
    const double expect = 0.25 * (1.0 - g.dt);
    CHECK(std::abs(e.mean - expect) <= e.half_width);
    CHECK(e.half_width < 0.02);
}

TEST_CASE("filter entropy of exact filters reproduces the energy") {
    const TimeGrid g(64);
    const SampleBatch batch(g, 40, 11);
    std::vector<FilteredDrift> zeros(batch.count,
                                     FilteredDrift{g, std::vector<double>(g.n_steps, 0.0), FilterMethod::analytic});
    const auto h0 = entropy_via_filter(zeros);
    CHECK(h0.mean == 0.0);
    CHECK(h0.half_width == 0.0);

    std::vector<FilteredDrift> units(batch.count,
                                     FilteredDrift{g, std::vector<double>(g.n_steps, 1.0), FilterMethod::analytic});
    const auto h1 = entropy_via_filter(units);
    CHECK(h1.mean == 0.5);
    CHECK(h1.half_width == 0.0);

    CHECK_THROWS_AS(entropy_via_filter({}), std::invalid_argument);
    std::vector<FilteredDrift> mixed = {FilteredDrift{g, std::vector<double>(g.n_steps, 0.0), FilterMethod::analytic},
                                        FilteredDrift{TimeGrid(8), std::vector<double>(8, 0.0), FilterMethod::analytic}};
    CHECK_THROWS_AS(entropy_via_filter(mixed), std::invalid_argument);
}

TEST_CASE("inverse-weight entropy agrees with the explicit inverse pair") {
    const TimeGrid g(64);
    const SampleBatch small(g, 10, 13);
    const auto zero_est = entropy_via_inverse(ZeroDrift{}, small);
    CHECK(zero_est.mean == 0.0);
    CHECK(zero_est.half_width == 0.0);

    const DeterministicDrift u(const_density(g, 1.0));
    const DeterministicDrift v(const_density(g, -1.0));
    const SampleBatch batch(g, 3000, 17);
    const auto solved = entropy_via_inverse(u, batch);
    const auto paired = entropy_via_inverse(u, v, batch);
    CHECK(solved.mean == paired.mean);
    CHECK(solved.half_width == paired.half_width);
    // mean of the log inverse weight is the energy, 1/2, for this drift
    CHECK(std::abs(solved.mean - 0.5) <= solved.half_width);
    CHECK(solved.half_width < 0.05);
}

TEST_CASE("certificate of the zero drift is exact and clean") {
    const TimeGrid g(32);
    const auto rep = certify(ZeroDrift{}, FilterMethod::analytic, SampleBatch(g, 100, 19));
    CHECK(rep.verdict == Verdict::invertible_consistent);
    CHECK(rep.energy.mean == 0.0);
    CHECK(rep.entropy.mean == 0.0);
    CHECK(rep.gap.mean == 0.0);
    CHECK(rep.gap.half_width == 0.0);
    CHECK(rep.allowance == 0.0);
    CHECK(rep.novikov.mean == 1.0);
    CHECK(rep.novikov.half_width == 0.0);
    CHECK(rep.estimators_agree);
    CHECK(rep.reason.empty());
    CHECK(rep.per_path_energy.empty());
}

TEST_CASE("certificate of a constant drift has zero gap by construction") {
    const TimeGrid g(64);
    CertifyOptions opt;
    opt.keep_per_path = true;
    const auto rep = certify(DeterministicDrift{const_density(g, 1.0)}, FilterMethod::analytic,
                             SampleBatch(g, 200, 23), opt);
    CHECK(rep.verdict == Verdict::invertible_consistent);
    CHECK(rep.energy.mean == 0.5);
    CHECK(rep.entropy.mean == 0.5);
    CHECK(rep.gap.mean == 0.0);
    CHECK(rep.allowance == 0.0);
    CHECK(rep.per_path_energy.size() == 200);
    CHECK(rep.per_path_entropy.size() == 200);
    CHECK(rep.entropy_method == "analytic");
}

TEST_CASE("certificate of the linear drift accepts invertibility") {
    const TimeGrid g(64);
    const auto rep = certify(LinearDrift{1.0}, FilterMethod::gaussian, SampleBatch(g, 2000, 29));
    CHECK(rep.verdict == Verdict::invertible_consistent);
    CHECK(std::abs(rep.gap.mean) <= rep.gap.half_width);
    CHECK(rep.allowance == 0.0);
    CHECK(rep.has_inverse_estimator);
    CHECK(rep.estimators_agree);
    CHECK(rep.filter_description.find("gaussian") != std::string::npos);
    CHECK(rep.drift_label == "linear theta=1");
    CHECK(rep.gap.mean == rep.energy.mean - rep.entropy.mean);
}

TEST_CASE("certificate of the cell-averaging drift rejects invertibility") {
    const TimeGrid g(16);
    const SampleBatch batch(g, 10000, 31);
    const TsirelsonDrift drift(2);
    const auto rep = certify(drift, FilterMethod::regression, batch);
    CHECK(rep.verdict == Verdict::non_invertible);
    CHECK(rep.gap.mean - rep.gap.half_width - rep.allowance > 0.0);
    // energy concentrates near active_length / 6 = 0.125
    CHECK(std::abs(rep.energy.mean - 0.125) <= 3.0 * rep.energy.half_width);
    CHECK(rep.allowance > 0.0);
    CHECK(rep.allowance == 0.10 * rep.entropy.mean);
    // the two entropy estimators split apart, which is the detection signal
    CHECK_FALSE(rep.estimators_agree);
    CHECK(rep.entropy_inverse.mean > rep.entropy.mean);
    CHECK(rep.train_seed == rng::stream_key(batch.seed, 0x66696c74u));
    CHECK(rep.gap.mean == rep.energy.mean - rep.entropy.mean);
}

TEST_CASE("an ulp-level gap with a narrower interval still certifies invertible") {
    // The exact filter reproduces the per-path energies through different
    // arithmetic; at this seed the paired gap is one ulp of 1/4 with an even
    // smaller half-width, which must not be read as a positive gap.
    const TimeGrid g(256);
    const auto rep = certify(LinearDrift{1.0}, FilterMethod::gaussian, SampleBatch(g, 2000, 13));
    CHECK(std::abs(rep.gap.mean) <= 1e-14);
    CHECK(rep.verdict == Verdict::invertible_consistent);
}

TEST_CASE("certificate goes inconclusive when the weight mean collapses") {
    const TimeGrid g(64);
    const auto rep = certify(DeterministicDrift{const_density(g, 20.0)}, FilterMethod::analytic,
                             SampleBatch(g, 200, 37));
    CHECK(rep.verdict == Verdict::inconclusive);
    CHECK(rep.reason.find("change of measure") != std::string::npos);
    CHECK(std::abs(rep.novikov.mean - 1.0) > rep.novikov.half_width);
}

TEST_CASE("certificate training controls are honored and recorded") {
    const TimeGrid g(16);
    const SampleBatch batch(g, 400, 41);
    const TsirelsonDrift drift(2);
    CertifyOptions opt;
    opt.train_paths = 123;
    opt.with_inverse_estimator = false;
    const auto rep = certify(drift, FilterMethod::regression, batch, opt);
    // k = ceil(sqrt(123)) shows up in the engine description
    CHECK(rep.filter_description.find("k=12") != std::string::npos);
    CHECK_FALSE(rep.has_inverse_estimator);
    CHECK(rep.entropy_inverse.n == 0);
    CHECK(rep.n_paths == 400);
    CHECK(rep.n_steps == 16);
    CHECK(rep.seed == 41);
}
