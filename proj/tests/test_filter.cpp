#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "shiftlab/drift.hpp"
#include "shiftlab/filter.hpp"
#include "shiftlab/girsanov.hpp"
#include "shiftlab/grid.hpp"
#include "shiftlab/solver.hpp"

using namespace shiftlab;

namespace {

DensityPath const_density(const TimeGrid& g, double c) {
    return DensityPath{g, std::vector<double>(g.n_steps, c)};
}

std::shared_ptr<const AdaptedDrift> make(const std::string& spec, const TimeGrid& g) {
    return parse_drift(spec, g);
}

} // namespace

TEST_CASE("method names round-trip and unknown names are rejected") {
    for (const auto m : {FilterMethod::gaussian, FilterMethod::regression, FilterMethod::analytic})
        CHECK(parse_filter_method(filter_method_name(m)) == m);
    CHECK_THROWS_AS(parse_filter_method("kalman"), std::invalid_argument);
}

TEST_CASE("the auto setting picks the strongest applicable method") {
    const TimeGrid g(16);
    CHECK(resolve_filter_method("auto", *make("linear theta=1", g)) == FilterMethod::gaussian);
    CHECK(resolve_filter_method("auto", *make("zero", g)) == FilterMethod::analytic);
    CHECK(resolve_filter_method("auto", *make("deterministic c=1", g)) == FilterMethod::analytic);
    CHECK(resolve_filter_method("auto", *make("tsirelson K=2", g)) == FilterMethod::regression);
    CHECK(resolve_filter_method("auto", *make("stopped inner=linear theta=1 tau=const a=0.5", g)) ==
          FilterMethod::analytic);
    CHECK(resolve_filter_method("regression", *make("zero", g)) == FilterMethod::regression);
    CHECK_THROWS_AS(resolve_filter_method("kalman", *make("zero", g)), std::invalid_argument);
}

TEST_CASE("gaussian filter of a driftless model returns zero") {
    const TimeGrid g(8);
    const SampleBatch batch(g, 1, 5);
    const auto f = gaussian_filter(0.0, batch.path(0));
    for (const double v : f.values) CHECK(v == 0.0);
    CHECK(f.method == FilterMethod::gaussian);
}

TEST_CASE("gaussian filter matches direct covariance conditioning on three steps") {
    const double theta = 0.7;
    const TimeGrid g(3);
    const double dt = g.dt;
    const double y1 = 0.3, y2 = -0.4;
    const WienerPath observed{g, {0.0, y1, y2, 0.1}};
    const auto f = gaussian_filter(theta, observed);

    // covariance of the drift value at step 2 with (y1, y2), and the
    // observation covariance, solved as a 2x2 linear system
    const double c1 = -theta * dt;
    const double c2 = -theta * dt * (2.0 - theta * dt);
    const double s11 = dt;
    const double s12 = dt * (1.0 - theta * dt);
    const double s22 = dt * (1.0 - theta * dt) * (1.0 - theta * dt) + dt;
    const double det = s11 * s22 - s12 * s12;
    const double a1 = (c1 * s22 - c2 * s12) / det;
    const double a2 = (s11 * c2 - s12 * c1) / det;
    const double conditioned = a1 * y1 + a2 * y2;

    CHECK(std::abs(f.values[2] - conditioned) <= 1e-12);
    // and both agree with the sequential reconstruction form
    CHECK(std::abs(f.values[2] - (-theta * (y2 + theta * dt * y1))) <= 1e-12);
    CHECK(f.values[0] == 0.0);
    CHECK(std::abs(f.values[1] - (-theta * y1)) <= 1e-15);
}

TEST_CASE("exact filters exist precisely for sequentially recoverable drifts") {
    const TimeGrid g(16);
    CHECK(analytic_filter_available(*make("zero", g)));
    CHECK(analytic_filter_available(*make("deterministic c=2", g)));
    CHECK(analytic_filter_available(*make("linear theta=0.5", g)));
    CHECK_FALSE(analytic_filter_available(*make("tsirelson K=2", g)));
    CHECK(analytic_filter_available(*make("stopped inner=linear theta=1 tau=hit b=0.5", g)));
    CHECK_FALSE(analytic_filter_available(*make("stopped inner=tsirelson K=2 tau=const a=0.5", g)));
}

TEST_CASE("analytic filter of a state-independent drift is the density itself") {
    const TimeGrid g(16);
    const SampleBatch batch(g, 1, 7);
    const DeterministicDrift det(const_density(g, 2.0));
    const auto f = analytic_filter(det, batch.path(0));
    for (const double v : f.values) CHECK(v == 2.0);
    CHECK_THROWS_AS(analytic_filter(TsirelsonDrift{2}, batch.path(0)), std::invalid_argument);
}

TEST_CASE("analytic and gaussian filters agree on the linear model") {
    const TimeGrid g(32);
    const SampleBatch batch(g, 3, 11);
    const LinearDrift lin(1.0);
    for (std::size_t j = 0; j < batch.count; ++j) {
        const auto y = apply_shift(lin, batch.path(j)).output;
        const auto a = analytic_filter(lin, y);
        const auto b = gaussian_filter(1.0, y);
        for (std::size_t i = 0; i < g.n_steps; ++i) CHECK(std::abs(a.values[i] - b.values[i]) <= 1e-12);
    }
}

TEST_CASE("filtering the shifted path recovers the true drift when exact") {
    const TimeGrid g(64);
    const SampleBatch batch(g, 5, 13);
    const LinearDrift lin(1.0);
    for (std::size_t j = 0; j < batch.count; ++j) {
        const auto shifted = apply_shift(lin, batch.path(j));
        const auto f = gaussian_filter(1.0, shifted.output);
        for (std::size_t i = 0; i < g.n_steps; ++i)
            CHECK(std::abs(f.values[i] - shifted.drift_trace.values[i]) <= 1e-12);
    }
}

TEST_CASE("regression filter reproduces a constant drift exactly") {
    const TimeGrid g(16);
    const SampleBatch train(g, 200, 17);
    const DeterministicDrift det(const_density(g, 1.0));
    const RegressionFilter model(det, feature_rule_for(det), train);
    CHECK(model.k() == 15); // ceil(sqrt(200))
    const SampleBatch eval(g, 3, 19);
    for (std::size_t j = 0; j < eval.count; ++j) {
        const auto f = model.filter(apply_shift(det, eval.path(j)).output);
        for (const double v : f.values) CHECK(v == 1.0);
    }
    const TimeGrid other(8);
    CHECK_THROWS_AS(model.filter(SampleBatch(other, 1, 1).path(0)), std::invalid_argument);
}

TEST_CASE("regression filter of the zero drift returns zero") {
    const TimeGrid g(16);
    const SampleBatch train(g, 100, 23);
    const ZeroDrift zero;
    const auto f = regression_filter(zero, train, train.path(0));
    for (const double v : f.values) CHECK(v == 0.0);
}

TEST_CASE("regression filter means respect the tower property on cell averages") {
    const TimeGrid g(8);
    const TsirelsonDrift drift(2);
    const SampleBatch train(g, 2000, 29);
    const RegressionFilter model(drift, feature_rule_for(drift), train);
    const SampleBatch eval(g, 500, 31);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < eval.count; ++j) {
        const auto y = apply_shift(drift, eval.path(j)).output;
        const auto f = model.filter(y);
        for (std::size_t i = 0; i < g.n_steps; ++i) {
            if (!tsirelson_cell(2, g, i).active) continue;
            acc += f.values[i];
            ++count;
        }
    }
    const double mean = acc / static_cast<double>(count);
    // unconditional mean of the cell-average density is 1/2 to high accuracy
    CHECK(mean > 0.45);
    CHECK(mean < 0.55);
}

TEST_CASE("the filter engine validates method against drift and is reproducible") {
    const TimeGrid g(16);
    const LinearDrift lin(1.0);
    const TsirelsonDrift cell_avg(2);
    CHECK_THROWS_AS(FilterEngine(cell_avg, FilterMethod::gaussian, g, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(FilterEngine(cell_avg, FilterMethod::analytic, g, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(FilterEngine(cell_avg, FilterMethod::regression, g, 0, 99), std::invalid_argument);

    const FilterEngine a(cell_avg, FilterMethod::regression, g, 300, 99);
    const FilterEngine b(cell_avg, FilterMethod::regression, g, 300, 99);
    CHECK(a.train_seed() == 99);
    CHECK_FALSE(a.exact());
    const SampleBatch batch(g, 2, 37);
    for (std::size_t j = 0; j < batch.count; ++j) {
        const auto y = apply_shift(cell_avg, batch.path(j)).output;
        const auto fa = a.run(y);
        const auto fb = b.run(y);
        for (std::size_t i = 0; i < g.n_steps; ++i) CHECK(fa.values[i] == fb.values[i]);
    }
    CHECK(a.description().find("regression") != std::string::npos);
    CHECK(a.description().find("k=") != std::string::npos);

    const FilterEngine lin_engine(lin, FilterMethod::gaussian, g, 0, 0);
    CHECK(lin_engine.exact());
    CHECK(lin_engine.description().find("gaussian") != std::string::npos);
}

TEST_CASE("innovations subtract the filtered primitive") {
    const TimeGrid g(16);
    const SampleBatch batch(g, 1, 41);
    const auto w = batch.path(0);

    const FilteredDrift none{g, std::vector<double>(g.n_steps, 0.0), FilterMethod::analytic};
    const auto z_same = innovation_path(w, none);
    for (std::size_t i = 0; i <= g.n_steps; ++i) CHECK(z_same.values[i] == w.values[i]);

    const DeterministicDrift det(const_density(g, 1.0));
    const auto y = apply_shift(det, w).output;
    const auto f = analytic_filter(det, y);
    const auto z = innovation_path(y, f);
    CHECK(sup_distance(z, w) <= 1e-12);

    const TimeGrid other(8);
    const FilteredDrift wrong{other, std::vector<double>(other.n_steps, 0.0), FilterMethod::analytic};
    CHECK_THROWS_AS(innovation_path(w, wrong), std::invalid_argument);
}

TEST_CASE("the conditional weight matches the unconditional weight formula") {
    const TimeGrid g(16);
    const SampleBatch batch(g, 2, 43);
    const FilteredDrift zeros{g, std::vector<double>(g.n_steps, 0.0), FilterMethod::analytic};
    CHECK(conditional_girsanov(zeros, batch.path(0), g.n_steps) == 0.0);

    const DensityPath h = const_density(g, 1.5);
    const FilteredDrift f{g, h.values, FilterMethod::analytic};
    for (std::size_t j = 0; j < batch.count; ++j) {
        const auto w = batch.path(j);
        CHECK(conditional_girsanov(f, w, 0) == 0.0);
        CHECK(conditional_girsanov(f, w, g.n_steps) == log_rho_minus(h, w));
        // a truncated index integrates only the first cells
        const double two = -1.5 * (w.values[2] - w.values[0]) - 0.5 * (1.5 * 1.5 * g.dt) * 2.0;
        CHECK(std::abs(conditional_girsanov(f, w, 2) - two) <= 1e-14);
    }
    CHECK_THROWS_AS(conditional_girsanov(f, batch.path(0), g.n_steps + 1), std::invalid_argument);
    const TimeGrid other(8);
    CHECK_THROWS_AS(conditional_girsanov(f, SampleBatch(other, 1, 1).path(0), 1), std::invalid_argument);
}

TEST_CASE("raw samples pass the distributional screens") {
    const TimeGrid g(64);
    const SampleBatch batch(g, 2000, 47);
    std::vector<WienerPath> paths;
    paths.reserve(batch.count);
    for (std::size_t j = 0; j < batch.count; ++j) paths.push_back(batch.path(j));

    const auto pres = measure_preservation_test(paths);
    CHECK(pres.pass);
    CHECK(pres.time_indices.size() == 8);
    CHECK(pres.covariance_residual < pres.covariance_threshold);
    for (const double p : pres.pvalues) CHECK(p > pres.p_threshold);

    const auto brown = brownianity_test(paths);
    CHECK(brown.pass);
    CHECK(brown.n_increments == batch.count * g.n_steps);
    CHECK(std::abs(brown.variance_ratio - 1.0) <= brown.variance_band);
    CHECK(brown.autocorr.size() == 4);

    CHECK_THROWS_AS(measure_preservation_test({}), std::invalid_argument);
    std::vector<WienerPath> mixed;
    mixed.push_back(batch.path(0));
    mixed.push_back(SampleBatch(TimeGrid(8), 1, 1).path(0));
    CHECK_THROWS_AS(brownianity_test(mixed), std::invalid_argument);
}
