#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "shiftlab/drift.hpp"
#include "shiftlab/entropy.hpp"
#include "shiftlab/filter.hpp"
#include "shiftlab/girsanov.hpp"
#include "shiftlab/grid.hpp"
#include "shiftlab/solver.hpp"

namespace py = pybind11;
using namespace shiftlab;

namespace {

WienerPath path_from(const std::vector<double>& values) {
    if (values.empty() || values.front() != 0.0)
        throw std::invalid_argument("a path is a list of values on a uniform grid, starting at 0.0");
    TimeGrid grid(values.size() - 1);
    return WienerPath{grid, values};
}

py::dict estimate_dict(const Estimate& e) {
    py::dict d;
    d["mean"] = e.mean;
    d["half_width"] = e.half_width;
    d["n"] = e.n;
    return d;
}

DeterministicDrift drift_from_density(const std::vector<double>& density) {
    if (density.empty()) throw std::invalid_argument("density needs at least one cell");
    TimeGrid grid(density.size());
    return DeterministicDrift(DensityPath{grid, density});
}

py::dict gap_dict(const GapReport& g) {
    py::dict d;
    d["drift"] = g.drift_label;
    d["filter"] = g.filter_description;
    d["energy"] = estimate_dict(g.energy);
    d["entropy"] = estimate_dict(g.entropy);
    d["gap"] = estimate_dict(g.gap);
    d["allowance"] = g.allowance;
    d["verdict"] = verdict_name(g.verdict);
    d["reason"] = g.reason;
    return d;
}

} // namespace

PYBIND11_MODULE(_shiftlab, m) {
    m.doc() = "adapted shifts of Brownian paths: simulation, inversion, certificates";

    m.def(
        "sample",
        [](std::size_t n_steps, std::size_t count, std::uint64_t seed) {
            const TimeGrid grid(n_steps);
            const SampleBatch batch(grid, count, seed);
            std::vector<std::vector<double>> out;
            out.reserve(count);
            for (std::size_t j = 0; j < count; ++j) out.push_back(batch.path(j).values);
            return out;
        },
        py::arg("n_steps"), py::arg("count"), py::arg("seed"),
        "Draw Brownian paths on a uniform grid of [0,1]; deterministic in the seed.");

    m.def(
        "apply_shift",
        [](const std::string& drift, const std::vector<double>& values) {
            const auto w = path_from(values);
            const auto u = parse_drift(drift, w.grid);
            return apply_shift(*u, w).output.values;
        },
        py::arg("drift"), py::arg("values"),
        "Apply the drift shift to a path: output follows dY = dW + drift dt.");

    m.def(
        "invert",
        [](const std::string& drift, const std::vector<double>& values) {
            const auto w = path_from(values);
            const auto u = parse_drift(drift, w.grid);
            return solve_inverse_sde(*u, w).output.values;
        },
        py::arg("drift"), py::arg("values"),
        "Solve the inverse equation dV = dW - drift(V) dt along the given path.");

    m.def(
        "inverse_residuals",
        [](const std::string& drift, std::size_t n_steps, std::size_t count, std::uint64_t seed) {
            const TimeGrid grid(n_steps);
            const auto u = parse_drift(drift, grid);
            const auto r = inverse_residuals(*u, SampleBatch(grid, count, seed));
            return py::make_tuple(r.left, r.right);
        },
        py::arg("drift"), py::arg("n_steps"), py::arg("count"), py::arg("seed"),
        "Max sup-distance of V(U(w))-w and U(V(w))-w over a sampled batch.");

    m.def(
        "log_density",
        [](const std::string& drift, const std::vector<double>& values) {
            const auto w = path_from(values);
            const auto u = parse_drift(drift, w.grid);
            return log_rho_minus(*u, w);
        },
        py::arg("drift"), py::arg("values"),
        "Log Girsanov factor for removing the drift along the given path.");

    m.def(
        "energy",
        [](const std::string& drift, std::size_t n_steps, std::size_t count, std::uint64_t seed) {
            const TimeGrid grid(n_steps);
            const auto u = parse_drift(drift, grid);
            return estimate_dict(energy(*u, SampleBatch(grid, count, seed)));
        },
        py::arg("drift"), py::arg("n_steps"), py::arg("count"), py::arg("seed"),
        "Monte Carlo estimate of half the expected squared drift norm.");

    m.def(
        "certify",
        [](const std::string& drift, std::size_t n_steps, std::size_t count, std::uint64_t seed,
           const std::string& filter) {
            const TimeGrid grid(n_steps);
            const auto u = parse_drift(drift, grid);
            const auto method = resolve_filter_method(filter, *u);
            return gap_dict(certify(*u, method, SampleBatch(grid, count, seed)));
        },
        py::arg("drift"), py::arg("n_steps"), py::arg("count"), py::arg("seed"),
        py::arg("filter") = std::string("auto"),
        "Energy vs filtered entropy with a verdict on invertibility of the shift.");

    m.def(
        "certify_density",
        [](const std::vector<double>& density, std::size_t count, std::uint64_t seed) {
            const auto u = drift_from_density(density);
            const TimeGrid grid(density.size());
            return gap_dict(certify(u, FilterMethod::analytic, SampleBatch(grid, count, seed)));
        },
        py::arg("density"), py::arg("count"), py::arg("seed"),
        "Certify a state-independent drift given by its per-cell density; the grid "
        "has one step per cell.");

    m.def(
        "density_residuals",
        [](const std::vector<double>& density, std::size_t count, std::uint64_t seed) {
            const auto u = drift_from_density(density);
            const TimeGrid grid(density.size());
            const auto r = inverse_residuals(u, SampleBatch(grid, count, seed));
            return py::make_tuple(r.left, r.right);
        },
        py::arg("density"), py::arg("count"), py::arg("seed"),
        "Round-trip residuals for a state-independent drift given per cell.");
}
