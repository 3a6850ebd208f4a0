// Exercises the installed command line tool end to end: exit codes, run
// directory layout, and determinism of the written summaries.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "json.hpp"

namespace {

int g_failures = 0;

void check(bool ok, const std::string& what) {
    std::printf("%s  %s\n", ok ? "ok " : "FAIL", what.c_str());
    if (!ok) ++g_failures;
}

std::string g_cli;

int run(const std::string& args) {
    const std::string cmd = "\"" + g_cli + "\" " + args + " >/dev/null";
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json summary(const std::string& dir) {
    return nlohmann::json::parse(slurp(std::filesystem::path(dir) / "summary.json"));
}

std::size_t line_count(const std::filesystem::path& p) {
    const std::string text = slurp(p);
    std::size_t n = 0;
    for (const char c : text)
        if (c == '\n') ++n;
    return n;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::printf("usage: cli_tests <path-to-cli>\n");
        return 1;
    }
    g_cli = argv[1];
    const std::string base = "cli_test_runs";
    std::filesystem::remove_all(base);

    check(run("--help") == 0, "--help exits 0");
    check(run("") == 2, "missing subcommand exits 2");
    check(run("invert --steps 100 --out " + base + "/bad_steps") == 2,
          "non power-of-two steps exits 2");
    check(run("invert --drift brownian --out " + base + "/bad_drift") == 2,
          "unknown drift exits 2");
    check(run("entropy --filter kalman --out " + base + "/bad_filter") == 2,
          "unknown filter exits 2");
    check(run("stopped --drift 'linear theta=1' --steps 32 --paths 20 --out " + base + "/no_tau") == 2,
          "stopped without a rule exits 2");

    {
        const std::string dir = base + "/invert_zero";
        check(run("invert --drift zero --steps 64 --paths 50 --seed 5 --refine-grids 64,256 "
                  "--reference-steps 1024 --out " + dir) == 0,
              "invert zero exits 0");
        const auto j = summary(dir);
        check(j["command"] == "invert", "summary records the command");
        check(j["schema_version"] == 1, "summary carries a schema version");
        check(j["config"]["drift"] == "zero", "summary echoes the drift");
        check(!j["config"].contains("threads"), "summary omits the thread count");
        check(j["results"]["left_max"].get<double>() <= 1e-12, "left residual at rounding level");
        check(j["results"]["right_max"].get<double>() <= 1e-12, "right residual at rounding level");
        check(j["results"]["picard_agreement"].get<double>() <= 1e-10, "picard agrees with stepping");
        const auto& study = j["results"]["refinement"]["study"];
        check(j["results"]["refinement"]["grids_used"].size() == 2, "all grids usable for zero drift");
        check(study["at_floor"] == true, "zero drift already at the residual floor");
        check(study["decaying"] == false, "no decay to report at the floor");
        check(std::filesystem::exists(std::filesystem::path(dir) / "residuals.csv"),
              "residuals.csv written");
        check(std::filesystem::exists(std::filesystem::path(dir) / "run.log"), "run.log written");
    }

    {
        const std::string dir = base + "/sample";
        check(run("sample --steps 16 --paths 50 --seed 2 --out " + dir) == 0, "sample exits 0");
        check(line_count(std::filesystem::path(dir) / "paths.csv") == 50 * 17 + 1,
              "paths.csv holds one row per grid point plus a header");
        const auto j = summary(dir);
        check(j["results"]["preservation"].contains("pvalues"), "marginal pvalues recorded");
        check(j["results"]["brownianity"].contains("variance_ratio"), "increment variance recorded");
    }

    {
        const std::string dir = base + "/filter_lin";
        check(run("filter --drift 'linear theta=1' --steps 16 --paths 50 --seed 3 --out " + dir) == 0,
              "filter exits 0");
        check(line_count(std::filesystem::path(dir) / "filtered.csv") == 50 * 16 + 1,
              "filtered.csv holds one row per cell plus a header");
        check(line_count(std::filesystem::path(dir) / "innovations.csv") == 50 * 17 + 1,
              "innovations.csv holds one row per grid point plus a header");
        const auto j = summary(dir);
        const std::string desc = j["results"]["filter"].get<std::string>();
        check(desc.find("gaussian") != std::string::npos, "auto picks the gaussian filter");
    }

    {
        const std::string dir = base + "/preserve_zero";
        check(run("preserve --drift zero --steps 32 --paths 500 --seed 4 --out " + dir) == 0,
              "preserve exits 0");
        const auto j = summary(dir);
        check(j["results"]["preservation"]["pass"] == true, "composed map passes the marginal screen");
        check(j["results"]["brownianity"]["pass"] == true, "composed map passes the increment screen");
        check(line_count(std::filesystem::path(dir) / "marginals.csv") == 8 + 1,
              "marginals.csv lists the probed indices");
    }

    {
        const std::string dir = base + "/stopped_det";
        check(run("stopped --drift 'deterministic c=1' --tau 'const a=0.5' --steps 32 --paths 40 "
                  "--seed 6 --out " + dir) == 0,
              "stopped exits 0");
        const auto j = summary(dir);
        check(j["results"]["alpha_max"].get<double>() <= 1e-12, "stopped coefficients match");
        check(j["results"]["stop_index"]["min"] == 16, "constant rule stops every path at t=1/2");
        check(j["results"]["stop_index"]["max"] == 16, "constant rule is path-independent");
        check(j["results"]["stopped"]["left_max"].get<double>() <= 1e-12,
              "stopped round trip at rounding level");
        check(line_count(std::filesystem::path(dir) / "stopped.csv") == 40 + 1,
              "stopped.csv holds one row per path");
    }

    {
        // identical config, so the same out dir; only the worker count varies
        const std::string dir = base + "/threads";
        const std::string common =
            "entropy --drift 'tsirelson K=3' --steps 64 --paths 200 --seed 7 --out " + dir;
        check(run(common + " --threads 1") == 0, "entropy with one worker exits 0");
        const std::string sa = slurp(std::filesystem::path(dir) / "summary.json");
        check(run(common + " --threads 3") == 0, "entropy with three workers exits 0");
        const std::string sb = slurp(std::filesystem::path(dir) / "summary.json");
        check(!sa.empty() && sa == sb, "summaries are byte-identical across worker counts");
        check(line_count(std::filesystem::path(dir) / "contributions.csv") == 200 + 1,
              "contributions.csv holds one row per path");
    }

    {
        const std::string dir = base + "/certify_lin";
        check(run("certify-all --drift 'linear theta=1' --steps 64 --paths 200 --seed 8 "
                  "--refine-grids 64,256 --reference-steps 2048 --out " + dir) == 0,
              "certify-all exits 0");
        const auto j = summary(dir);
        check(j["results"]["combined_verdict"] == "invertible-consistent",
              "linear drift certifies as invertible-consistent");
        check(j["results"]["certificate"]["verdict"] == "invertible-consistent",
              "certificate agrees");
        check(j["results"]["inverse"]["refinement"]["study"]["decaying"] == true,
              "restricted-observation residuals decay");
        check(j["results"]["density_identity"]["max"].get<double>() <= 1e-10,
              "density identity at rounding level");
        check(std::filesystem::exists(std::filesystem::path(dir) / "identity.csv"),
              "identity.csv written");
    }

    {
        // a config file seeds the run; flags still win over file entries
        const std::string dir = base + "/config_file";
        const std::filesystem::path cfg = std::filesystem::path(base) / "run.cfg";
        std::filesystem::create_directories(base);
        std::ofstream out(cfg);
        out << "drift = deterministic c=1\nsteps = 32\npaths = 30\nseed = 9\nout = " << dir
            << "_fromfile\n";
        out.close();
        check(run("invert --config " + cfg.string() + " --refine-grids 32 --reference-steps 256 "
                  "--out " + dir) == 0,
              "config file run exits 0");
        check(std::filesystem::exists(std::filesystem::path(dir) / "summary.json"),
              "flag overrides the out path from the file");
        const auto j = summary(dir);
        check(j["config"]["drift"] == "deterministic c=1", "drift taken from the config file");
        check(j["config"]["steps"] == 32, "steps taken from the config file");
    }

    if (g_failures == 0) std::printf("all cli checks passed\n");
    return g_failures == 0 ? 0 : 1;
}
