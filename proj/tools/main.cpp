#include <array>
#include <cstdio>
#include <exception>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"

#include "commands.hpp"
#include "shiftlab/config.hpp"
#include "shiftlab/numeric.hpp"

namespace {

struct RawArgs {
    std::string config, drift, tau, steps, paths, seed, filter, out;
    std::string refine_grids, reference_steps, train_paths, allowance, threads;
};

// Every subcommand takes the same settings; values are kept as strings and
// funneled through the config parser so the file and the flags share one
// validation path.
void add_common(CLI::App* cmd, RawArgs& raw) {
    cmd->add_option("--config", raw.config, "key=value settings file, applied before flags");
    cmd->add_option("--drift", raw.drift, "drift spec, e.g. 'linear theta=1.0'");
    cmd->add_option("--tau", raw.tau, "stopping rule spec, e.g. 'const a=0.5' or 'hit b=1.0'");
    cmd->add_option("--steps", raw.steps, "grid steps on [0,1], a power of two");
    cmd->add_option("--paths", raw.paths, "number of sample paths");
    cmd->add_option("--seed", raw.seed, "base seed; all randomness derives from it");
    cmd->add_option("--filter", raw.filter, "auto | gaussian | analytic | regression");
    cmd->add_option("--out", raw.out, "output directory");
    cmd->add_option("--refine-grids", raw.refine_grids, "comma list of grids for refinement");
    cmd->add_option("--reference-steps", raw.reference_steps, "fine reference grid");
    cmd->add_option("--train-paths", raw.train_paths, "regression training paths (0: match paths)");
    cmd->add_option("--allowance", raw.allowance, "regression slack as a fraction of entropy");
    cmd->add_option("--threads", raw.threads, "worker threads (affects speed only)");
}

struct FlagKey {
    const char* flag;
    const char* key;
    std::string RawArgs::*member;
};

constexpr std::array<FlagKey, 12> flag_keys = {{
    {"--drift", "drift", &RawArgs::drift},
    {"--tau", "tau", &RawArgs::tau},
    {"--steps", "steps", &RawArgs::steps},
    {"--paths", "paths", &RawArgs::paths},
    {"--seed", "seed", &RawArgs::seed},
    {"--filter", "filter", &RawArgs::filter},
    {"--out", "out", &RawArgs::out},
    {"--refine-grids", "refine_grids", &RawArgs::refine_grids},
    {"--reference-steps", "reference_steps", &RawArgs::reference_steps},
    {"--train-paths", "train_paths", &RawArgs::train_paths},
    {"--allowance", "allowance", &RawArgs::allowance},
    {"--threads", "threads", &RawArgs::threads},
}};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"adapted shifts of Brownian paths: inversion, change of measure, "
                 "innovation filtering and invertibility certificates"};
    app.require_subcommand(1);

    constexpr std::array<const char*, 7> names = {
        "sample", "invert", "entropy", "filter", "stopped", "preserve", "certify-all"};
    constexpr std::array<const char*, 7> blurbs = {
        "draw Brownian paths and check their statistics",
        "apply the shift, solve it back, report residuals and a refinement study",
        "energy vs filtered entropy with an invertibility verdict",
        "estimate the conditional drift and emit innovation paths",
        "compare stopped and unstopped inversion, check the stopped density factor",
        "test whether the composed map returns Wiener statistics",
        "run the inverse, entropy and density diagnostics together"};

    std::array<RawArgs, names.size()> raws;
    std::array<CLI::App*, names.size()> subs{};
    for (std::size_t i = 0; i < names.size(); ++i) {
        subs[i] = app.add_subcommand(names[i], blurbs[i]);
        add_common(subs[i], raws[i]);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }

    for (std::size_t i = 0; i < names.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        shiftlab::ExperimentConfig cfg;
        try {
            if (subs[i]->count("--config") > 0) shiftlab::load_config_file(cfg, raws[i].config);
            for (const auto& fk : flag_keys)
                if (subs[i]->count(fk.flag) > 0)
                    shiftlab::apply_config_entry(cfg, fk.key, raws[i].*(fk.member));
            shiftlab::validate_config(cfg);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "configuration error: %s\n", e.what());
            return 2;
        }
        try {
            return shiftlab::cli::run_command(names[i], cfg);
        } catch (const std::invalid_argument& e) {
            std::fprintf(stderr, "configuration error: %s\n", e.what());
            return 2;
        } catch (const shiftlab::numeric_error& e) {
            std::fprintf(stderr, "numerical failure: %s\n", e.what());
            return 1;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 1;
        }
    }
    return 2;
}
