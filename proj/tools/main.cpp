#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cslab/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"cslab: alignment-model experiments, hydrodynamic sweeps and the macroscopic solver"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    int jobs = 1;
    auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
    auto* out_opt = app.add_option("--out", out, "Override the output directory");
    app.add_option("--config", config, "Config file (.ini-style text or .json)")->required()->check(CLI::ExistingFile);
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    for (const char* name : {"simulate", "sweep", "solve-macro", "verify"}) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cslab::kExitConfig;
    }

    cslab::CommandOptions options;
    if (*seed_opt) options.seed = seed;
    if (*out_opt) options.out = out;
    options.jobs = jobs;
    return cslab::run_command(app.get_subcommands().front()->get_name(), config, options, std::cerr);
}
