#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "quenchlab/config.hpp"
#include "quenchlab/experiments.hpp"

int main(int argc, char** argv) {
    using namespace quenchlab;

    CLI::App app{"Nonlocal quenching laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    long long seed = 0;
    for (const std::string& name : subcommands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "Config file (section.key = value)")->required();
        sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "Recorded in the manifest");
    }
    app.get_subcommand("simulate")->description("Integrate one run and analyse it");
    app.get_subcommand("stationary")->description("Newton stationary pair with evolution cross-check");
    app.get_subcommand("region")->description("Global/AllQuench map over (lambda, mu)");
    app.get_subcommand("rates")->description("Refit quenching rates from trajectory.csv");
    app.get_subcommand("shoot")->description("Delta sweep and bisection for p, q < 1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    RunOptions options;
    options.out_dir = out_dir;
    if (app.get_subcommands().front()->count("--seed") > 0) options.seed = seed;

    RunConfig config;
    try {
        config = parse_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "quenchlab " << sub << ": " << e.what() << '\n';
        return exit_code_for(e);
    }
    return run_experiment(config, sub, options, std::cout, std::cerr);
}
