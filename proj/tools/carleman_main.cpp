#include "carleman/commands.hpp"
#include "carleman/config.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"piecewise Carleman weights for transport equations: construction and verification"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double grid_scale = 1.0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment configuration (JSON)")->required();
        cmd->add_option("--out", out_dir, "output directory (overrides the config)");
        cmd->add_option("--seed", seed, "random seed (overrides the config)")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--grid-scale", grid_scale, "multiply grid resolution and step count");
    };

    auto* analyze = app.add_subcommand("analyze", "field report: delta0, sup|H|, direction cones");
    auto* graph = app.add_subcommand("graph", "stream graph, loop check, radius assignment");
    auto* weights = app.add_subcommand("weights", "build and certify the weight");
    auto* verify = app.add_subcommand("verify", "sweep the weighted estimate over s");
    auto* observability = app.add_subcommand("observability", "observability ratio study");
    auto* inverse_source = app.add_subcommand("inverse-source", "source stability ratio study");
    auto* reconstruct = app.add_subcommand("reconstruct", "least-squares source reconstruction");
    for (auto* cmd : {analyze, graph, weights, verify, observability, inverse_source, reconstruct})
        add_common(cmd);

    CLI11_PARSE(app, argc, argv);

    carleman::ExperimentConfig config;
    try {
        config = carleman::load_config(config_path);
        carleman::ConfigOverrides overrides;
        if (seed_set) overrides.seed = seed;
        if (!out_dir.empty()) overrides.out_dir = out_dir;
        overrides.grid_scale = grid_scale;
        carleman::apply_overrides(config, overrides);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    if (analyze->parsed()) return carleman::cmd_analyze(config, std::cout);
    if (graph->parsed()) return carleman::cmd_graph(config, std::cout);
    if (weights->parsed()) return carleman::cmd_weights(config, std::cout);
    if (verify->parsed()) return carleman::cmd_verify(config, std::cout);
    if (observability->parsed()) return carleman::cmd_observability(config, std::cout);
    if (inverse_source->parsed()) return carleman::cmd_inverse_source(config, std::cout);
    if (reconstruct->parsed()) return carleman::cmd_reconstruct(config, std::cout);
    return 1;
}
