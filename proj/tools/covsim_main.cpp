#include <optional>
#include <string>

#include <CLI11.hpp>

#include "covsim/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Coverage-control simulations for heterogeneous air-ground robot teams"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::string ratios;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "scenario config file (JSON)")->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "override the config rng_seed");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "run one scenario and write its outputs");
    add_common(run_cmd);

    CLI::App* compare_cmd =
        app.add_subcommand("compare", "run the three-controller comparison from identical starts");
    add_common(compare_cmd);

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a K/N ratio sweep");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--ratios", ratios, "comma-separated K/N ratios, e.g. 1/12,2/12,4/12")
        ->required();

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) return covsim::cmd_run(config_path, out_dir, seed);
    if (compare_cmd->parsed()) return covsim::cmd_compare(config_path, out_dir, seed);
    return covsim::cmd_sweep(config_path, ratios, out_dir, seed);
}
