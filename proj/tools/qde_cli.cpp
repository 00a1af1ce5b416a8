// qde: command-line driver for the quantized distributed estimation simulator.

#include "qde/config.hpp"
#include "qde/report.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

std::optional<std::uint64_t> opt_value(const CLI::Option* opt, std::uint64_t value) {
    if (opt->count() == 0) return std::nullopt;
    return value;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-triggered one-bit distributed estimation over lossy channels"};
    app.require_subcommand(1);

    std::string config_path, out_dir, preset;
    std::uint64_t seed = 0, horizon = 0;
    unsigned threads = 0;

    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory")->required();
    auto* run_seed = run->add_option("--seed", seed, "Override the master seed");
    auto* run_horizon = run->add_option("--horizon", horizon, "Override the horizon K")->check(CLI::PositiveNumber);
    run->add_option("--threads", threads, "Worker threads (0 = all cores)");

    auto* pre = app.add_subcommand("preset", "Run a built-in experiment preset");
    pre->add_option("name", preset, "Preset name")->required()->check(CLI::IsMember(qde::preset_names()));
    pre->add_option("--out", out_dir, "Output directory")->required();
    auto* pre_seed = pre->add_option("--seed", seed, "Override the master seed");
    auto* pre_horizon = pre->add_option("--horizon", horizon, "Override the horizon K")->check(CLI::PositiveNumber);
    pre->add_option("--threads", threads, "Worker threads (0 = all cores)");

    auto* con = app.add_subcommand("constants", "Print the convergence constants of a config");
    con->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        const qde::MonteCarloOptions opts{threads, std::nullopt};
        if (run->parsed()) {
            qde::Json j = qde::read_config_json(config_path);
            qde::apply_overrides(j, opt_value(run_seed, seed), opt_value(run_horizon, horizon));
            qde::run_experiment(qde::parse_config(j), out_dir, std::cout, opts);
        } else if (pre->parsed()) {
            qde::run_preset(preset, out_dir, std::cout, opt_value(pre_seed, seed), opt_value(pre_horizon, horizon),
                            opts);
        } else if (con->parsed()) {
            const qde::ExperimentConfig cfg = qde::load_config(config_path);
            std::cout << qde::provenance_line(cfg) << '\n' << qde::constants_report(cfg);
        }
    } catch (const qde::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
