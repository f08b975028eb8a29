#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "treekey/config.hpp"
#include "treekey/errors.hpp"
#include "treekey/harness.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string out = "out";
    std::uint64_t seed = 0;
    int trials = 0;
    int threads = 0;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* trials_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
};

void add_config_options(CLI::App* sub, CommonArgs& args, bool with_run_overrides) {
    sub->add_option("-c,--config", args.config, "JSON run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("-o,--out", args.out, "output directory (default: out)");
    if (with_run_overrides) {
        args.seed_opt = sub->add_option("--seed", args.seed, "override protocol.seed");
        args.trials_opt = sub->add_option("--trials", args.trials, "override protocol.trials")
                              ->check(CLI::PositiveNumber);
        args.threads_opt =
            sub->add_option("--threads", args.threads, "override protocol.threads")
                ->check(CLI::PositiveNumber);
    }
}

treekey::Config load_with_overrides(const CommonArgs& args) {
    treekey::Config cfg = treekey::load_config(args.config);
    if (args.seed_opt && args.seed_opt->count() > 0) cfg.protocol.seed = args.seed;
    if (args.trials_opt && args.trials_opt->count() > 0) cfg.protocol.trials = args.trials;
    if (args.threads_opt && args.threads_opt->count() > 0) cfg.protocol.threads = args.threads;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"secret-key rates and protocol simulation for correlated Gaussian trees"};
    app.require_subcommand(1);

    CommonArgs rate_args;
    CLI::App* rate = app.add_subcommand("rate", "closed-form key rates over all roots");
    add_config_options(rate, rate_args, false);

    CommonArgs fine_args;
    CLI::App* fine =
        app.add_subcommand("fine", "fine-quantization limit and capacity comparison");
    add_config_options(fine, fine_args, false);

    double sweep_rho = 0.0;
    double sweep_total = 0.0;
    int sweep_steps = 49;
    std::string sweep_out = "out";
    CLI::App* sweep =
        app.add_subcommand("sweep-two-user", "two-terminal rate across rate splits");
    sweep->add_option("--rho", sweep_rho, "edge correlation")->required();
    sweep->add_option("--total", sweep_total, "total quantization rate to split")->required();
    sweep->add_option("--steps", sweep_steps, "interior grid points")
        ->check(CLI::PositiveNumber);
    sweep->add_option("-o,--out", sweep_out, "output directory (default: out)");

    CommonArgs sim_args;
    CLI::App* sim = app.add_subcommand("simulate", "run the full protocol and evaluate keys");
    add_config_options(sim, sim_args, true);

    CommonArgs diag_args;
    CLI::App* diag = app.add_subcommand("lattice-diag", "lattice chain diagnostics");
    add_config_options(diag, diag_args, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (rate->parsed()) {
            treekey::cmd_rate(load_with_overrides(rate_args), rate_args.out);
        } else if (fine->parsed()) {
            treekey::cmd_fine(load_with_overrides(fine_args), fine_args.out);
        } else if (sweep->parsed()) {
            treekey::cmd_sweep_two_user(sweep_rho, sweep_total, sweep_steps, sweep_out);
        } else if (sim->parsed()) {
            treekey::cmd_simulate(load_with_overrides(sim_args), sim_args.out);
        } else if (diag->parsed()) {
            treekey::cmd_lattice_diag(load_with_overrides(diag_args), diag_args.out);
        }
    } catch (const treekey::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const treekey::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
