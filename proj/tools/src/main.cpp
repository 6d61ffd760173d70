#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "experiment.hpp"
#include "simcap/scene.hpp"

int main(int argc, char** argv) {
    CLI::App app{"stacked-surface holographic MIMO link experiments"};
    app.footer("Overrides resolve in order: config file, --set key=value, dedicated flags.");

    std::string scenario;
    app.add_option("scenario", scenario, "capacity_sweep | low_snr | convergence | validate")
        ->required()
        ->check(CLI::IsMember({"capacity_sweep", "low_snr", "convergence", "validate"}));
    std::string config_path;
    app.add_option("--config", config_path, "JSON link configuration file");
    std::string out_dir = ".";
    app.add_option("--out", out_dir, "output directory");
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "master seed");
    int trials = 0;
    auto* trials_opt = app.add_option("--trials", trials, "Monte Carlo trials per point");
    std::string objective;
    auto* objective_opt = app.add_option("--objective", objective, "clb | ebmin | s0");
    int max_iters = 0;
    auto* max_iters_opt = app.add_option("--max-iters", max_iters, "optimizer iteration cap");
    double tol = 0.0;
    auto* tol_opt = app.add_option("--tol", tol, "optimizer relative objective tolerance");
    double step = 0.0;
    auto* step_opt = app.add_option("--step", step, "optimizer initial step size");
    int starts = 0;
    auto* starts_opt = app.add_option("--starts", starts, "optimizer restart count");
    std::vector<std::string> sets;
    app.add_option("--set", sets,
                   "key=value override for any config or experiment field (repeatable)");

    CLI11_PARSE(app, argc, argv);

    try {
        simcap::cli::ExperimentSpec spec = simcap::cli::make_default_spec(scenario);
        if (!config_path.empty()) {
            spec.config = simcap::load_config(config_path);
            spec.seed = spec.config.seed;
        }
        for (const std::string& kv : sets) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects key=value, got: " + kv);
            simcap::cli::apply_spec_override(spec, kv.substr(0, eq), kv.substr(eq + 1));
        }
        spec.out_dir = out_dir;
        if (seed_opt->count()) {
            spec.seed = seed;
            spec.config.seed = seed;
        }
        if (trials_opt->count()) spec.trials = trials;
        if (objective_opt->count()) spec.objective = objective;
        if (max_iters_opt->count()) spec.max_iters = max_iters;
        if (tol_opt->count()) spec.tol = tol;
        if (step_opt->count()) spec.step = step;
        if (starts_opt->count()) spec.starts = starts;

        spec.config.finalize();
        spec.config.validate();
        simcap::cli::validate_spec(spec);

        if (scenario == "capacity_sweep") return simcap::cli::run_capacity_sweep(spec);
        if (scenario == "low_snr") return simcap::cli::run_low_snr(spec);
        if (scenario == "convergence") return simcap::cli::run_convergence(spec);
        return simcap::cli::run_validate(spec);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
