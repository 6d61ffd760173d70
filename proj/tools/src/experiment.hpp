#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "simcap/scene.hpp"
#include "simcap/simstack.hpp"

namespace simcap::cli {

// A fully resolved scenario request: link config plus experiment-level knobs.
struct ExperimentSpec {
    std::string scenario;
    SystemConfig config;
    std::vector<double> snr_grid_db;
    std::vector<double> ebn0_grid_db;
    std::vector<std::pair<int, int>> mn_pairs;
    std::vector<std::string> curves;
    std::string out_dir = ".";
    int trials = 0;
    std::uint64_t seed = 1;
    std::string variance_mode = "normalized";  // or "physical"
    double reference_snr_db = 0.0;             // optimize-before-sweep SNR
    bool reference_snr_set = false;            // false: use the mid-grid point
    int threads = 1;
    int rand_profiles = 10;  // random-phase curve averaging count
    std::string objective;
    int max_iters = 100;
    double tol = 1e-5;
    double step = 1.0;
    int starts = 5;
};

ExperimentSpec make_default_spec(const std::string& scenario);

// Routes experiment keys here, everything else to the config field setter.
void apply_spec_override(ExperimentSpec& spec, const std::string& key, const std::string& value);

void validate_spec(const ExperimentSpec& spec);

std::vector<double> parse_grid(const std::string& text);  // "lo:step:hi" or "v1,v2,..."
std::vector<std::pair<int, int>> parse_pairs(const std::string& text);  // "40x100,20x100"

std::string format_number(double v);  // 12 significant digits
std::string join_numbers(const std::vector<double>& v);

// Deterministic sub-seed for block (a, b) of a scenario, independent of
// execution order and worker count.
std::uint64_t derived_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

double reference_rho(const ExperimentSpec& spec);  // linear SNR for pre-sweep optimization

// Reference channel with no surface stacks: P = I, D = I, identity
// correlations, unit path gain.
void identity_setup(int n_t, int n_r, SceneMatrices& scene, CompositeResponse& composite);

// The '#' metadata lines every output embeds. Worker count is deliberately
// excluded so outputs are byte-identical for any thread setting.
std::string meta_block(const ExperimentSpec& spec);

void write_file(const std::string& dir, const std::string& name, const std::string& body);

int run_capacity_sweep(const ExperimentSpec& spec);
int run_low_snr(const ExperimentSpec& spec);
int run_convergence(const ExperimentSpec& spec);
int run_validate(const ExperimentSpec& spec);

}  // namespace simcap::cli
