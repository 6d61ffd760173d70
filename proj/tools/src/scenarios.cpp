#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "experiment.hpp"
#include "simcap/metrics.hpp"
#include "simcap/optimizer.hpp"

namespace simcap::cli {

namespace {

constexpr double kLn2 = 0.6931471805599453;

// Eb/N0 steps of 1..6 dB above the minimum for the Monte Carlo probe points
const std::vector<double> kEbMultipliers = {1.2589254117941673, 1.5848931924611136,
                                            1.9952623149688795, 2.51188643150958,
                                            3.1622776601683795, 3.9810717055349722};

struct CurveData {
    std::vector<double> c_lb;
    std::vector<double> c_mc;
    std::vector<double> ci;
    double ebmin = 0.0;
    double s0 = 0.0;
};

std::vector<double> grid_to_rho(const std::vector<double>& db) {
    std::vector<double> out;
    out.reserve(db.size());
    for (double v : db) out.push_back(std::pow(10.0, v / 10.0));
    return out;
}

double lower_bound_bits(const CompositeResponse& composite, const SceneMatrices& scene,
                        double rho, int n_t, double beta, double m) {
    const int rows = static_cast<int>(composite.p.n_rows);
    const int cols = static_cast<int>(composite.d.n_cols);
    return capacity_lower_bound(composite, scene, rho, n_t, std::min(rows, cols),
                                std::max(rows, cols), beta, m)
        .c_lb;
}

CurveData eval_curve(const ExperimentSpec& spec, const SystemConfig& cfg,
                     const SceneMatrices& scene, const CompositeResponse& composite,
                     const std::vector<double>& rhos, double entry_variance, double beta_lb,
                     double m_lb, std::uint64_t mc_seed) {
    CurveData data;
    for (double rho : rhos)
        data.c_lb.push_back(lower_bound_bits(composite, scene, rho, cfg.n_t, beta_lb, m_lb));
    auto mc = ergodic_capacity_mc_grid(cfg, scene, composite, rhos, spec.trials, mc_seed,
                                       entry_variance, spec.threads);
    for (auto& r : mc) {
        data.c_mc.push_back(r.mean);
        data.ci.push_back(r.ci_halfwidth);
    }
    data.ebmin = min_energy_per_bit(composite, scene, cfg.n_t);
    data.s0 = wideband_slope(composite, scene, cfg.n_t, cfg.n_r);
    return data;
}

std::string curve_rows(const ExperimentSpec& spec, const std::vector<double>& snr_db,
                       const CurveData& data) {
    std::string out;
    for (size_t i = 0; i < snr_db.size(); ++i) {
        CapacityRow row;
        row.snr_db = snr_db[i];
        row.c_lb = data.c_lb[i];
        row.c_mc = data.c_mc[i];
        row.ci = data.ci[i];
        row.ebn0min_db = 10.0 * std::log10(data.ebmin);
        row.s0 = data.s0;
        row.trials = spec.trials;
        row.seed = spec.seed;
        out += capacity_csv_row(row) + "\n";
    }
    return out;
}

std::string gp_preamble(const std::string& csv_name, const std::string& xlabel,
                        const std::string& ylabel) {
    std::string gp;
    gp += "# gnuplot script; expects " + csv_name + " in the working directory\n";
    gp += "set datafile separator \",\"\n";
    gp += "set xlabel \"" + xlabel + "\"\n";
    gp += "set ylabel \"" + ylabel + "\"\n";
    gp += "set key left top\n";
    gp += "set grid\n";
    return gp;
}

}  // namespace

int run_capacity_sweep(const ExperimentSpec& spec) {
    const bool physical = spec.variance_mode == "physical";
    const std::vector<double> rhos = grid_to_rho(spec.snr_grid_db);
    const double rho_ref = reference_rho(spec);

    std::string csv = meta_block(spec);
    csv += capacity_csv_header() + "\n";
    std::string gp = gp_preamble("capacity_sweep.csv", "SNR (dB)", "capacity (bits/s/Hz)");
    std::vector<std::string> plot_entries;
    int block = 0;

    for (size_t ip = 0; ip < spec.mn_pairs.size(); ++ip) {
        auto [m, n] = spec.mn_pairs[ip];
        SystemConfig cfg = spec.config;
        cfg.m_tx = m;
        cfg.n_rx = n;
        cfg.finalize();
        cfg.validate();
        SceneMatrices scene = build_scene(cfg);
        const double var = physical ? scene.beta / m : 1.0;
        const double beta_lb = physical ? scene.beta : 1.0;
        const double m_lb = physical ? static_cast<double>(m) : 1.0;
        const std::string pair_tag = std::to_string(m) + "x" + std::to_string(n);

        for (const std::string& curve : spec.curves) {
            CurveData data;
            if (curve == "optimized") {
                PhaseProfile init = random_profile(cfg, derived_seed(spec.seed, ip, 0));
                ObjectiveSpec obj{Objective::clb, rho_ref, var};
                OptimizerOptions opts{spec.max_iters, spec.tol, spec.step};
                OptimizerState st = projected_gradient_ascent(cfg, scene, obj, init, opts);
                CompositeResponse composite = compose(st.profile, scene);
                data = eval_curve(spec, cfg, scene, composite, rhos, var, beta_lb, m_lb,
                                  derived_seed(spec.seed, ip, 1));
            } else if (curve == "random_phase") {
                // mean over independently seeded random profiles; the CI of the
                // mean combines the per-profile CI values
                const int reps = spec.rand_profiles;
                data.c_lb.assign(rhos.size(), 0.0);
                data.c_mc.assign(rhos.size(), 0.0);
                data.ci.assign(rhos.size(), 0.0);
                for (int j = 0; j < reps; ++j) {
                    PhaseProfile pr = random_profile(cfg, derived_seed(spec.seed, ip, 10 + j));
                    CompositeResponse composite = compose(pr, scene);
                    CurveData one = eval_curve(spec, cfg, scene, composite, rhos, var, beta_lb,
                                               m_lb, derived_seed(spec.seed, ip, 40 + j));
                    for (size_t r = 0; r < rhos.size(); ++r) {
                        data.c_lb[r] += one.c_lb[r] / reps;
                        data.c_mc[r] += one.c_mc[r] / reps;
                        data.ci[r] += one.ci[r] * one.ci[r];
                    }
                    data.ebmin += one.ebmin / reps;
                    data.s0 += one.s0 / reps;
                }
                for (size_t r = 0; r < rhos.size(); ++r) data.ci[r] = std::sqrt(data.ci[r]) / reps;
            } else {  // iid_baseline: unit-variance reference channel, no stacks
                SceneMatrices iid_scene;
                CompositeResponse iid_comp;
                identity_setup(cfg.n_t, cfg.n_r, iid_scene, iid_comp);
                data = eval_curve(spec, cfg, iid_scene, iid_comp, rhos, 1.0, 1.0, 1.0,
                                  derived_seed(spec.seed, ip, 2));
            }

            if (block) csv += "\n\n";
            csv += "# pair=" + pair_tag + " curve=" + curve + "\n";
            csv += curve_rows(spec, spec.snr_grid_db, data);
            std::string label = pair_tag + " " + curve;
            plot_entries.push_back("'capacity_sweep.csv' index " + std::to_string(block) +
                                   " using 1:2 with lines title \"" + label + " bound\"");
            plot_entries.push_back("'capacity_sweep.csv' index " + std::to_string(block) +
                                   " using 1:3 with points title \"" + label + " mc\"");
            ++block;
        }
    }

    gp += "plot \\\n";
    for (size_t i = 0; i < plot_entries.size(); ++i)
        gp += "  " + plot_entries[i] + (i + 1 < plot_entries.size() ? ", \\\n" : "\n");

    write_file(spec.out_dir, "capacity_sweep.csv", csv);
    write_file(spec.out_dir, "capacity_sweep.gp", gp);
    return 0;
}

int run_low_snr(const ExperimentSpec& spec) {
    if (spec.variance_mode != "normalized")
        throw std::invalid_argument(
            "low_snr uses the unit-variance normalization; variance_mode=physical is not valid");
    SystemConfig cfg = spec.config;
    SceneMatrices scene = build_scene(cfg);

    std::string csv = meta_block(spec);
    csv += "ebn0_db, capacity, ci, rho, trials, seed\n";
    std::string gp = gp_preamble("low_snr.csv", "Eb/N0 (dB)", "capacity (bits/s/Hz)");
    std::vector<std::string> plot_entries;
    int block = 0;

    for (size_t ic = 0; ic < spec.curves.size(); ++ic) {
        const std::string& curve = spec.curves[ic];
        SceneMatrices* sc = &scene;
        SceneMatrices iid_scene;
        CompositeResponse composite;
        if (curve == "optimized") {
            PhaseProfile init = random_profile(cfg, derived_seed(spec.seed, 2, 0));
            ObjectiveSpec obj{objective_from_name(spec.objective), cfg.snr_linear(), 1.0};
            OptimizerOptions opts{spec.max_iters, spec.tol, spec.step};
            OptimizerState st = projected_gradient_ascent(cfg, scene, obj, init, opts);
            composite = compose(st.profile, scene);
        } else if (curve == "random_phase") {
            composite = compose(random_profile(cfg, derived_seed(spec.seed, 1, 0)), scene);
        } else {
            identity_setup(cfg.n_t, cfg.n_r, iid_scene, composite);
            sc = &iid_scene;
        }
        double ebmin = min_energy_per_bit(composite, *sc, cfg.n_t);
        double s0v = wideband_slope(composite, *sc, cfg.n_t, cfg.n_r);

        if (block) csv += "\n\n";
        csv += "# curve=" + curve + " series=analytic ebn0min_db=" +
               format_number(10.0 * std::log10(ebmin)) + " s0=" + format_number(s0v) + "\n";
        for (double db : spec.ebn0_grid_db) {
            double cap = low_snr_capacity(std::pow(10.0, db / 10.0), s0v, ebmin);
            csv += format_number(db) + ", " + format_number(cap) + ", 0, 0, 0, " +
                   std::to_string(spec.seed) + "\n";
        }
        plot_entries.push_back("'low_snr.csv' index " + std::to_string(block) +
                               " using 1:2 with lines title \"" + curve + " analytic\"");
        ++block;

        csv += "\n\n# curve=" + curve + " series=mc\n";
        for (size_t k = 0; k < kEbMultipliers.size(); ++k) {
            double rho = ebmin * kEbMultipliers[k];
            auto mc = ergodic_capacity_mc_grid(cfg, *sc, composite, {rho}, spec.trials,
                                               derived_seed(spec.seed, 10 + ic, k), 1.0,
                                               spec.threads)[0];
            double eb_db = 10.0 * std::log10(rho / mc.mean);
            csv += format_number(eb_db) + ", " + format_number(mc.mean) + ", " +
                   format_number(mc.ci_halfwidth) + ", " + format_number(rho) + ", " +
                   std::to_string(spec.trials) + ", " + std::to_string(spec.seed) + "\n";
        }
        plot_entries.push_back("'low_snr.csv' index " + std::to_string(block) +
                               " using 1:2:3 with yerrorbars title \"" + curve + " mc\"");
        ++block;
    }

    gp += "plot \\\n";
    for (size_t i = 0; i < plot_entries.size(); ++i)
        gp += "  " + plot_entries[i] + (i + 1 < plot_entries.size() ? ", \\\n" : "\n");

    write_file(spec.out_dir, "low_snr.csv", csv);
    write_file(spec.out_dir, "low_snr.gp", gp);
    return 0;
}

int run_convergence(const ExperimentSpec& spec) {
    SystemConfig cfg = spec.config;
    SceneMatrices scene = build_scene(cfg);
    const bool physical = spec.variance_mode == "physical";
    const double var = physical ? scene.beta / cfg.m_tx : 1.0;
    ObjectiveSpec obj{objective_from_name(spec.objective), cfg.snr_linear(), var};
    OptimizerOptions opts{spec.max_iters, spec.tol, spec.step};

    std::string csv = meta_block(spec);
    csv += "start, iter, objective, step_tx, step_rx\n";
    std::string gp = gp_preamble("convergence.csv", "iteration", "objective");
    std::vector<std::string> plot_entries;
    int within_20 = 0;

    for (int s = 0; s < spec.starts; ++s) {
        PhaseProfile init = random_profile(cfg, derived_seed(spec.seed, 4, s));
        OptimizerState st = projected_gradient_ascent(cfg, scene, obj, init, opts);
        if (s) csv += "\n\n";
        csv += "# start=" + std::to_string(s) + "\n";
        for (size_t i = 0; i < st.trajectory.size(); ++i) {
            double mu_tx = i ? st.step_tx_history[i - 1] : 0.0;
            double mu_rx = i ? st.step_rx_history[i - 1] : 0.0;
            csv += std::to_string(s) + ", " + std::to_string(i) + ", " +
                   format_number(st.trajectory[i]) + ", " + format_number(mu_tx) + ", " +
                   format_number(mu_rx) + "\n";
        }
        int stab = st.status == "converged" ? st.iteration : -1;
        if (stab >= 0 && stab <= 20) ++within_20;
        csv += "# start=" + std::to_string(s) + " status=" + st.status +
               " stabilization_iter=" + std::to_string(stab) +
               " final=" + format_number(st.objective_value) + "\n";
        plot_entries.push_back("'convergence.csv' index " + std::to_string(s) +
                               " using 2:3 with linespoints title \"start " +
                               std::to_string(s) + "\"");
    }
    csv += "# stabilized_within_20_iters: " + std::to_string(within_20) + "/" +
           std::to_string(spec.starts) + "\n";

    gp += "plot \\\n";
    for (size_t i = 0; i < plot_entries.size(); ++i)
        gp += "  " + plot_entries[i] + (i + 1 < plot_entries.size() ? ", \\\n" : "\n");

    write_file(spec.out_dir, "convergence.csv", csv);
    write_file(spec.out_dir, "convergence.gp", gp);
    return 0;
}

}  // namespace simcap::cli
