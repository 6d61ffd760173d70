#pragma once

#include <armadillo>
#include <cstdint>
#include <string>
#include <vector>

#include "simcap/channel.hpp"
#include "simcap/scene.hpp"
#include "simcap/simstack.hpp"

namespace simcap {

double digamma(double x);  // x > 0

// E[ln det] of the s x s Gram of an iid complex Gaussian t x s matrix
double wishart_logdet_mean(int s, int t, double entry_variance);

// log2 det(I + (rho/n_t) H^H H), via Cholesky
double instantaneous_capacity(const arma::cx_mat& h, double rho, int n_t);

struct McResult {
    double mean = 0.0;
    double ci_halfwidth = 0.0;  // 95%, normal approximation
};

// Sample mean over trials; per-trial seeds derive from the master seed so any
// worker count reproduces the same bytes. Default entry variance is the physical
// beta/M; pass 1.0 for normalized-variance experiments.
McResult ergodic_capacity_mc(const SystemConfig& cfg, const SceneMatrices& scene,
                             const CompositeResponse& composite, int trials,
                             std::uint64_t master_seed);
McResult ergodic_capacity_mc(const SystemConfig& cfg, const SceneMatrices& scene,
                             const CompositeResponse& composite, int trials,
                             std::uint64_t master_seed, double entry_variance, int threads);

// One eigendecomposition per trial serves the whole SNR grid.
std::vector<McResult> ergodic_capacity_mc_grid(const SystemConfig& cfg, const SceneMatrices& scene,
                                               const CompositeResponse& composite,
                                               const std::vector<double>& rhos, int trials,
                                               std::uint64_t master_seed, double entry_variance,
                                               int threads);

struct LowerBoundResult {
    double c_lb = 0.0;    // bits/s/Hz
    double v_term = 0.0;  // exp of the averaged log-determinant sum
    double log_sum = 0.0; // the averaged sum itself, nats
};

// Closed-form ergodic-capacity lower bound. beta/m set the iid entry variance of
// the inner channel; pass beta = m = 1 for the normalized form.
LowerBoundResult capacity_lower_bound(const CompositeResponse& composite,
                                      const SceneMatrices& scene, double rho, int n_t,
                                      int s, int t, double beta, double m);

double dispersion(const arma::cx_mat& a);  // dim(A) tr(A^2) / tr(A)^2

double min_energy_per_bit(const CompositeResponse& composite, const SceneMatrices& scene, int n_t);

double wideband_slope(const CompositeResponse& composite, const SceneMatrices& scene,
                      int n_t, int n_r);

// S0 * log2(eb/ebmin), floored at 0 below the minimum
double low_snr_capacity(double eb_n0, double s0, double eb_n0_min);

struct CapacityRow {
    double snr_db = 0.0;
    double c_lb = 0.0;
    double c_mc = 0.0;
    double ci = 0.0;
    double ebn0min_db = 0.0;
    double s0 = 0.0;
    long trials = 0;
    std::uint64_t seed = 0;
};

std::string capacity_csv_header();
std::string capacity_csv_row(const CapacityRow& row);  // 12 significant digits

}  // namespace simcap
