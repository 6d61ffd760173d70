#pragma once

#include <armadillo>
#include <cstdint>

#include "simcap/scene.hpp"
#include "simcap/simstack.hpp"

namespace simcap {

// Deterministic, platform-independent generator: a splitmix64 output stream with
// Box-Muller normals. Fully specified at the bit level so frozen test values and
// byte-identical reruns hold on any machine.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    // [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    // (0, 1], safe under log
    double uniform_pos() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }
    // one Box-Muller pair; the first uniform is the radial one
    void normal_pair(double& a, double& b);
};

// counter-based per-trial seed so any parallel schedule reproduces the same draws
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial_index);

// iid complex Gaussian entries CN(0, variance), filled column-major
arma::cx_mat draw_gtilde(std::uint64_t seed, int rows, int cols, double variance);

struct ChannelDraw {
    arma::cx_mat g_tilde;  // N x M iid
    arma::cx_mat g;        // correlated: R_r^{1/2} * g_tilde * R_t^{1/2}
    arma::cx_mat h;        // end to end: D * G * P
    std::uint64_t seed;
};

arma::cx_mat assemble_h(const arma::cx_mat& g_tilde, const CompositeResponse& composite,
                        const SceneMatrices& scene);

ChannelDraw draw_channel(std::uint64_t master, std::uint64_t trial_index,
                         const SceneMatrices& scene, const CompositeResponse& composite,
                         double entry_variance);

}  // namespace simcap
