#include "simcap/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace simcap {

void Rng::normal_pair(double& a, double& b) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    a = r * std::cos(two_pi * u2);
    b = r * std::sin(two_pi * u2);
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial_index) {
    std::uint64_t x = master ^ ((trial_index + 1) * 0x9E3779B97F4A7C15ULL);
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

arma::cx_mat draw_gtilde(std::uint64_t seed, int rows, int cols, double variance) {
    if (!(variance > 0.0)) throw std::invalid_argument("entry variance must be positive");
    Rng rng(seed);
    const double s = std::sqrt(variance / 2.0);
    arma::cx_mat g(rows, cols);
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) {
            double a, b;
            rng.normal_pair(a, b);
            g(r, c) = std::complex<double>(s * a, s * b);
        }
    }
    return g;
}

arma::cx_mat assemble_h(const arma::cx_mat& g_tilde, const CompositeResponse& composite,
                        const SceneMatrices& scene) {
    if (scene.r_r_sqrt.n_cols != g_tilde.n_rows || g_tilde.n_cols != scene.r_t_sqrt.n_rows ||
        composite.d.n_cols != g_tilde.n_rows || scene.r_t_sqrt.n_cols != composite.p.n_rows)
        throw std::invalid_argument("channel dimension mismatch");
    arma::cx_mat g = scene.r_r_sqrt * g_tilde * scene.r_t_sqrt;
    return composite.d * g * composite.p;
}

ChannelDraw draw_channel(std::uint64_t master, std::uint64_t trial_index,
                         const SceneMatrices& scene, const CompositeResponse& composite,
                         double entry_variance) {
    ChannelDraw out;
    out.seed = trial_seed(master, trial_index);
    out.g_tilde = draw_gtilde(out.seed, static_cast<int>(composite.d.n_cols),
                              static_cast<int>(composite.p.n_rows), entry_variance);
    out.g = scene.r_r_sqrt * out.g_tilde * scene.r_t_sqrt;
    out.h = composite.d * out.g * composite.p;
    return out;
}

}  // namespace simcap
