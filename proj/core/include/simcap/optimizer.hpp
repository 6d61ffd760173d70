#pragma once

#include <armadillo>
#include <functional>
#include <string>
#include <vector>

#include "simcap/scene.hpp"
#include "simcap/simstack.hpp"

namespace simcap {

enum class Objective { clb, ebmin, s0 };

Objective objective_from_name(const std::string& name);
std::string objective_name(Objective kind);

// What to optimize. rho and entry_variance apply to the capacity bound only;
// the low-SNR objectives are SNR-free.
struct ObjectiveSpec {
    Objective kind = Objective::clb;
    double rho = 10.0;
    double entry_variance = 1.0;
};

// Objective in its natural orientation: the capacity bound and the wideband
// slope are maximized, the minimum energy per bit is minimized.
double evaluate_objective(const ObjectiveSpec& spec, const SystemConfig& cfg,
                          const SceneMatrices& scene, const CompositeResponse& composite);

// Per-layer Wirtinger phase gradients, ascent convention: the derivative with
// respect to the i-th phase angle is 2 Im(conj(phi_i) g_i) with phi the layer's
// unit-modulus weights. The capacity-bound gradients use the physical inner
// variance beta / M; that choice only scales the vector, never its direction.
arma::cx_vec grad_clb_tx(const PhaseProfile& profile, const SceneMatrices& scene,
                         const CompositeResponse& composite, const PartialProducts& partials,
                         double rho, int layer_index);
arma::cx_vec grad_clb_rx(const PhaseProfile& profile, const SceneMatrices& scene,
                         const CompositeResponse& composite, const PartialProducts& partials,
                         double rho, int layer_index);
arma::cx_vec grad_ebmin(const PhaseProfile& profile, const SceneMatrices& scene,
                        const CompositeResponse& composite, const PartialProducts& partials,
                        Side side, int layer_index);
arma::cx_vec grad_s0(const PhaseProfile& profile, const SceneMatrices& scene,
                     const CompositeResponse& composite, const PartialProducts& partials,
                     Side side, int layer_index);

// Central difference of `objective` over each phase angle of one layer, mapped
// to the complex tangent convention used by the analytic gradients.
arma::cx_vec finite_diff_gradient(const std::function<double(const PhaseProfile&)>& objective,
                                  const PhaseProfile& profile, Side side, int layer_index,
                                  double h);

struct OptimizerOptions {
    int max_iters = 100;
    double tol = 1e-5;  // relative objective change between accepted iterates
    double step = 1.0;  // initial step size, reset every iteration
};

struct OptimizerState {
    PhaseProfile profile;
    Objective objective = Objective::clb;
    double objective_value = 0.0;  // natural orientation
    int iteration = 0;             // number of accepted iterations
    double step_tx = 0.0;          // last accepted step sizes
    double step_rx = 0.0;
    std::vector<double> trajectory;       // objective per iteration, [0] is the init
    std::vector<double> step_tx_history;  // accepted step per iteration
    std::vector<double> step_rx_history;
    std::string status;  // "converged" | "stalled" | "max_iters"
};

// Simultaneous gradient step on every layer of both stacks, projection back to
// unit modulus, and joint backtracking on the step sizes.
OptimizerState projected_gradient_ascent(const SystemConfig& cfg, const SceneMatrices& scene,
                                         const ObjectiveSpec& spec, const PhaseProfile& init,
                                         const OptimizerOptions& options);

}  // namespace simcap
