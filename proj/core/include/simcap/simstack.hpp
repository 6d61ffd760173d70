#pragma once

#include <armadillo>
#include <cstdint>
#include <string>
#include <vector>

#include "simcap/scene.hpp"

namespace simcap {

// Optimization variables: phases stored as angles so the unit-modulus feasible
// set is satisfied exactly; complex weights are derived on demand.
struct PhaseProfile {
    std::vector<arma::vec> tx;  // L vectors of M angles
    std::vector<arma::vec> rx;  // K vectors of N angles
};

PhaseProfile zero_profile(const SystemConfig& cfg);
PhaseProfile random_profile(const SystemConfig& cfg, std::uint64_t seed);

arma::cx_vec unit_weights(const arma::vec& angles);
arma::cx_vec project_unit_modulus(const arma::cx_vec& v);  // 0 maps to 1+0j

arma::cx_mat compose_transmit(const PhaseProfile& profile, const SceneMatrices& scene);
arma::cx_mat compose_receive(const PhaseProfile& profile, const SceneMatrices& scene);

struct CompositeResponse {
    arma::cx_mat p;       // M x n_t
    arma::cx_mat d;       // n_r x N
    arma::cx_mat gram_p;  // P^H P
    arma::cx_mat gram_d;  // D D^H
};

CompositeResponse compose(const PhaseProfile& profile, const SceneMatrices& scene);

enum class Side { transmit, receive };

// One layer's fixed factors: reassembly is left * diag(weights) * right on either side.
struct PartialProducts {
    arma::cx_mat left;
    arma::cx_mat right;
};

// layer_index is 1-based (1..L on the transmit side, 1..K on the receive side)
PartialProducts partial_products(const PhaseProfile& profile, const SceneMatrices& scene,
                                 Side side, int layer_index);

// round trip is bit exact for finite doubles
std::string profile_to_json(const PhaseProfile& profile);
PhaseProfile profile_from_json(const std::string& text);

}  // namespace simcap
