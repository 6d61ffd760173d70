#include "simcap/simstack.hpp"

#include <stdexcept>

#include "json.hpp"
#include "simcap/channel.hpp"

namespace simcap {

PhaseProfile zero_profile(const SystemConfig& cfg) {
    PhaseProfile pr;
    for (int l = 0; l < cfg.layers_tx; ++l) pr.tx.push_back(arma::vec(cfg.m_tx, arma::fill::zeros));
    for (int k = 0; k < cfg.layers_rx; ++k) pr.rx.push_back(arma::vec(cfg.n_rx, arma::fill::zeros));
    return pr;
}

PhaseProfile random_profile(const SystemConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    PhaseProfile pr;
    constexpr double two_pi = 6.283185307179586476925286766559;
    for (int l = 0; l < cfg.layers_tx; ++l) {
        arma::vec v(cfg.m_tx);
        for (int m = 0; m < cfg.m_tx; ++m) v[m] = two_pi * rng.uniform();
        pr.tx.push_back(std::move(v));
    }
    for (int k = 0; k < cfg.layers_rx; ++k) {
        arma::vec v(cfg.n_rx);
        for (int n = 0; n < cfg.n_rx; ++n) v[n] = two_pi * rng.uniform();
        pr.rx.push_back(std::move(v));
    }
    return pr;
}

arma::cx_vec unit_weights(const arma::vec& angles) {
    arma::cx_vec w(angles.n_elem);
    for (arma::uword i = 0; i < angles.n_elem; ++i)
        w[i] = std::complex<double>(std::cos(angles[i]), std::sin(angles[i]));
    return w;
}

arma::cx_vec project_unit_modulus(const arma::cx_vec& v) {
    arma::cx_vec out(v.n_elem);
    for (arma::uword i = 0; i < v.n_elem; ++i) {
        const double mag = std::abs(v[i]);
        out[i] = mag > 0.0 ? v[i] / mag : std::complex<double>(1.0, 0.0);
    }
    return out;
}

arma::cx_mat compose_transmit(const PhaseProfile& profile, const SceneMatrices& scene) {
    if (profile.tx.size() != scene.w.size())
        throw std::invalid_argument("transmit layer count mismatch");
    for (size_t l = 0; l < scene.w.size(); ++l)
        if (profile.tx[l].n_elem != scene.w[l].n_rows)
            throw std::invalid_argument("transmit phase vector length mismatch");
    arma::cx_mat p = arma::diagmat(unit_weights(profile.tx[0])) * scene.w[0];
    for (size_t l = 1; l < scene.w.size(); ++l)
        p = arma::diagmat(unit_weights(profile.tx[l])) * (scene.w[l] * p);
    return p;
}

arma::cx_mat compose_receive(const PhaseProfile& profile, const SceneMatrices& scene) {
    if (profile.rx.size() != scene.u.size())
        throw std::invalid_argument("receive layer count mismatch");
    for (size_t k = 0; k < scene.u.size(); ++k)
        if (profile.rx[k].n_elem != scene.u[k].n_cols)
            throw std::invalid_argument("receive phase vector length mismatch");
    const size_t kk = scene.u.size();
    arma::cx_mat d = scene.u[kk - 1] * arma::diagmat(unit_weights(profile.rx[kk - 1]));
    for (size_t k = kk - 1; k-- > 0;)
        d = scene.u[k] * arma::diagmat(unit_weights(profile.rx[k])) * d;
    return d;
}

CompositeResponse compose(const PhaseProfile& profile, const SceneMatrices& scene) {
    CompositeResponse c;
    c.p = compose_transmit(profile, scene);
    c.d = compose_receive(profile, scene);
    c.gram_p = c.p.t() * c.p;
    c.gram_d = c.d * c.d.t();
    return c;
}

PartialProducts partial_products(const PhaseProfile& profile, const SceneMatrices& scene,
                                 Side side, int layer_index) {
    PartialProducts out;
    if (side == Side::transmit) {
        const int levels = static_cast<int>(scene.w.size());
        if (layer_index < 1 || layer_index > levels)
            throw std::invalid_argument("transmit layer index out of range");
        // right: this layer's coupling applied to everything before it
        arma::cx_mat right = scene.w[0];
        if (layer_index > 1) {
            arma::cx_mat acc = arma::diagmat(unit_weights(profile.tx[0])) * scene.w[0];
            for (int l = 2; l < layer_index; ++l)
                acc = arma::diagmat(unit_weights(profile.tx[l - 1])) * (scene.w[l - 1] * acc);
            right = scene.w[layer_index - 1] * acc;
        }
        // accumulate outermost-first: left = Phi_L W_L ... Phi_{l+1} W_{l+1}
        arma::cx_mat left = arma::eye<arma::cx_mat>(scene.w[0].n_rows, scene.w[0].n_rows);
        for (int l = levels; l > layer_index; --l)
            left = left * arma::diagmat(unit_weights(profile.tx[l - 1])) * scene.w[l - 1];
        out.left = left;
        out.right = right;
    } else {
        const int levels = static_cast<int>(scene.u.size());
        if (layer_index < 1 || layer_index > levels)
            throw std::invalid_argument("receive layer index out of range");
        arma::cx_mat pre = scene.u[0];
        for (int k = 2; k <= layer_index; ++k)
            pre = pre * arma::diagmat(unit_weights(profile.rx[k - 2])) * scene.u[k - 1];
        arma::cx_mat post = arma::eye<arma::cx_mat>(scene.u.back().n_cols, scene.u.back().n_cols);
        for (int k = levels; k > layer_index; --k)
            post = scene.u[k - 1] * arma::diagmat(unit_weights(profile.rx[k - 1])) * post;
        out.left = pre;
        out.right = post;
    }
    return out;
}

std::string profile_to_json(const PhaseProfile& profile) {
    nlohmann::ordered_json j;
    auto pack = [](const std::vector<arma::vec>& side) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& v : side) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (arma::uword i = 0; i < v.n_elem; ++i) row.push_back(v[i]);
            arr.push_back(std::move(row));
        }
        return arr;
    };
    j["tx"] = pack(profile.tx);
    j["rx"] = pack(profile.rx);
    return j.dump();
}

PhaseProfile profile_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    PhaseProfile pr;
    auto unpack = [](const nlohmann::json& arr, std::vector<arma::vec>& side) {
        for (const auto& row : arr) {
            arma::vec v(row.size());
            for (size_t i = 0; i < row.size(); ++i) v[i] = row[i].get<double>();
            side.push_back(std::move(v));
        }
    };
    unpack(j.at("tx"), pr.tx);
    unpack(j.at("rx"), pr.rx);
    return pr;
}

}  // namespace simcap
