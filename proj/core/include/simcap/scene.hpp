#pragma once

#include <armadillo>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace simcap {

// All scalar link parameters. Fields left NaN in a partially built config are
// resolved from the wavelength by finalize(): spacing = lambda/2, area = spacing^2,
// SIM thickness = 5*lambda.
struct SystemConfig {
    int n_t = 8;
    int n_r = 8;
    int m_tx = 40;
    int n_rx = 100;
    int layers_tx = 4;
    int layers_rx = 4;
    double carrier_freq = 2e9;
    double wavelength = nan("");
    double element_spacing = nan("");
    double element_area = nan("");
    double sim_thickness_tx = nan("");
    double sim_thickness_rx = nan("");
    double link_distance = 200.0;
    double pathloss_exponent = 2.5;
    double tx_power_dbm = 20.0;
    double noise_dbm = -110.0;
    double bandwidth_hz = 2e7;
    double altitude_m = 5.0;
    std::uint64_t seed = 1;

    void finalize();
    void validate() const;  // throws std::invalid_argument naming the bad field

    double snr_linear() const;                 // 10^((tx_power_dbm - noise_dbm)/10)
    int s() const { return std::min(m_tx, n_rx); }
    int t() const { return std::max(m_tx, n_rx); }
};

SystemConfig default_config();
SystemConfig load_config(const std::string& path);        // strict keys, defaults for absent fields
SystemConfig config_from_json_text(const std::string& text);
void apply_config_override(SystemConfig& cfg, const std::string& key, const std::string& value);
std::string config_to_json(const SystemConfig& cfg);      // resolved values, stable key order

struct SceneLayout {
    arma::mat tx_antennas;                 // 3 x n_t, columns are points
    arma::mat rx_antennas;                 // 3 x n_r
    std::vector<arma::mat> tx_layers;      // L matrices, 3 x M
    std::vector<arma::mat> rx_layers;      // K matrices, 3 x N; [0] is nearest the antennas
    arma::vec layer_normal;                // shared +y normal
};

// rows x cols with rows <= cols and rows maximal
std::pair<int, int> most_square_grid(int count);

SceneLayout build_layout(const SystemConfig& cfg);

arma::cx_mat coupling_matrix(const arma::mat& src, const arma::mat& dst,
                             const arma::vec& normal, double wavelength, double element_area);

arma::mat correlation_matrix(const arma::mat& positions, double wavelength);

arma::cx_mat matrix_sqrt_psd(const arma::cx_mat& r);

double path_loss(double distance, double exponent, double wavelength);

struct SceneMatrices {
    std::vector<arma::cx_mat> w;   // w[0]: M x n_t from the antennas, w[l>=1]: M x M
    std::vector<arma::cx_mat> u;   // u[0]: n_r x N toward the antennas, u[k>=1]: N x N
    arma::cx_mat r_t, r_r;         // element correlations on the channel-facing layers
    arma::cx_mat r_t_sqrt, r_r_sqrt;
    double beta = 0.0;             // linear inter-surface path gain
};

SceneMatrices build_scene(const SystemConfig& cfg);

}  // namespace simcap
