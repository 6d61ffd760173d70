#include "simcap/scene.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace simcap {

namespace {
constexpr double kSpeedOfLight = 299792458.0;
constexpr double kPi = 3.14159265358979323846;

double sinc(double x) {
    if (x == 0.0) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}
}  // namespace

void SystemConfig::finalize() {
    if (std::isnan(wavelength)) wavelength = kSpeedOfLight / carrier_freq;
    if (std::isnan(element_spacing)) element_spacing = wavelength / 2.0;
    if (std::isnan(element_area)) element_area = element_spacing * element_spacing;
    if (std::isnan(sim_thickness_tx)) sim_thickness_tx = 5.0 * wavelength;
    if (std::isnan(sim_thickness_rx)) sim_thickness_rx = 5.0 * wavelength;
}

void SystemConfig::validate() const {
    auto positive_count = [](int v, const char* name) {
        if (v < 1) throw std::invalid_argument(std::string(name) + " must be >= 1");
    };
    positive_count(n_t, "n_t");
    positive_count(n_r, "n_r");
    positive_count(m_tx, "m_tx");
    positive_count(n_rx, "n_rx");
    positive_count(layers_tx, "layers_tx");
    positive_count(layers_rx, "layers_rx");
    auto positive_real = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string(name) + " must be positive and finite");
    };
    positive_real(carrier_freq, "carrier_freq");
    positive_real(wavelength, "wavelength");
    positive_real(element_spacing, "element_spacing");
    positive_real(element_area, "element_area");
    positive_real(sim_thickness_tx, "sim_thickness_tx");
    positive_real(sim_thickness_rx, "sim_thickness_rx");
    positive_real(link_distance, "link_distance");
    positive_real(bandwidth_hz, "bandwidth_hz");
    if (!(pathloss_exponent >= 0.0))
        throw std::invalid_argument("pathloss_exponent must be >= 0");
    if (!std::isfinite(tx_power_dbm) || !std::isfinite(noise_dbm) || !std::isfinite(altitude_m))
        throw std::invalid_argument("power/noise/altitude must be finite");
    if (!(link_distance > sim_thickness_tx + sim_thickness_rx))
        throw std::invalid_argument("link_distance must exceed the combined surface thicknesses");
    if (!(snr_linear() > 0.0)) throw std::invalid_argument("snr must be positive");
}

double SystemConfig::snr_linear() const {
    return std::pow(10.0, (tx_power_dbm - noise_dbm) / 10.0);
}

SystemConfig default_config() {
    SystemConfig cfg;
    cfg.finalize();
    cfg.validate();
    return cfg;
}

namespace {

void assign_field(SystemConfig& cfg, const std::string& key, const nlohmann::json& v) {
    if (key == "n_t") cfg.n_t = v.get<int>();
    else if (key == "n_r") cfg.n_r = v.get<int>();
    else if (key == "m_tx") cfg.m_tx = v.get<int>();
    else if (key == "n_rx") cfg.n_rx = v.get<int>();
    else if (key == "layers_tx") cfg.layers_tx = v.get<int>();
    else if (key == "layers_rx") cfg.layers_rx = v.get<int>();
    else if (key == "carrier_freq") cfg.carrier_freq = v.get<double>();
    else if (key == "wavelength") cfg.wavelength = v.get<double>();
    else if (key == "element_spacing") cfg.element_spacing = v.get<double>();
    else if (key == "element_area") cfg.element_area = v.get<double>();
    else if (key == "sim_thickness_tx") cfg.sim_thickness_tx = v.get<double>();
    else if (key == "sim_thickness_rx") cfg.sim_thickness_rx = v.get<double>();
    else if (key == "link_distance") cfg.link_distance = v.get<double>();
    else if (key == "pathloss_exponent") cfg.pathloss_exponent = v.get<double>();
    else if (key == "tx_power_dbm") cfg.tx_power_dbm = v.get<double>();
    else if (key == "noise_dbm") cfg.noise_dbm = v.get<double>();
    else if (key == "bandwidth_hz") cfg.bandwidth_hz = v.get<double>();
    else if (key == "altitude_m") cfg.altitude_m = v.get<double>();
    else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
    else throw std::invalid_argument("unknown config key: " + key);
}

}  // namespace

SystemConfig config_from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    SystemConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) assign_field(cfg, it.key(), it.value());
    cfg.finalize();
    cfg.validate();
    return cfg;
}

SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

void apply_config_override(SystemConfig& cfg, const std::string& key, const std::string& value) {
    nlohmann::json v = nlohmann::json::parse(value, nullptr, false);
    if (v.is_discarded()) v = value;  // bare strings allowed
    assign_field(cfg, key, v);
}

std::string config_to_json(const SystemConfig& cfg) {
    nlohmann::ordered_json j;
    j["n_t"] = cfg.n_t;
    j["n_r"] = cfg.n_r;
    j["m_tx"] = cfg.m_tx;
    j["n_rx"] = cfg.n_rx;
    j["layers_tx"] = cfg.layers_tx;
    j["layers_rx"] = cfg.layers_rx;
    j["carrier_freq"] = cfg.carrier_freq;
    j["wavelength"] = cfg.wavelength;
    j["element_spacing"] = cfg.element_spacing;
    j["element_area"] = cfg.element_area;
    j["sim_thickness_tx"] = cfg.sim_thickness_tx;
    j["sim_thickness_rx"] = cfg.sim_thickness_rx;
    j["link_distance"] = cfg.link_distance;
    j["pathloss_exponent"] = cfg.pathloss_exponent;
    j["tx_power_dbm"] = cfg.tx_power_dbm;
    j["noise_dbm"] = cfg.noise_dbm;
    j["bandwidth_hz"] = cfg.bandwidth_hz;
    j["altitude_m"] = cfg.altitude_m;
    j["seed"] = cfg.seed;
    return j.dump();
}

std::pair<int, int> most_square_grid(int count) {
    if (count < 1) throw std::invalid_argument("per-layer element count must be >= 1");
    for (int r = static_cast<int>(std::sqrt(static_cast<double>(count))); r >= 1; --r) {
        if (count % r == 0) return {r, count / r};
    }
    return {1, count};
}

namespace {

// planar grid in the x-z plane at height altitude, centered on x = 0
arma::mat grid_points(int count, double spacing, double y, double altitude) {
    auto [rows, cols] = most_square_grid(count);
    arma::mat pts(3, count);
    int idx = 0;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            pts(0, idx) = (j - (cols - 1) / 2.0) * spacing;
            pts(1, idx) = y;
            pts(2, idx) = altitude + (i - (rows - 1) / 2.0) * spacing;
            ++idx;
        }
    }
    return pts;
}

arma::mat ula_points(int count, double spacing, double y, double altitude) {
    arma::mat pts(3, count);
    for (int i = 0; i < count; ++i) {
        pts(0, i) = (i - (count - 1) / 2.0) * spacing;
        pts(1, i) = y;
        pts(2, i) = altitude;
    }
    return pts;
}

}  // namespace

SceneLayout build_layout(const SystemConfig& cfg) {
    cfg.validate();
    SceneLayout lay;
    lay.layer_normal = {0.0, 1.0, 0.0};
    const double gap_tx = cfg.sim_thickness_tx / cfg.layers_tx;
    const double gap_rx = cfg.sim_thickness_rx / cfg.layers_rx;
    const double sp = cfg.element_spacing;

    lay.tx_antennas = ula_points(cfg.n_t, sp, 0.0, cfg.altitude_m);
    for (int l = 1; l <= cfg.layers_tx; ++l)
        lay.tx_layers.push_back(grid_points(cfg.m_tx, sp, l * gap_tx, cfg.altitude_m));

    // receive side mirrors the transmit side: the outermost layer faces the link gap
    const double y_rx_outer = cfg.sim_thickness_tx + cfg.link_distance;
    for (int k = 1; k <= cfg.layers_rx; ++k)
        lay.rx_layers.push_back(grid_points(cfg.n_rx, sp, y_rx_outer + (cfg.layers_rx - k) * gap_rx,
                                            cfg.altitude_m));
    lay.rx_antennas = ula_points(cfg.n_r, sp, y_rx_outer + cfg.sim_thickness_rx, cfg.altitude_m);
    return lay;
}

arma::cx_mat coupling_matrix(const arma::mat& src, const arma::mat& dst,
                             const arma::vec& normal, double wavelength, double element_area) {
    const arma::uword ns = src.n_cols, nd = dst.n_cols;
    arma::cx_mat out(nd, ns);
    for (arma::uword m = 0; m < ns; ++m) {
        for (arma::uword n = 0; n < nd; ++n) {
            arma::vec diff = dst.col(n) - src.col(m);
            const double dist = arma::norm(diff);
            if (!(dist > 0.0)) throw std::invalid_argument("degenerate geometry");
            const double cos_chi = std::abs(arma::dot(diff, normal)) / dist;
            const std::complex<double> radial(1.0 / (2.0 * kPi * dist), -1.0 / wavelength);
            const double phase = 2.0 * kPi * dist / wavelength;
            out(n, m) = (element_area * cos_chi / dist) * radial *
                        std::complex<double>(std::cos(phase), std::sin(phase));
        }
    }
    return out;
}

arma::mat correlation_matrix(const arma::mat& positions, double wavelength) {
    const arma::uword n = positions.n_cols;
    arma::mat r(n, n);
    for (arma::uword i = 0; i < n; ++i) {
        r(i, i) = 1.0;
        for (arma::uword j = i + 1; j < n; ++j) {
            const double d = arma::norm(positions.col(i) - positions.col(j));
            const double v = sinc(2.0 * d / wavelength);
            r(i, j) = v;
            r(j, i) = v;
        }
    }
    return r;
}

arma::cx_mat matrix_sqrt_psd(const arma::cx_mat& r) {
    const double scale = arma::norm(r, "fro");
    if (arma::norm(r - r.t(), "fro") > 1e-12 * std::max(scale, 1.0))
        throw std::invalid_argument("matrix is not Hermitian");
    arma::vec eigval;
    arma::cx_mat eigvec;
    if (!arma::eig_sym(eigval, eigvec, r))
        throw std::runtime_error("eigendecomposition failed");
    if (eigval.min() < -1e-10 * std::max(eigval.max(), 1.0))
        throw std::invalid_argument("matrix is not positive semidefinite");
    arma::vec clipped = arma::clamp(eigval, 0.0, eigval.max() > 0 ? eigval.max() : 0.0);
    return eigvec * arma::diagmat(arma::sqrt(clipped)) * eigvec.t();
}

double path_loss(double distance, double exponent, double wavelength) {
    if (!(distance > 0.0)) throw std::invalid_argument("distance must be positive");
    const double ref = wavelength / (4.0 * kPi);
    return ref * ref * std::pow(distance, -exponent);
}

SceneMatrices build_scene(const SystemConfig& cfg) {
    SceneLayout lay = build_layout(cfg);
    SceneMatrices sc;
    const double lam = cfg.wavelength;
    const double area = cfg.element_area;

    sc.w.push_back(coupling_matrix(lay.tx_antennas, lay.tx_layers[0], lay.layer_normal, lam, area));
    for (int l = 1; l < cfg.layers_tx; ++l)
        sc.w.push_back(coupling_matrix(lay.tx_layers[l - 1], lay.tx_layers[l], lay.layer_normal, lam, area));

    // u[0] propagates the innermost receive layer onto the antennas; u[k>=1] steps layer k+1 -> k
    sc.u.push_back(coupling_matrix(lay.rx_layers[0], lay.rx_antennas, lay.layer_normal, lam, area));
    for (int k = 1; k < cfg.layers_rx; ++k)
        sc.u.push_back(coupling_matrix(lay.rx_layers[k], lay.rx_layers[k - 1], lay.layer_normal, lam, area));

    // every layer shares one grid pattern, so any layer's correlation is the same;
    // the channel-facing layers are the semantically right ones
    arma::mat rt = correlation_matrix(lay.tx_layers[cfg.layers_tx - 1], lam);
    arma::mat rr = correlation_matrix(lay.rx_layers[cfg.layers_rx - 1], lam);
    sc.r_t = arma::cx_mat(rt, arma::mat(rt.n_rows, rt.n_cols, arma::fill::zeros));
    sc.r_r = arma::cx_mat(rr, arma::mat(rr.n_rows, rr.n_cols, arma::fill::zeros));
    sc.r_t_sqrt = matrix_sqrt_psd(sc.r_t);
    sc.r_r_sqrt = matrix_sqrt_psd(sc.r_r);
    sc.beta = path_loss(cfg.link_distance, cfg.pathloss_exponent, cfg.wavelength);
    return sc;
}

}  // namespace simcap
