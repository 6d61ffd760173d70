#include "experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "simcap/channel.hpp"

namespace simcap::cli {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

double parse_double(const std::string& text) {
    size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("bad number: " + text);
    return v;
}

int parse_int(const std::string& text) {
    size_t used = 0;
    int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument("bad integer: " + text);
    return v;
}

}  // namespace

ExperimentSpec make_default_spec(const std::string& scenario) {
    ExperimentSpec spec;
    spec.scenario = scenario;
    spec.config = default_config();
    spec.seed = spec.config.seed;
    for (int db = -10; db <= 30; db += 5) spec.snr_grid_db.push_back(db);
    for (int db = -12; db <= 20; db += 1) spec.ebn0_grid_db.push_back(db);
    spec.mn_pairs = {{40, 100}, {20, 100}, {40, 50}};
    spec.curves = {"optimized", "random_phase", "iid_baseline"};
    if (scenario == "validate") {
        spec.trials = 10000;
    } else {
        spec.trials = 2000;
    }
    spec.objective = scenario == "low_snr" ? "ebmin" : "clb";
    return spec;
}

void apply_spec_override(ExperimentSpec& spec, const std::string& key, const std::string& value) {
    if (key == "snr_grid_db") {
        spec.snr_grid_db = parse_grid(value);
    } else if (key == "ebn0_grid_db") {
        spec.ebn0_grid_db = parse_grid(value);
    } else if (key == "mn_pairs") {
        spec.mn_pairs = parse_pairs(value);
    } else if (key == "curves") {
        spec.curves = split(value, ',');
    } else if (key == "variance_mode") {
        spec.variance_mode = value;
    } else if (key == "reference_snr_db") {
        spec.reference_snr_db = parse_double(value);
        spec.reference_snr_set = true;
    } else if (key == "threads") {
        spec.threads = parse_int(value);
    } else if (key == "rand_profiles") {
        spec.rand_profiles = parse_int(value);
    } else {
        apply_config_override(spec.config, key, value);
        if (key == "seed") spec.seed = spec.config.seed;
    }
}

void validate_spec(const ExperimentSpec& spec) {
    auto check_grid = [](const std::vector<double>& g, const char* name) {
        if (g.empty()) throw std::invalid_argument(std::string(name) + " is empty");
        for (size_t i = 1; i < g.size(); ++i)
            if (!(g[i] > g[i - 1]))
                throw std::invalid_argument(std::string(name) + " must be strictly increasing");
    };
    check_grid(spec.snr_grid_db, "snr_grid_db");
    check_grid(spec.ebn0_grid_db, "ebn0_grid_db");
    if (spec.mn_pairs.empty()) throw std::invalid_argument("mn_pairs is empty");
    for (auto& [m, n] : spec.mn_pairs)
        if (m < 1 || n < 1) throw std::invalid_argument("mn_pairs entries must be positive");
    if (spec.curves.empty()) throw std::invalid_argument("curves is empty");
    for (auto& c : spec.curves)
        if (c != "optimized" && c != "random_phase" && c != "iid_baseline")
            throw std::invalid_argument("unknown curve: " + c);
    if (spec.variance_mode != "normalized" && spec.variance_mode != "physical")
        throw std::invalid_argument("variance_mode must be normalized or physical");
    if (spec.objective != "clb" && spec.objective != "ebmin" && spec.objective != "s0")
        throw std::invalid_argument("objective must be clb, ebmin, or s0");
    if (spec.trials < 2) throw std::invalid_argument("trials must be at least 2");
    if (spec.threads < 1) throw std::invalid_argument("threads must be positive");
    if (spec.rand_profiles < 1) throw std::invalid_argument("rand_profiles must be positive");
    if (spec.starts < 1) throw std::invalid_argument("starts must be positive");
    if (spec.max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
    if (!(spec.tol >= 0.0)) throw std::invalid_argument("tol must be nonnegative");
    if (!(spec.step > 0.0)) throw std::invalid_argument("step must be positive");
    if (spec.out_dir.empty()) throw std::invalid_argument("output directory is empty");
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    auto colon = split(text, ':');
    if (colon.size() == 3) {
        double lo = parse_double(colon[0]);
        double step = parse_double(colon[1]);
        double hi = parse_double(colon[2]);
        if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
        for (double v = lo; v <= hi + 1e-9 * std::max(1.0, std::abs(hi)); v += step)
            out.push_back(v);
        return out;
    }
    for (auto& part : split(text, ',')) out.push_back(parse_double(part));
    return out;
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& text) {
    std::vector<std::pair<int, int>> out;
    for (auto& part : split(text, ',')) {
        auto xy = split(part, 'x');
        if (xy.size() != 2) throw std::invalid_argument("bad pair (want MxN): " + part);
        out.emplace_back(parse_int(xy[0]), parse_int(xy[1]));
    }
    return out;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string join_numbers(const std::vector<double>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_number(v[i]);
    }
    return out;
}

std::uint64_t derived_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return trial_seed(trial_seed(master, a), b);
}

double reference_rho(const ExperimentSpec& spec) {
    double db = spec.reference_snr_set ? spec.reference_snr_db
                                       : spec.snr_grid_db[spec.snr_grid_db.size() / 2];
    return std::pow(10.0, db / 10.0);
}

void identity_setup(int n_t, int n_r, SceneMatrices& scene, CompositeResponse& composite) {
    scene = SceneMatrices{};
    scene.r_t = arma::eye<arma::cx_mat>(n_t, n_t);
    scene.r_r = arma::eye<arma::cx_mat>(n_r, n_r);
    scene.r_t_sqrt = scene.r_t;
    scene.r_r_sqrt = scene.r_r;
    scene.beta = 1.0;
    composite.p = arma::eye<arma::cx_mat>(n_t, n_t);
    composite.d = arma::eye<arma::cx_mat>(n_r, n_r);
    composite.gram_p = composite.p;
    composite.gram_d = composite.d;
}

std::string meta_block(const ExperimentSpec& spec) {
    std::string out;
    out += "# scenario: " + spec.scenario + "\n";
    out += "# seed: " + std::to_string(spec.seed) + "\n";
    out += "# trials: " + std::to_string(spec.trials) + "\n";
    out += "# variance_mode: " + spec.variance_mode + "\n";
    if (spec.scenario == "capacity_sweep") {
        out += "# snr_grid_db: " + join_numbers(spec.snr_grid_db) + "\n";
        out += "# reference_snr_db: " +
               format_number(10.0 * std::log10(reference_rho(spec))) + "\n";
        std::string pairs;
        for (size_t i = 0; i < spec.mn_pairs.size(); ++i) {
            if (i) pairs += ",";
            pairs += std::to_string(spec.mn_pairs[i].first) + "x" +
                     std::to_string(spec.mn_pairs[i].second);
        }
        out += "# mn_pairs: " + pairs + "\n";
    }
    if (spec.scenario == "low_snr") out += "# ebn0_grid_db: " + join_numbers(spec.ebn0_grid_db) + "\n";
    if (spec.scenario == "capacity_sweep" || spec.scenario == "low_snr") {
        std::string curves;
        for (size_t i = 0; i < spec.curves.size(); ++i) {
            if (i) curves += ",";
            curves += spec.curves[i];
        }
        out += "# curves: " + curves + "\n";
    }
    if (spec.scenario != "capacity_sweep") out += "# objective: " + spec.objective + "\n";
    if (spec.scenario == "convergence") {
        out += "# starts: " + std::to_string(spec.starts) + "\n";
        out += "# max_iters: " + std::to_string(spec.max_iters) + "\n";
        out += "# tol: " + format_number(spec.tol) + "\n";
        out += "# step: " + format_number(spec.step) + "\n";
    }
    out += "# config: " + config_to_json(spec.config) + "\n";
    return out;
}

void write_file(const std::string& dir, const std::string& name, const std::string& body) {
    std::filesystem::create_directories(dir);
    std::filesystem::path path = std::filesystem::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace simcap::cli
