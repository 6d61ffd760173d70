#include "simcap/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <stdexcept>
#include <thread>

namespace simcap {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

// log det of a Hermitian positive definite matrix; reports failure instead of
// throwing so callers can attach a context-specific message. Eigenvalues at or
// below top * 1e-12 count as zero.
bool herm_logdet(const arma::cx_mat& a, double* out) {
    arma::cx_mat sym = 0.5 * (a + a.t());
    arma::vec w;
    if (!arma::eig_sym(w, sym)) return false;
    double top = w.max();
    if (!(top > 0.0) || w.min() <= top * 1e-12) return false;
    *out = arma::accu(arma::log(w));
    return true;
}

}  // namespace

double digamma(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("digamma requires x > 0");
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    double inv2 = 1.0 / (x * x);
    double tail = inv2 * (1.0 / 12.0 -
                  inv2 * (1.0 / 120.0 -
                  inv2 * (1.0 / 252.0 -
                  inv2 * (1.0 / 240.0 -
                  inv2 * (1.0 / 132.0)))));
    return acc + std::log(x) - 0.5 / x - tail;
}

double wishart_logdet_mean(int s, int t, double entry_variance) {
    if (s < 1 || t < s) throw std::invalid_argument("wishart_logdet_mean requires 1 <= s <= t");
    if (!(entry_variance > 0.0)) throw std::invalid_argument("entry variance must be positive");
    double sum = 0.0;
    for (int i = 0; i < s; ++i) sum += digamma(static_cast<double>(t - i));
    return sum + s * std::log(entry_variance);
}

double instantaneous_capacity(const arma::cx_mat& h, double rho, int n_t) {
    if (n_t < 1) throw std::invalid_argument("n_t must be positive");
    if (rho < 0.0) throw std::invalid_argument("snr must be nonnegative");
    if (!h.is_finite()) throw std::invalid_argument("channel matrix has non-finite entries");
    arma::cx_mat a = arma::eye<arma::cx_mat>(h.n_cols, h.n_cols) + (rho / n_t) * (h.t() * h);
    arma::cx_mat r;
    if (!arma::chol(r, a)) throw std::runtime_error("capacity evaluation failed");
    return 2.0 * arma::accu(arma::log(arma::real(r.diag()))) / kLn2;
}

std::vector<McResult> ergodic_capacity_mc_grid(const SystemConfig& cfg, const SceneMatrices& scene,
                                               const CompositeResponse& composite,
                                               const std::vector<double>& rhos, int trials,
                                               std::uint64_t master_seed, double entry_variance,
                                               int threads) {
    (void)cfg;
    if (trials < 2) throw std::invalid_argument("trials must be at least 2");
    if (rhos.empty()) throw std::invalid_argument("snr grid is empty");
    for (double rho : rhos)
        if (rho < 0.0) throw std::invalid_argument("snr must be nonnegative");
    const int n_t = static_cast<int>(composite.p.n_cols);
    const std::size_t n_rho = rhos.size();

    // Per-trial values are stored by trial index and reduced in index order, so
    // the result is byte-identical for any worker count.
    arma::mat vals(trials, n_rho);
    int workers = std::max(1, threads);
    workers = std::min<long long>(workers, trials);

    auto run_range = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            ChannelDraw draw = draw_channel(master_seed, i, scene, composite, entry_variance);
            arma::cx_mat gram = draw.h.t() * draw.h;
            gram = 0.5 * (gram + gram.t());
            arma::vec w;
            if (!arma::eig_sym(w, gram))
                throw std::runtime_error("capacity evaluation failed");
            for (std::size_t r = 0; r < n_rho; ++r) {
                double c = 0.0;
                for (arma::uword k = 0; k < w.n_elem; ++k)
                    c += std::log1p((rhos[r] / n_t) * std::max(w(k), 0.0));
                vals(i, r) = c / kLn2;
            }
        }
    };

    if (workers == 1) {
        run_range(0, trials);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errs(workers);
        int chunk = (trials + workers - 1) / workers;
        for (int wk = 0; wk < workers; ++wk) {
            int begin = wk * chunk;
            int end = std::min(trials, begin + chunk);
            pool.emplace_back([&, wk, begin, end] {
                try {
                    run_range(begin, end);
                } catch (...) {
                    errs[wk] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errs)
            if (e) std::rethrow_exception(e);
    }

    std::vector<McResult> out(n_rho);
    for (std::size_t r = 0; r < n_rho; ++r) {
        double mean = 0.0;
        for (int i = 0; i < trials; ++i) mean += vals(i, r);
        mean /= trials;
        double ss = 0.0;
        for (int i = 0; i < trials; ++i) {
            double d = vals(i, r) - mean;
            ss += d * d;
        }
        double sd = trials > 1 ? std::sqrt(ss / (trials - 1)) : 0.0;
        out[r] = {mean, 1.96 * sd / std::sqrt(static_cast<double>(trials))};
    }
    return out;
}

McResult ergodic_capacity_mc(const SystemConfig& cfg, const SceneMatrices& scene,
                             const CompositeResponse& composite, int trials,
                             std::uint64_t master_seed, double entry_variance, int threads) {
    return ergodic_capacity_mc_grid(cfg, scene, composite, {cfg.snr_linear()}, trials,
                                    master_seed, entry_variance, threads)[0];
}

McResult ergodic_capacity_mc(const SystemConfig& cfg, const SceneMatrices& scene,
                             const CompositeResponse& composite, int trials,
                             std::uint64_t master_seed) {
    double variance = scene.beta / static_cast<double>(composite.p.n_rows);
    return ergodic_capacity_mc(cfg, scene, composite, trials, master_seed, variance, 1);
}

LowerBoundResult capacity_lower_bound(const CompositeResponse& composite,
                                      const SceneMatrices& scene, double rho, int n_t,
                                      int s, int t, double beta, double m) {
    if (n_t < 1) throw std::invalid_argument("n_t must be positive");
    if (rho < 0.0) throw std::invalid_argument("snr must be nonnegative");
    if (!(beta > 0.0) || !(m > 0.0)) throw std::invalid_argument("beta and m must be positive");

    double ld_gram_p = 0.0, ld_gram_d = 0.0;
    if (!herm_logdet(composite.gram_p, &ld_gram_p) || !herm_logdet(composite.gram_d, &ld_gram_d))
        throw std::runtime_error(
            "rank-deficient composite: the stacked response loses rank at these settings; "
            "re-initialize with random phases or change the element grid");
    double ld_rt = 0.0, ld_rr = 0.0;
    if (!herm_logdet(scene.r_t, &ld_rt) || !herm_logdet(scene.r_r, &ld_rr))
        throw std::runtime_error("singular correlation matrix");

    double lsum = wishart_logdet_mean(s, t, beta / m) + ld_gram_p + ld_gram_d + ld_rt + ld_rr;
    double x = std::log(rho / n_t) + lsum / n_t;  // rho = 0 gives -inf, capacity 0
    LowerBoundResult res;
    res.log_sum = lsum;
    res.v_term = std::exp(lsum / n_t);
    res.c_lb = n_t * softplus(x) / kLn2;
    return res;
}

double dispersion(const arma::cx_mat& a) {
    if (a.n_rows != a.n_cols) throw std::invalid_argument("dispersion requires a square matrix");
    double tr = std::real(arma::trace(a));
    if (std::abs(tr) < 1e-300) throw std::invalid_argument("dispersion undefined for zero trace");
    double tr2 = std::real(arma::trace(a * a));
    return static_cast<double>(a.n_rows) * tr2 / (tr * tr);
}

double min_energy_per_bit(const CompositeResponse& composite, const SceneMatrices& scene,
                          int n_t) {
    if (n_t < 1) throw std::invalid_argument("n_t must be positive");
    double t_t = std::real(arma::accu((scene.r_t * composite.p) % arma::conj(composite.p)));
    double t_r = std::real(arma::accu((composite.d * scene.r_r) % arma::conj(composite.d)));
    if (!(t_t > 0.0) || !(t_r > 0.0)) throw std::runtime_error("zero effective channel gain");
    return n_t * kLn2 / (t_t * t_r);
}

double wideband_slope(const CompositeResponse& composite, const SceneMatrices& scene,
                      int n_t, int n_r) {
    if (n_t < 1 || n_r < 1) throw std::invalid_argument("antenna counts must be positive");
    double zeta_t = dispersion(scene.r_t * (composite.p * composite.p.t()));
    double zeta_r = dispersion((composite.d.t() * composite.d) * scene.r_r);
    double denom = n_t * zeta_t + n_r * zeta_r;
    if (!(denom > 0.0)) throw std::runtime_error("degenerate wideband slope");
    return 2.0 * n_t * n_r / denom;
}

double low_snr_capacity(double eb_n0, double s0, double eb_n0_min) {
    if (!(eb_n0 > eb_n0_min)) return 0.0;
    return s0 * std::log2(eb_n0 / eb_n0_min);
}

std::string capacity_csv_header() {
    return "snr_db, c_lb, c_mc, ci, ebn0min_db, s0, trials, seed";
}

std::string capacity_csv_row(const CapacityRow& row) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.12g, %.12g, %.12g, %.12g, %.12g, %.12g, %ld, %llu",
                  row.snr_db, row.c_lb, row.c_mc, row.ci, row.ebn0min_db, row.s0, row.trials,
                  static_cast<unsigned long long>(row.seed));
    return buf;
}

}  // namespace simcap
