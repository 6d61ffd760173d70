#include "simcap/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "simcap/metrics.hpp"

namespace simcap {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kTiny = 1e-300;

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// d(C_LB)/d(log-determinant sum) in bits: rho V / (ln2 N_t (1 + rho V / N_t)),
// evaluated through the overflow-safe log-domain variable.
double clb_scale(const CompositeResponse& composite, const SceneMatrices& scene, double rho,
                 double entry_variance) {
    const int m = static_cast<int>(composite.p.n_rows);
    const int n = static_cast<int>(composite.d.n_cols);
    const int n_t = static_cast<int>(composite.p.n_cols);
    LowerBoundResult lb = capacity_lower_bound(composite, scene, rho, n_t, std::min(m, n),
                                               std::max(m, n), entry_variance, 1.0);
    double x = std::log(rho / n_t) + lb.log_sum / n_t;  // rho = 0 gives -inf, scale 0
    return sigmoid(x) / kLn2;
}

arma::cx_mat herm_inv(const arma::cx_mat& a, const char* what) {
    arma::cx_mat sym = 0.5 * (a + a.t());
    arma::cx_mat out;
    if (!arma::inv_sympd(out, sym)) throw std::runtime_error(what);
    return out;
}

arma::cx_vec conj_diag(const arma::cx_mat& a) { return arma::conj(arma::cx_vec(a.diag())); }

void check_layer(size_t count, int layer_index, const char* side_name) {
    if (layer_index < 1 || layer_index > static_cast<int>(count))
        throw std::invalid_argument(std::string(side_name) + " layer index out of range");
}

struct Traces {
    double t_t = 0.0;
    double t_r = 0.0;
};

Traces gain_traces(const CompositeResponse& composite, const SceneMatrices& scene) {
    Traces t;
    t.t_t = std::real(arma::accu((scene.r_t * composite.p) % arma::conj(composite.p)));
    t.t_r = std::real(arma::accu((composite.d * scene.r_r) % arma::conj(composite.d)));
    if (!(t.t_t > 0.0) || !(t.t_r > 0.0)) throw std::runtime_error("zero effective channel gain");
    return t;
}

struct StackGradients {
    std::vector<arma::cx_vec> tx;
    std::vector<arma::cx_vec> rx;
};

// Every layer's left/right factors in one prefix/suffix sweep, so one iteration
// costs O(layers) matrix products instead of the O(layers^2) of repeated
// partial_products calls. The recurrences multiply in the same order as
// partial_products, keeping the results bit-identical.
struct LayerProducts {
    std::vector<PartialProducts> tx;  // [l-1] for transmit layer l
    std::vector<PartialProducts> rx;  // [k-1] for receive layer k
};

LayerProducts all_partials(const PhaseProfile& profile, const SceneMatrices& scene) {
    LayerProducts out;
    const int lt = static_cast<int>(scene.w.size());
    const arma::uword m = scene.w[0].n_rows;
    out.tx.resize(lt);
    out.tx[0].right = scene.w[0];
    if (lt > 1) {
        arma::cx_mat acc = arma::diagmat(unit_weights(profile.tx[0])) * scene.w[0];
        for (int l = 2; l <= lt; ++l) {
            arma::cx_mat fed = scene.w[l - 1] * acc;
            out.tx[l - 1].right = fed;
            if (l < lt) acc = arma::diagmat(unit_weights(profile.tx[l - 1])) * fed;
        }
    }
    out.tx[lt - 1].left = arma::eye<arma::cx_mat>(m, m);
    for (int l = lt - 1; l >= 1; --l)
        out.tx[l - 1].left =
            out.tx[l].left * arma::diagmat(unit_weights(profile.tx[l])) * scene.w[l];

    const int lr = static_cast<int>(scene.u.size());
    const arma::uword n = scene.u.back().n_cols;
    out.rx.resize(lr);
    out.rx[0].left = scene.u[0];
    for (int k = 2; k <= lr; ++k)
        out.rx[k - 1].left =
            out.rx[k - 2].left * arma::diagmat(unit_weights(profile.rx[k - 2])) * scene.u[k - 1];
    out.rx[lr - 1].right = arma::eye<arma::cx_mat>(n, n);
    for (int k = lr - 1; k >= 1; --k)
        out.rx[k - 1].right =
            scene.u[k] * arma::diagmat(unit_weights(profile.rx[k])) * out.rx[k].right;
    return out;
}

// Gradients of the internal maximization score for every layer at once. Shared
// factors (gram inverses, traces, the capacity-bound scale) are computed once,
// unlike the per-layer entry points which are self-contained for validation.
StackGradients score_gradients(const ObjectiveSpec& spec, const SceneMatrices& scene,
                               const PhaseProfile& profile, const CompositeResponse& composite) {
    StackGradients g;
    const LayerProducts lp = all_partials(profile, scene);
    const int n_layers_tx = static_cast<int>(profile.tx.size());
    const int n_layers_rx = static_cast<int>(profile.rx.size());
    const double n_t = static_cast<double>(composite.p.n_cols);
    const double n_r = static_cast<double>(composite.d.n_rows);

    switch (spec.kind) {
        case Objective::clb: {
            double vbar = clb_scale(composite, scene, spec.rho, spec.entry_variance);
            arma::cx_mat pht = herm_inv(composite.gram_p, "singular transmit Gram") *
                               composite.p.t();
            arma::cx_mat dht = composite.d.t() *
                               herm_inv(composite.gram_d, "singular receive Gram");
            for (int l = 1; l <= n_layers_tx; ++l) {
                const PartialProducts& pp = lp.tx[l - 1];
                g.tx.push_back(vbar * conj_diag(pp.right * pht * pp.left));
            }
            for (int k = 1; k <= n_layers_rx; ++k) {
                const PartialProducts& pp = lp.rx[k - 1];
                g.rx.push_back(vbar * conj_diag(pp.right * dht * pp.left));
            }
            break;
        }
        case Objective::ebmin: {
            // score = -ebmin, so these are the negated ebmin gradients
            Traces t = gain_traces(composite, scene);
            double denom = (t.t_t * t.t_r) * (t.t_t * t.t_r);
            arma::cx_mat pr_t = composite.p.t() * scene.r_t;
            arma::cx_mat rd = scene.r_r * composite.d.t();
            for (int l = 1; l <= n_layers_tx; ++l) {
                const PartialProducts& pp = lp.tx[l - 1];
                g.tx.push_back((n_t * kLn2 * t.t_r / denom) *
                               conj_diag(pp.right * pr_t * pp.left));
            }
            for (int k = 1; k <= n_layers_rx; ++k) {
                const PartialProducts& pp = lp.rx[k - 1];
                g.rx.push_back((n_t * kLn2 * t.t_t / denom) *
                               conj_diag(pp.right * rd * pp.left));
            }
            break;
        }
        case Objective::s0: {
            const double m = static_cast<double>(composite.p.n_rows);
            const double n = static_cast<double>(composite.d.n_cols);
            arma::cx_mat xt = scene.r_t * (composite.p * composite.p.t());
            arma::cx_mat xr = scene.r_r * (composite.d.t() * composite.d);
            double pt = std::real(arma::trace(xt));
            double qt = std::real(arma::trace(xt * xt));
            double pr = std::real(arma::trace(xr));
            double qr = std::real(arma::trace(xr * xr));
            if (!(pt > 0.0) || !(pr > 0.0))
                throw std::runtime_error("zero effective channel gain");
            double zt = m * qt / (pt * pt);
            double zr = n * qr / (pr * pr);
            double den = n_t * zt + n_r * zr;
            double coef = -2.0 * n_t * n_r / (den * den);
            arma::cx_mat pr_t = composite.p.t() * scene.r_t;
            arma::cx_mat y_t = pr_t * composite.p * pr_t;
            arma::cx_mat rd = scene.r_r * composite.d.t();
            arma::cx_mat y_r = rd * composite.d * rd;
            for (int l = 1; l <= n_layers_tx; ++l) {
                const PartialProducts& pp = lp.tx[l - 1];
                arma::cx_vec dz = (2.0 * m / (pt * pt)) * arma::diagvec(pp.right * y_t * pp.left) -
                                  (2.0 * m * qt / (pt * pt * pt)) * arma::diagvec(pp.right * pr_t * pp.left);
                g.tx.push_back(coef * n_t * arma::conj(dz));
            }
            for (int k = 1; k <= n_layers_rx; ++k) {
                const PartialProducts& pp = lp.rx[k - 1];
                arma::cx_vec dz = (2.0 * n / (pr * pr)) * arma::diagvec(pp.right * y_r * pp.left) -
                                  (2.0 * n * qr / (pr * pr * pr)) * arma::diagvec(pp.right * rd * pp.left);
                g.rx.push_back(coef * n_r * arma::conj(dz));
            }
            break;
        }
    }
    return g;
}

PhaseProfile apply_step(const PhaseProfile& cur, const StackGradients& g, double scale_tx,
                        double scale_rx) {
    PhaseProfile out = cur;
    for (size_t l = 0; l < cur.tx.size(); ++l) {
        arma::cx_vec w = unit_weights(cur.tx[l]) + scale_tx * g.tx[l];
        for (arma::uword i = 0; i < w.n_elem; ++i)
            out.tx[l][i] = std::abs(w[i]) == 0.0 ? 0.0 : std::arg(w[i]);
    }
    for (size_t k = 0; k < cur.rx.size(); ++k) {
        arma::cx_vec w = unit_weights(cur.rx[k]) + scale_rx * g.rx[k];
        for (arma::uword i = 0; i < w.n_elem; ++i)
            out.rx[k][i] = std::abs(w[i]) == 0.0 ? 0.0 : std::arg(w[i]);
    }
    return out;
}

}  // namespace

Objective objective_from_name(const std::string& name) {
    if (name == "clb") return Objective::clb;
    if (name == "ebmin") return Objective::ebmin;
    if (name == "s0") return Objective::s0;
    throw std::invalid_argument("unknown objective: " + name);
}

std::string objective_name(Objective kind) {
    switch (kind) {
        case Objective::clb: return "clb";
        case Objective::ebmin: return "ebmin";
        case Objective::s0: return "s0";
    }
    throw std::logic_error("bad objective enum");
}

double evaluate_objective(const ObjectiveSpec& spec, const SystemConfig& cfg,
                          const SceneMatrices& scene, const CompositeResponse& composite) {
    switch (spec.kind) {
        case Objective::clb: {
            const int m = static_cast<int>(composite.p.n_rows);
            const int n = static_cast<int>(composite.d.n_cols);
            return capacity_lower_bound(composite, scene, spec.rho, cfg.n_t, std::min(m, n),
                                        std::max(m, n), spec.entry_variance, 1.0)
                .c_lb;
        }
        case Objective::ebmin:
            return min_energy_per_bit(composite, scene, cfg.n_t);
        case Objective::s0:
            return wideband_slope(composite, scene, cfg.n_t, cfg.n_r);
    }
    throw std::logic_error("bad objective enum");
}

arma::cx_vec grad_clb_tx(const PhaseProfile& profile, const SceneMatrices& scene,
                         const CompositeResponse& composite, const PartialProducts& partials,
                         double rho, int layer_index) {
    check_layer(profile.tx.size(), layer_index, "transmit");
    double variance = scene.beta / static_cast<double>(composite.p.n_rows);
    double vbar = clb_scale(composite, scene, rho, variance);
    arma::cx_mat gram_inv = herm_inv(composite.gram_p, "singular transmit Gram");
    return vbar * conj_diag(partials.right * gram_inv * composite.p.t() * partials.left);
}

arma::cx_vec grad_clb_rx(const PhaseProfile& profile, const SceneMatrices& scene,
                         const CompositeResponse& composite, const PartialProducts& partials,
                         double rho, int layer_index) {
    check_layer(profile.rx.size(), layer_index, "receive");
    double variance = scene.beta / static_cast<double>(composite.p.n_rows);
    double vbar = clb_scale(composite, scene, rho, variance);
    arma::cx_mat gram_inv = herm_inv(composite.gram_d, "singular receive Gram");
    return vbar * conj_diag(partials.right * composite.d.t() * gram_inv * partials.left);
}

arma::cx_vec grad_ebmin(const PhaseProfile& profile, const SceneMatrices& scene,
                        const CompositeResponse& composite, const PartialProducts& partials,
                        Side side, int layer_index) {
    Traces t = gain_traces(composite, scene);
    const double n_t = static_cast<double>(composite.p.n_cols);
    double denom = (t.t_t * t.t_r) * (t.t_t * t.t_r);
    if (side == Side::transmit) {
        check_layer(profile.tx.size(), layer_index, "transmit");
        arma::cx_mat z = partials.right * composite.p.t() * scene.r_t * partials.left;
        return (-n_t * kLn2 * t.t_r / denom) * conj_diag(z);
    }
    check_layer(profile.rx.size(), layer_index, "receive");
    arma::cx_mat z = partials.right * scene.r_r * composite.d.t() * partials.left;
    return (-n_t * kLn2 * t.t_t / denom) * conj_diag(z);
}

arma::cx_vec grad_s0(const PhaseProfile& profile, const SceneMatrices& scene,
                     const CompositeResponse& composite, const PartialProducts& partials,
                     Side side, int layer_index) {
    const double m = static_cast<double>(composite.p.n_rows);
    const double n = static_cast<double>(composite.d.n_cols);
    const double n_t = static_cast<double>(composite.p.n_cols);
    const double n_r = static_cast<double>(composite.d.n_rows);
    arma::cx_mat xt = scene.r_t * (composite.p * composite.p.t());
    arma::cx_mat xr = scene.r_r * (composite.d.t() * composite.d);
    double pt = std::real(arma::trace(xt));
    double qt = std::real(arma::trace(xt * xt));
    double pr = std::real(arma::trace(xr));
    double qr = std::real(arma::trace(xr * xr));
    if (!(pt > 0.0) || !(pr > 0.0)) throw std::runtime_error("zero effective channel gain");
    double zt = m * qt / (pt * pt);
    double zr = n * qr / (pr * pr);
    double den = n_t * zt + n_r * zr;
    double coef = -2.0 * n_t * n_r / (den * den);
    if (side == Side::transmit) {
        check_layer(profile.tx.size(), layer_index, "transmit");
        arma::cx_mat z = partials.right * composite.p.t() * scene.r_t * partials.left;
        arma::cx_mat y = partials.right * composite.p.t() * scene.r_t * composite.p *
                         composite.p.t() * scene.r_t * partials.left;
        arma::cx_vec dz = (2.0 * m / (pt * pt)) * arma::cx_vec(y.diag()) -
                          (2.0 * m * qt / (pt * pt * pt)) * arma::cx_vec(z.diag());
        return coef * n_t * arma::conj(dz);
    }
    check_layer(profile.rx.size(), layer_index, "receive");
    arma::cx_mat z = partials.right * scene.r_r * composite.d.t() * partials.left;
    arma::cx_mat y = partials.right * scene.r_r * composite.d.t() * composite.d * scene.r_r *
                     composite.d.t() * partials.left;
    arma::cx_vec dz = (2.0 * n / (pr * pr)) * arma::cx_vec(y.diag()) -
                      (2.0 * n * qr / (pr * pr * pr)) * arma::cx_vec(z.diag());
    return coef * n_r * arma::conj(dz);
}

arma::cx_vec finite_diff_gradient(const std::function<double(const PhaseProfile&)>& objective,
                                  const PhaseProfile& profile, Side side, int layer_index,
                                  double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");
    PhaseProfile work = profile;
    auto& angles = side == Side::transmit ? work.tx : work.rx;
    if (layer_index < 1 || layer_index > static_cast<int>(angles.size()))
        throw std::invalid_argument("layer index out of range");
    arma::vec& layer = angles[layer_index - 1];
    arma::cx_vec out(layer.n_elem);
    for (arma::uword i = 0; i < layer.n_elem; ++i) {
        const double orig = layer[i];
        layer[i] = orig + h;
        double fp = objective(work);
        layer[i] = orig - h;
        double fm = objective(work);
        layer[i] = orig;
        double slope = (fp - fm) / (2.0 * h);
        // complex vector whose tangent component reproduces the angle slope:
        // 2 Im(conj(phi) * (slope/2) j phi) = slope
        out[i] = std::complex<double>(0.0, 0.5 * slope) *
                 std::complex<double>(std::cos(orig), std::sin(orig));
    }
    return out;
}

OptimizerState projected_gradient_ascent(const SystemConfig& cfg, const SceneMatrices& scene,
                                         const ObjectiveSpec& spec, const PhaseProfile& init,
                                         const OptimizerOptions& options) {
    if (options.max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
    if (!(options.step > 0.0)) throw std::invalid_argument("step must be positive");
    if (!(options.tol >= 0.0)) throw std::invalid_argument("tol must be nonnegative");

    const double sign = spec.kind == Objective::ebmin ? -1.0 : 1.0;
    auto natural = [&](const PhaseProfile& pr) {
        double v = evaluate_objective(spec, cfg, scene, compose(pr, scene));
        if (!std::isfinite(v)) throw std::runtime_error("objective is not finite");
        return v;
    };

    OptimizerState st;
    st.objective = spec.kind;
    st.status = "max_iters";
    PhaseProfile cur = init;
    double f = natural(cur);
    double score = sign * f;
    st.trajectory.push_back(f);

    for (int it = 0; it < options.max_iters; ++it) {
        StackGradients g = score_gradients(spec, scene, cur, compose(cur, scene));

        double mu = options.step;
        bool accepted = false;
        PhaseProfile cand;
        double f_new = 0.0;
        for (int bt = 0; bt < 31; ++bt) {
            cand = apply_step(cur, g, mu, mu);
            f_new = natural(cand);
            if (sign * f_new >= score) {
                accepted = true;
                break;
            }
            mu *= 0.5;
        }
        if (!accepted) {
            st.status = "stalled";
            break;
        }

        double rel = std::abs(sign * f_new - score) / std::max(std::abs(score), kTiny);
        cur = std::move(cand);
        f = f_new;
        score = sign * f;
        st.trajectory.push_back(f);
        st.step_tx_history.push_back(mu);
        st.step_rx_history.push_back(mu);
        st.step_tx = mu;
        st.step_rx = mu;
        st.iteration = it + 1;
        if (rel < options.tol) {
            st.status = "converged";
            break;
        }
    }

    st.profile = std::move(cur);
    st.objective_value = f;
    return st;
}

}  // namespace simcap
