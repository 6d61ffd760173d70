#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <armadillo>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "simcap/channel.hpp"
#include "simcap/metrics.hpp"
#include "simcap/scene.hpp"
#include "simcap/simstack.hpp"

using namespace simcap;

namespace {

constexpr double kGamma = 0.5772156649015329;  // Euler-Mascheroni
constexpr double kLn2 = 0.6931471805599453;

arma::cx_mat cx_eye(int r, int c) {
    return arma::cx_mat(arma::mat(r, c, arma::fill::eye), arma::mat(r, c, arma::fill::zeros));
}

// identity everything: the composite of an unobstructed n_t x n_r link
struct IdentitySetup {
    CompositeResponse comp;
    SceneMatrices scene;
};

IdentitySetup identity_setup(int n_t, int n_r) {
    IdentitySetup s;
    s.comp.p = cx_eye(n_t, n_t);
    s.comp.d = cx_eye(n_r, n_r);
    s.comp.gram_p = cx_eye(n_t, n_t);
    s.comp.gram_d = cx_eye(n_r, n_r);
    s.scene.r_t = cx_eye(n_t, n_t);
    s.scene.r_r = cx_eye(n_r, n_r);
    s.scene.r_t_sqrt = cx_eye(n_t, n_t);
    s.scene.r_r_sqrt = cx_eye(n_r, n_r);
    s.scene.beta = 1.0;
    return s;
}

}  // namespace

TEST_CASE("digamma anchors and recurrence") {
    CHECK(digamma(1.0) == doctest::Approx(-kGamma).epsilon(1e-12));
    CHECK(digamma(2.0) == doctest::Approx(1.0 - kGamma).epsilon(1e-12));
    CHECK(digamma(0.5) == doctest::Approx(-kGamma - 2.0 * kLn2).epsilon(1e-12));
    for (double x : {0.5, 3.7}) {
        CHECK(digamma(x + 1.0) == doctest::Approx(digamma(x) + 1.0 / x).epsilon(1e-12));
    }
    CHECK_THROWS_AS(digamma(0.0), std::invalid_argument);
    CHECK_THROWS_AS(digamma(-3.0), std::invalid_argument);
}

TEST_CASE("wishart log-determinant mean: closed form and preconditions") {
    CHECK(wishart_logdet_mean(1, 1, 1.0) == doctest::Approx(-kGamma).epsilon(1e-12));
    CHECK(wishart_logdet_mean(2, 2, 1.0) ==
          doctest::Approx(-0.15443132980306572).epsilon(1e-12));
    CHECK(wishart_logdet_mean(2, 3, 1.0) == doctest::Approx(2.5 - 2.0 * kGamma).epsilon(1e-12));
    // the entry variance adds s ln(v)
    CHECK(wishart_logdet_mean(2, 2, 0.3) ==
          doctest::Approx(-0.15443132980306572 + 2.0 * std::log(0.3)).epsilon(1e-12));
    CHECK_THROWS_AS(wishart_logdet_mean(3, 2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(wishart_logdet_mean(0, 2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(wishart_logdet_mean(2, 2, 0.0), std::invalid_argument);
}

TEST_CASE("wishart mean matches simulation") {
    const int draws = 1000000;
    double acc = 0.0;
    for (int i = 0; i < draws; ++i) {
        arma::cx_mat g = draw_gtilde(trial_seed(5, i), 2, 2, 1.0);
        acc += std::real(arma::log_det(arma::cx_mat(g.t() * g)));
    }
    const double want = wishart_logdet_mean(2, 2, 1.0);
    CHECK(std::abs(acc / draws - want) / std::abs(want) < 0.005);
}

TEST_CASE("instantaneous capacity on known channels") {
    arma::cx_mat h1 = cx_eye(1, 1);
    CHECK(instantaneous_capacity(h1, 1.0, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(instantaneous_capacity(h1, 0.0, 1) == 0.0);
    CHECK(instantaneous_capacity(cx_eye(2, 2), 2.0, 2) == doctest::Approx(2.0).epsilon(1e-14));

    arma::cx_mat bad = cx_eye(2, 2);
    bad(0, 0) = std::complex<double>(std::nan(""), 0.0);
    CHECK_THROWS_AS(instantaneous_capacity(bad, 1.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(instantaneous_capacity(h1, -1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(instantaneous_capacity(h1, 1.0, 0), std::invalid_argument);
}

TEST_CASE("monte carlo mean is the plain average of per-trial capacities") {
    IdentitySetup s = identity_setup(2, 2);
    SystemConfig cfg = default_config();
    const double rho = 1.0;
    std::vector<McResult> mc =
        ergodic_capacity_mc_grid(cfg, s.scene, s.comp, {rho}, 2, 77, 1.0, 1);

    double c0 = instantaneous_capacity(draw_channel(77, 0, s.scene, s.comp, 1.0).h, rho, 2);
    double c1 = instantaneous_capacity(draw_channel(77, 1, s.scene, s.comp, 1.0).h, rho, 2);
    double mean = 0.5 * (c0 + c1);
    CHECK(mc[0].mean == doctest::Approx(mean).epsilon(1e-12));
    double sd = std::sqrt((c0 - mean) * (c0 - mean) + (c1 - mean) * (c1 - mean));  // n-1 = 1
    CHECK(mc[0].ci_halfwidth == doctest::Approx(1.96 * sd / std::sqrt(2.0)).epsilon(1e-10));

    CHECK_THROWS_AS(ergodic_capacity_mc_grid(cfg, s.scene, s.comp, {rho}, 1, 77, 1.0, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(ergodic_capacity_mc_grid(cfg, s.scene, s.comp, {}, 10, 77, 1.0, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(ergodic_capacity_mc_grid(cfg, s.scene, s.comp, {-1.0}, 10, 77, 1.0, 1),
                    std::invalid_argument);
}

TEST_CASE("confidence interval shrinks like the root of the trial count") {
    IdentitySetup s = identity_setup(2, 2);
    SystemConfig cfg = default_config();
    McResult a = ergodic_capacity_mc_grid(cfg, s.scene, s.comp, {10.0}, 2000, 5150, 1.0, 1)[0];
    McResult b = ergodic_capacity_mc_grid(cfg, s.scene, s.comp, {10.0}, 4000, 5150, 1.0, 1)[0];
    double ratio = b.ci_halfwidth / a.ci_halfwidth;
    CHECK(ratio > 0.7071 * 0.85);
    CHECK(ratio < 0.7071 * 1.15);
}

TEST_CASE("single-antenna fading capacity matches the closed form") {
    // E[log2(1 + |h|^2)] at unit SNR for a unit-variance complex Gaussian scalar
    const double want = 0.8603473822708868;  // e * E1(1) / ln 2
    IdentitySetup s = identity_setup(1, 1);
    SystemConfig cfg = default_config();
    cfg.n_t = 1;
    cfg.n_r = 1;
    McResult mc = ergodic_capacity_mc_grid(cfg, s.scene, s.comp, {1.0}, 100000, 1, 1.0, 1)[0];
    CHECK(std::abs(mc.mean - want) < mc.ci_halfwidth);
}

TEST_CASE("worker count never changes monte carlo bytes") {
    SystemConfig cfg = default_config();
    cfg.m_tx = 10;
    cfg.n_rx = 12;
    cfg.layers_tx = 2;
    cfg.layers_rx = 2;
    cfg.finalize();
    SceneMatrices sc = build_scene(cfg);
    CompositeResponse comp = compose(random_profile(cfg, 4), sc);
    std::vector<double> rhos = {0.1, 10.0, 1e6};
    auto one = ergodic_capacity_mc_grid(cfg, sc, comp, rhos, 501, 99, 1.0, 1);
    auto three = ergodic_capacity_mc_grid(cfg, sc, comp, rhos, 501, 99, 1.0, 3);
    for (size_t r = 0; r < rhos.size(); ++r) {
        CHECK(one[r].mean == three[r].mean);
        CHECK(one[r].ci_halfwidth == three[r].ci_halfwidth);
    }

    // the scalar overloads agree with the grid
    McResult direct = ergodic_capacity_mc(cfg, sc, comp, 51, 99, 1.0, 1);
    McResult grid =
        ergodic_capacity_mc_grid(cfg, sc, comp, {cfg.snr_linear()}, 51, 99, 1.0, 1)[0];
    CHECK(direct.mean == grid.mean);
    McResult phys = ergodic_capacity_mc(cfg, sc, comp, 51, 99);
    McResult phys_explicit =
        ergodic_capacity_mc(cfg, sc, comp, 51, 99, sc.beta / cfg.m_tx, 1);
    CHECK(phys.mean == phys_explicit.mean);
}

TEST_CASE("capacity lower bound anchors on the default stack") {
    SystemConfig cfg = default_config();
    SceneMatrices sc = build_scene(cfg);
    CompositeResponse comp = compose(random_profile(cfg, 1), sc);

    LowerBoundResult unit = capacity_lower_bound(comp, sc, 10.0, 8, 40, 100, 1.0, 1.0);
    CHECK(unit.c_lb == doctest::Approx(105.32740220431987).epsilon(1e-9));
    CHECK(std::log(10.0 / 8.0) + unit.log_sum / 8.0 ==
          doctest::Approx(9.125815170097072).epsilon(1e-9));
    CHECK(unit.v_term == doctest::Approx(std::exp(unit.log_sum / 8.0)).epsilon(1e-12));

    LowerBoundResult phys =
        capacity_lower_bound(comp, sc, cfg.snr_linear(), 8, 40, 100, sc.beta, 40.0);
    CHECK(phys.c_lb == doctest::Approx(1.0427716782000254e-39).epsilon(1e-9));

    // zero SNR pins the bound at zero
    CHECK(capacity_lower_bound(comp, sc, 0.0, 8, 40, 100, 1.0, 1.0).c_lb == 0.0);
    CHECK_THROWS_AS(capacity_lower_bound(comp, sc, -1.0, 8, 40, 100, 1.0, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(capacity_lower_bound(comp, sc, 1.0, 8, 40, 100, 0.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("square iid link reduces the bound to its scalar closed form") {
    for (int n : {2, 4}) {
        IdentitySetup s = identity_setup(n, n);
        double lsum = 0.0;
        for (int i = 0; i < n; ++i) lsum += digamma(static_cast<double>(n - i));
        for (double rho : {0.1, 1.0, 10.0}) {
            LowerBoundResult lb = capacity_lower_bound(s.comp, s.scene, rho, n, n, n, 1.0, 1.0);
            double want = n * std::log2(1.0 + (rho / n) * std::exp(lsum / n));
            CHECK(lb.c_lb == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("rank-collapsed composites are rejected with advice") {
    CompositeResponse comp;
    comp.p = arma::cx_mat(4, 2, arma::fill::ones);  // rank one
    comp.d = cx_eye(2, 4);
    comp.gram_p = comp.p.t() * comp.p;
    comp.gram_d = comp.d * comp.d.t();
    SceneMatrices sc;
    sc.r_t = cx_eye(4, 4);
    sc.r_r = cx_eye(4, 4);
    sc.beta = 1.0;
    CHECK_THROWS_WITH_AS(
        capacity_lower_bound(comp, sc, 1.0, 2, 2, 4, 1.0, 1.0),
        "rank-deficient composite: the stacked response loses rank at these settings; "
        "re-initialize with random phases or change the element grid",
        std::runtime_error);
}

TEST_CASE("dispersion range and anchors") {
    CHECK(dispersion(cx_eye(3, 3)) == 1.0);
    arma::cx_mat d20(2, 2, arma::fill::zeros);
    d20(0, 0) = 2.0;
    CHECK(dispersion(d20) == 2.0);
    arma::cx_mat d1110(4, 4, arma::fill::zeros);
    for (int i = 0; i < 3; ++i) d1110(i, i) = 1.0;
    CHECK(dispersion(d1110) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));

    CHECK_THROWS_AS(dispersion(arma::cx_mat(2, 3, arma::fill::ones)), std::invalid_argument);
    CHECK_THROWS_AS(dispersion(arma::cx_mat(3, 3, arma::fill::zeros)), std::invalid_argument);

    for (int n : {2, 3, 5, 8}) {
        for (int rep = 0; rep < 25; ++rep) {
            arma::cx_mat b = draw_gtilde(trial_seed(31, n * 100 + rep), n, n, 1.0);
            double z = dispersion(arma::cx_mat(b * b.t()));
            CHECK(z >= 1.0 - 1e-12);
            CHECK(z <= n + 1e-12);
        }
    }
}

TEST_CASE("low-snr metrics: iid reductions and frozen stack values") {
    IdentitySetup s88 = identity_setup(8, 8);
    CHECK(min_energy_per_bit(s88.comp, s88.scene, 8) ==
          doctest::Approx(kLn2 / 8.0).epsilon(1e-12));
    CHECK(wideband_slope(s88.comp, s88.scene, 8, 8) == doctest::Approx(8.0).epsilon(1e-12));

    IdentitySetup s42 = identity_setup(4, 2);
    CHECK(min_energy_per_bit(s42.comp, s42.scene, 4) ==
          doctest::Approx(kLn2 / 2.0).epsilon(1e-12));
    CHECK(wideband_slope(s42.comp, s42.scene, 4, 2) ==
          doctest::Approx(16.0 / 6.0).epsilon(1e-12));

    SystemConfig cfg = default_config();
    SceneMatrices sc = build_scene(cfg);
    CompositeResponse comp = compose(random_profile(cfg, 1), sc);
    CHECK(min_energy_per_bit(comp, sc, 8) == doctest::Approx(20.78438640075061).epsilon(1e-9));
    CHECK(wideband_slope(comp, sc, 8, 8) == doctest::Approx(0.5180879754576426).epsilon(1e-9));

    // scaling the composite by c divides the minimum energy per bit by |c|^2
    CompositeResponse scaled = comp;
    scaled.p = comp.p * std::complex<double>(0.0, 3.0);
    CHECK(min_energy_per_bit(scaled, sc, 8) ==
          doctest::Approx(min_energy_per_bit(comp, sc, 8) / 9.0).epsilon(1e-12));

    CompositeResponse dead = comp;
    dead.p = arma::cx_mat(40, 8, arma::fill::zeros);
    CHECK_THROWS_AS(min_energy_per_bit(dead, sc, 8), std::runtime_error);
}

TEST_CASE("rank-one transmit composite pins the wideband slope") {
    IdentitySetup s = identity_setup(4, 2);
    s.comp.p = arma::cx_mat(4, 2, arma::fill::ones);  // zeta_T = dim = 4
    s.comp.d = cx_eye(2, 2);
    // n_t = 2, n_r = 2: 2*2*2 / (2*4 + 2*1) = 0.8
    CHECK(wideband_slope(s.comp, s.scene, 2, 2) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("low-snr capacity curve is hinged at the minimum") {
    CHECK(low_snr_capacity(0.5, 8.0, 1.0) == 0.0);
    CHECK(low_snr_capacity(1.0, 8.0, 1.0) == 0.0);
    CHECK(low_snr_capacity(2.0, 8.0, 1.0) == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(low_snr_capacity(4.0, 3.0, 1.0) == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("csv header and row formatting are stable") {
    CHECK(capacity_csv_header() == "snr_db, c_lb, c_mc, ci, ebn0min_db, s0, trials, seed");
    CapacityRow row;
    row.snr_db = -10.0;
    row.c_lb = 0.5;
    row.c_mc = 0.25;
    row.ci = 0.125;
    row.ebn0min_db = 3.0;
    row.s0 = 8.0;
    row.trials = 100;
    row.seed = 7;
    CHECK(capacity_csv_row(row) == "-10, 0.5, 0.25, 0.125, 3, 8, 100, 7");
    row.c_lb = 105.32740220431987;  // 12 significant digits
    CHECK(capacity_csv_row(row) == "-10, 105.327402204, 0.25, 0.125, 3, 8, 100, 7");
}
