#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "atsm/simulate.hpp"
#include "support/oracles.hpp"

using atsm::DiffusionSpec;
using atsm::Matrix;
using atsm::SimConfig;
using atsm::Vector;
using atsm::YieldPanel;

namespace {

const std::vector<double> kMaturities{1.0 / 12.0, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 20.0};

DiffusionSpec ou_spec(const oracle::OU& ou) {
    DiffusionSpec s;
    s.d = 1;
    s.b = Vector::Constant(1, ou.b);
    s.beta = Matrix::Constant(1, 1, ou.beta);
    s.Sigma = Vector::Constant(1, ou.S);
    s.B0 = Vector::Constant(1, 1.0);
    s.Bx = Matrix::Constant(1, 1, 0.0);
    return s;
}

} // namespace

TEST_CASE("zero volatility follows the drift fixed point exactly") {
    auto p = oracle::table_mpr_truth();
    DiffusionSpec s = p.p_spec();
    s.Sigma = Vector::Constant(3, 1e-14); // validate() requires > 0
    SimConfig cfg;
    cfg.T = 20;
    cfg.substeps = 200;
    cfg.burnin = 5;
    cfg.seed = 1;
    Matrix path = simulate_latent(s, p.thetaP_vec(), cfg);
    for (int t = 0; t < cfg.T; ++t) {
        CHECK(path(t, 0) == doctest::Approx(p.thetaP).epsilon(1e-6));
        CHECK(std::fabs(path(t, 1)) < 1e-6);
        CHECK(std::fabs(path(t, 2)) < 1e-6);
    }
}

TEST_CASE("ergodic mean of a Gaussian factor matches the stationary law") {
    oracle::OU ou{0.8, -0.6, 0.4};
    SimConfig cfg;
    cfg.T = 100000;
    cfg.substeps = 100;
    cfg.burnin = 200;
    cfg.seed = 42;
    Matrix path = simulate_latent(ou_spec(ou), Vector::Constant(1, ou.stat_mean()), cfg);
    const double mean = path.col(0).mean();
    // Serial correlation inflates the naive se; batch the dates.
    const int b = 316;
    const int nb = cfg.T / b;
    double var_bm = 0.0;
    for (int k = 0; k < nb; ++k) {
        const double bm = path.col(0).segment(k * b, b).mean();
        var_bm += (bm - mean) * (bm - mean);
    }
    var_bm /= (nb - 1.0);
    const double se = std::sqrt(var_bm / nb);
    CHECK(std::fabs(mean - ou.stat_mean()) < 3.0 * se);
}

TEST_CASE("square-root coordinate never leaves the state space") {
    auto p = oracle::table_mpr_truth();
    SimConfig cfg;
    cfg.T = 2000;
    cfg.substeps = 100;
    cfg.burnin = 0;
    cfg.seed = 7;
    Matrix path = simulate_latent(p.p_spec(), p.thetaP_vec(), cfg);
    CHECK(path.col(0).minCoeff() >= 0.0);
}

TEST_CASE("panels are reproducible and exact affine images without noise") {
    auto p = oracle::table_mpr_truth();
    SimConfig cfg;
    cfg.T = 50;
    cfg.substeps = 100;
    cfg.burnin = 10;
    cfg.seed = 99;

    YieldPanel a = simulate_panel(p, kMaturities, cfg, 500);
    YieldPanel b = simulate_panel(p, kMaturities, cfg, 500);
    CHECK((a.observations - b.observations).cwiseAbs().maxCoeff() == 0.0);

    auto noiseless = p;
    noiseless.sigma2_eps = 1e-30;
    YieldPanel c = simulate_panel(noiseless, kMaturities, cfg, 500);
    // With (numerically) zero noise the panel is an affine image of the
    // latent path: cross-sectional residuals from 3 factors vanish.
    atsm::TimeGrid grid = atsm::TimeGrid::build(kMaturities, 500);
    auto loadings = atsm::yield_loadings(noiseless.q_spec(), kMaturities, grid);
    Matrix path = simulate_latent(noiseless.p_spec(), noiseless.thetaP_vec(), cfg);
    for (int t = 0; t < cfg.T; ++t) {
        Vector y = loadings.PhiTilde + loadings.PsiTilde * path.row(t).transpose();
        CHECK((y.transpose() - c.observations.row(t)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("panel CSV round-trips the matrix exactly") {
    auto p = oracle::table_mpr_truth();
    SimConfig cfg;
    cfg.T = 17;
    cfg.substeps = 100;
    cfg.burnin = 0;
    cfg.seed = 3;
    YieldPanel panel = simulate_panel(p, kMaturities, cfg, 200);

    const std::string path = "test_panel_roundtrip.csv";
    atsm::write_panel_csv(path, panel);
    int dropped = -1;
    YieldPanel back = atsm::read_panel_csv(path, &dropped);
    CHECK(dropped == 0);
    CHECK(back.T() == panel.T());
    CHECK(back.M() == panel.M());
    CHECK((back.observations - panel.observations).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
}

TEST_CASE("rows with missing cells are dropped and counted") {
    const std::string path = "test_panel_missing.csv";
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("date,tau_0.25,tau_1\n", f);
        std::fputs("a,1.0,2.0\n", f);
        std::fputs("b,ND,2.0\n", f);
        std::fputs("c,1.5,.\n", f);
        std::fputs("d,3.0,4.0\n", f);
        std::fclose(f);
    }
    int dropped = 0;
    YieldPanel panel = atsm::read_panel_csv(path, &dropped);
    CHECK(dropped == 2);
    CHECK(panel.T() == 2);
    CHECK(panel.maturities[0] == doctest::Approx(0.25));
    CHECK(panel.observations(1, 1) == 4.0);
    std::filesystem::remove(path);
}

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.T = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.T = 10;
    cfg.substeps = 10;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.substeps = 100;
    cfg.burnin = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("halving the substep moves sample means by less than a Monte-Carlo se") {
    oracle::OU ou{0.8, -0.6, 0.4};
    SimConfig coarse;
    coarse.T = 10000;
    coarse.substeps = 100;
    coarse.burnin = 100;
    coarse.seed = 11;
    SimConfig fine = coarse;
    fine.substeps = 200;
    Matrix a = simulate_latent(ou_spec(ou), Vector::Constant(1, ou.stat_mean()), coarse);
    Matrix b = simulate_latent(ou_spec(ou), Vector::Constant(1, ou.stat_mean()), fine);
    const double se = std::sqrt(ou.stat_var() / coarse.T) *
                      std::sqrt((1.0 + std::exp(ou.beta)) / (1.0 - std::exp(ou.beta)));
    CHECK(std::fabs(a.col(0).mean() - b.col(0).mean()) < 3.0 * se);
}
