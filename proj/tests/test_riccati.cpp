#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "atsm/riccati.hpp"
#include "support/oracles.hpp"

using atsm::Matrix;
using atsm::QSpec;
using atsm::TimeGrid;
using atsm::Vector;

namespace {

QSpec vasicek_q(const oracle::OU& ou, double gamma0) {
    QSpec q;
    q.d = 1;
    q.m = 0;
    q.bQ = Vector::Constant(1, ou.b);
    q.betaQ = Matrix::Constant(1, 1, ou.beta);
    q.Sigma = Vector::Constant(1, ou.S);
    q.Bx = Matrix::Constant(1, 1, 0.0);
    q.gamma0 = gamma0;
    q.gammax = Vector::Ones(1);
    return q;
}

QSpec cir_q(const oracle::CIR& c, double gamma0) {
    QSpec q;
    q.d = 1;
    q.m = 1;
    q.bQ = Vector::Constant(1, c.b);
    q.betaQ = Matrix::Constant(1, 1, c.beta);
    q.Sigma = Vector::Constant(1, c.S);
    q.Bx = Matrix::Constant(1, 1, 1.0);
    q.gamma0 = gamma0;
    q.gammax = Vector::Ones(1);
    return q;
}

const std::vector<double> kMaturities{1.0 / 12.0, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 20.0};

} // namespace

TEST_CASE("psi_J: initial condition, scalar closed form, long-horizon limit") {
    oracle::OU ou{0.0, -1.0, 0.5};
    QSpec q = vasicek_q(ou, 0.0);
    Vector u = Vector::Constant(1, 0.7);
    CHECK(psi_J(0.0, u, q)(0) == doctest::Approx(0.7).epsilon(1e-14));
    // beta = -1, gamma = 1, u = 0, t = 1: psi = e^{-1} - 1.
    CHECK(psi_J(1.0, Vector::Zero(1), q)(0) ==
          doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-12));
    CHECK(psi_J(100.0, Vector::Zero(1), q)(0) == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("integrate_psi_J: zero at the origin and exact antiderivative") {
    oracle::OU ou{0.0, -1.0, 0.5};
    QSpec q = vasicek_q(ou, 0.0);
    TimeGrid grid = TimeGrid::build({1.0}, 100);
    auto at0 = integrate_psi_J(0.0, q, grid);
    CHECK(at0.int_psi(0) == 0.0);
    CHECK(at0.int_psi_sq(0) == 0.0);
    auto at1 = integrate_psi_J(1.0, q, grid);
    // int_0^1 (e^{-s} - 1) ds = -e^{-1}.
    CHECK(at1.int_psi(0) == doctest::Approx(-std::exp(-1.0)).epsilon(1e-12));
    // int_0^1 (e^{-s} - 1)^2 ds.
    const double want = (1.0 - std::exp(-2.0)) / 2.0 - 2.0 * (1.0 - std::exp(-1.0)) + 1.0;
    CHECK(at1.int_psi_sq(0) == doctest::Approx(want).epsilon(1e-12));
    CHECK_THROWS_AS(integrate_psi_J(0.123456, q, grid), std::invalid_argument);
}

TEST_CASE("squared integral for a coupled 2x2 block matches fine quadrature") {
    auto p = oracle::table_mpr_truth();
    QSpec q3 = p.q_spec();
    TimeGrid grid = TimeGrid::build({5.0}, 50);
    auto ints = integrate_psi_J(5.0, q3, grid);
    const int N = 200000;
    Vector acc1 = Vector::Zero(2), acc2 = Vector::Zero(2);
    Vector prev = psi_J(0.0, Vector::Zero(2), q3);
    for (int k = 1; k <= N; ++k) {
        const double t = 5.0 * k / N;
        Vector cur = psi_J(t, Vector::Zero(2), q3);
        acc1 += 0.5 * (prev + cur) * (5.0 / N);
        acc2 += 0.5 * (prev.array().square() + cur.array().square()).matrix() * (5.0 / N);
        prev = cur;
    }
    CHECK((ints.int_psi - acc1).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((ints.int_psi_sq - acc2).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("psi_I: zero start, CIR closed form, ODE residual") {
    oracle::CIR cir{0.5, -0.8, 0.3};
    QSpec q = cir_q(cir, 0.0);
    TimeGrid grid = TimeGrid::build(kMaturities, 2000);
    CHECK(psi_I(0.0, 1, q, grid) == doctest::Approx(0.0));
    for (double tau : kMaturities)
        CHECK(psi_I(tau, 1, q, grid) == doctest::Approx(cir.bond_psi(tau)).epsilon(1e-8));

    // Centered finite differences reproduce the Riccati right-hand side.
    const double h = 1e-4;
    for (double t : {0.5, 2.0, 6.0}) {
        TimeGrid fine = TimeGrid::build({t - h, t, t + h, 21.0}, 4);
        const double up = psi_I(t + h, 1, q, fine);
        const double dn = psi_I(t - h, 1, q, fine);
        const double mid = psi_I(t, 1, q, fine);
        const double deriv = (up - dn) / (2.0 * h);
        const double rhs = 0.5 * cir.S * cir.S * mid * mid + cir.beta * mid - 1.0;
        CHECK(deriv == doctest::Approx(rhs).epsilon(1e-5));
    }
}

TEST_CASE("phi: zero start and Vasicek/CIR closed forms") {
    oracle::OU ou{0.04, -0.9, 0.05};
    oracle::CIR cir{0.06, -0.5, 0.2};
    const double gamma0 = 0.01;
    QSpec qv = vasicek_q(ou, gamma0);
    QSpec qc = cir_q(cir, gamma0);
    TimeGrid grid = TimeGrid::build(kMaturities, 2000);
    CHECK(phi(0.0, qv, grid) == doctest::Approx(0.0));
    for (double tau : {1.0, 5.0, 10.0}) {
        CHECK(phi(tau, qv, grid) == doctest::Approx(ou.bond_phi(tau, gamma0)).epsilon(1e-6));
        CHECK(phi(tau, qc, grid) == doctest::Approx(cir.bond_phi(tau, gamma0)).epsilon(1e-6));
    }
}

TEST_CASE("yield loadings reconstruct the Vasicek yield and the short-rate limit") {
    oracle::OU ou{0.04, -0.9, 0.05};
    const double gamma0 = 0.01;
    QSpec q = vasicek_q(ou, gamma0);
    TimeGrid grid = TimeGrid::build(kMaturities, 2000);
    auto loadings = yield_loadings(q, kMaturities, grid);
    const double x = 0.03;
    const int idx = 6; // tau = 5
    const double y_model = loadings.PhiTilde(idx) + loadings.PsiTilde(idx, 0) * x;
    const double y_exact = -(ou.bond_phi(5.0, gamma0) + ou.bond_psi(5.0) * x) / 5.0;
    CHECK(y_model == doctest::Approx(y_exact).epsilon(1e-8));

    std::vector<double> shorties{1e-4, 1.0};
    TimeGrid short_grid = TimeGrid::build(shorties, 4000);
    auto short_loadings = yield_loadings(q, shorties, short_grid);
    const double y0 = short_loadings.PhiTilde(0) + short_loadings.PsiTilde(0, 0) * x;
    CHECK(y0 == doctest::Approx(gamma0 + x).epsilon(1e-2));
}

TEST_CASE("degenerate strongly mean-reverting factor keeps loadings finite and monotone") {
    oracle::OU ou{0.0, -40.0, 0.05};
    QSpec q = vasicek_q(ou, 0.0);
    TimeGrid grid = TimeGrid::build(kMaturities, 2000);
    auto loadings = yield_loadings(q, kMaturities, grid);
    CHECK(loadings.PhiTilde.allFinite());
    for (int l = 1; l < loadings.PsiTilde.rows(); ++l)
        CHECK(std::fabs(loadings.PsiTilde(l, 0)) <= std::fabs(loadings.PsiTilde(l - 1, 0)) + 1e-12);
}

TEST_CASE("maturity insertion puts every maturity on the grid; collisions are harmless") {
    TimeGrid grid = TimeGrid::build(kMaturities, 997);
    for (size_t l = 0; l < kMaturities.size(); ++l)
        CHECK(grid.points[static_cast<size_t>(grid.maturity_index[l])] == kMaturities[l]);
    auto p = oracle::table_mpr_truth();
    QSpec q = p.q_spec();
    TimeGrid dup = TimeGrid::build({0.5, 1.0, 2.0}, 4); // all three maturities collide
    TimeGrid clean;                                     // same unique points, no duplicates
    clean.points = {0.0, 0.5, 1.0, 1.5, 2.0};
    clean.maturity_index = {1, 2, 4};
    auto a = yield_loadings(q, {0.5, 1.0, 2.0}, dup);
    auto b = yield_loadings(q, {0.5, 1.0, 2.0}, clean);
    CHECK((a.PhiTilde - b.PhiTilde).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.PsiTilde - b.PsiTilde).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("grid refinement leaves canonical three-factor loadings unchanged below 1e-5") {
    auto p = oracle::table_mpr_truth();
    QSpec q = p.q_spec();
    TimeGrid g1 = TimeGrid::build(kMaturities, 2000);
    TimeGrid g2 = TimeGrid::build(kMaturities, 4000);
    auto a = yield_loadings(q, kMaturities, g1);
    auto b = yield_loadings(q, kMaturities, g2);
    CHECK((a.PhiTilde - b.PhiTilde).cwiseAbs().maxCoeff() < 1e-5);
    CHECK((a.PsiTilde - b.PsiTilde).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("loadings depend only on the pricing-measure parameters") {
    auto p = oracle::table_mpr_truth();
    TimeGrid grid = TimeGrid::build(kMaturities, 500);
    auto base = yield_loadings(p.q_spec(), kMaturities, grid);
    auto q = p;
    q.betaP[0] = -2.5;
    q.betaP[3] = -0.3;
    q.thetaP = 0.9;
    auto perturbed = yield_loadings(q.q_spec(), kMaturities, grid);
    CHECK((base.PhiTilde - perturbed.PhiTilde).cwiseAbs().maxCoeff() == 0.0);
    CHECK((base.PsiTilde - perturbed.PsiTilde).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("invalid maturities and singular beta_JJ are rejected") {
    CHECK_THROWS_AS(TimeGrid::build({-1.0, 2.0}, 10), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid::build({2.0, 1.0}, 10), std::invalid_argument);
    oracle::OU ou{0.0, 0.0, 0.5};
    QSpec q = vasicek_q(ou, 0.0);
    q.betaQ(0, 0) = 0.0;
    TimeGrid grid = TimeGrid::build({1.0}, 10);
    CHECK_THROWS_AS(yield_loadings(q, {1.0}, grid), atsm::numerical_error);
}
