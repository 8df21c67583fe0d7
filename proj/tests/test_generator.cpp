#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "atsm/generator.hpp"
#include "support/oracles.hpp"

using atsm::DiffusionSpec;
using atsm::Exponents;
using atsm::Matrix;
using atsm::MonomialBasis;
using atsm::Vector;

namespace {

DiffusionSpec univariate(double b, double beta, double Sigma, double B0, double Bx) {
    DiffusionSpec s;
    s.d = 1;
    s.b = Vector::Constant(1, b);
    s.beta = Matrix::Constant(1, 1, beta);
    s.Sigma = Vector::Constant(1, Sigma);
    s.B0 = Vector::Constant(1, B0);
    s.Bx = Matrix::Constant(1, 1, Bx);
    return s;
}

} // namespace

TEST_CASE("Vasicek generator matrix matches the displayed band structure") {
    const double b = 0.3, beta = -1.2, Sigma = 0.5;
    MonomialBasis basis(1, 4);
    Matrix A = build_generator(univariate(b, beta, Sigma, 1.0, 0.0), basis).A;
    // Row k (monomial x^k): k(k-1)/2 Sigma^2 at x^{k-2}, k b at x^{k-1}, k beta at x^k.
    for (int k = 0; k <= 4; ++k) {
        for (int l = 0; l <= 4; ++l) {
            double expect = 0.0;
            if (l == k - 2) expect = 0.5 * k * (k - 1) * Sigma * Sigma;
            if (l == k - 1) expect = k * b;
            if (l == k) expect = k * beta;
            CHECK(A(k, l) == doctest::Approx(expect).epsilon(1e-15));
        }
    }
    CHECK(A.row(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("CIR generator matrix matches the displayed band structure") {
    const double b = 0.4, beta = -0.9, Sigma = 0.6;
    MonomialBasis basis(1, 4);
    Matrix A = build_generator(univariate(b, beta, Sigma, 0.0, 1.0), basis).A;
    for (int k = 0; k <= 4; ++k) {
        for (int l = 0; l <= 4; ++l) {
            double expect = 0.0;
            if (l == k - 1) expect = k * b + 0.5 * k * (k - 1) * Sigma * Sigma;
            if (l == k) expect = k * beta;
            CHECK(A(k, l) == doctest::Approx(expect).epsilon(1e-15));
        }
    }
}

TEST_CASE("three-factor generator equals the symbolic oracle exactly") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<long long> small(-6, 6);
    std::uniform_int_distribution<long long> pos(1, 5);
    MonomialBasis basis(3, 4);

    for (int rep = 0; rep < 25; ++rep) {
        oracle::IntSpec s;
        s.d = 3;
        for (int i = 0; i < 3; ++i) {
            s.b[i] = small(rng);
            const long long root = pos(rng);
            s.sigma2[i] = root * root; // perfect square so Sigma = sqrt is exact
            s.B0[i] = std::abs(small(rng)) % 3;
            for (int j = 0; j < 3; ++j) {
                s.beta[i][j] = small(rng);
                s.Bx[i][j] = std::abs(small(rng)) % 3;
            }
        }
        // Sigma entries must be > 0; sigma2 already >= 1.
        auto spec = oracle::to_diffusion_spec(s);
        // Make Sigma^2 exact again (sqrt then square can drift for non-squares).
        for (int i = 0; i < 3; ++i)
            REQUIRE(spec.Sigma(i) * spec.Sigma(i) == static_cast<double>(s.sigma2[i]));

        Matrix A = build_generator(spec, basis).A;
        for (int row = 0; row < basis.size(); ++row) {
            oracle::Poly expect = oracle::apply_generator(s, basis.exponents(row));
            for (int col = 0; col < basis.size(); ++col) {
                auto it = expect.find(basis.exponents(col));
                const double want = it == expect.end() ? 0.0 : static_cast<double>(it->second);
                CHECK(A(row, col) == want);
            }
            // Nothing beyond the basis should be produced.
            for (const auto& [mono, coef] : expect) {
                (void)coef;
                CHECK_NOTHROW((void)basis.index_of(mono));
            }
        }
    }
}

TEST_CASE("generator is linear in drift and scales quadratically with Sigma") {
    std::mt19937_64 rng(11);
    auto p = oracle::random_admissible(rng);
    MonomialBasis basis(3, 4);
    DiffusionSpec base = p.p_spec();

    DiffusionSpec doubled_drift = base;
    doubled_drift.b *= 2.0;
    doubled_drift.beta *= 2.0;
    DiffusionSpec no_drift = base;
    no_drift.b.setZero();
    no_drift.beta.setZero();
    Matrix A0 = build_generator(base, basis).A;
    Matrix A1 = build_generator(doubled_drift, basis).A;
    Matrix An = build_generator(no_drift, basis).A;
    CHECK(((A1 - A0) - (A0 - An)).cwiseAbs().maxCoeff() < 1e-12);

    // The Sigma^2-proportional part D satisfies A(kS) - A(S) = (k^2-1) D.
    DiffusionSpec s2 = base, s3 = base;
    s2.Sigma *= 2.0;
    s3.Sigma *= 3.0;
    Matrix D3 = build_generator(s2, basis).A - A0; // 3 D
    Matrix D8 = build_generator(s3, basis).A - A0; // 8 D
    CHECK((8.0 * D3 - 3.0 * D8).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("dimension mismatches are rejected") {
    MonomialBasis basis(3, 2);
    DiffusionSpec s = univariate(0.1, -0.5, 0.3, 1.0, 0.0);
    CHECK_THROWS_AS(build_generator(s, basis), std::invalid_argument);
    s.Sigma(0) = 0.0;
    MonomialBasis b1(1, 2);
    CHECK_THROWS_AS(build_generator(s, b1), std::invalid_argument);
}
