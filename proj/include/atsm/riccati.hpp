#pragma once

#include <optional>
#include <vector>

#include "atsm/types.hpp"

namespace atsm {

/// Risk-neutral dynamics in canonical A_m(d) form, plus the short-rate map
/// r = gamma0 + gammax'X.  beta_II must be diagonal (automatic for m <= 1),
/// beta_IJ = 0, beta_JI >= 0.  B0 = (0_m, 1_n)', Bx upper-left block = I_m.
struct QSpec {
    int d = 0;
    int m = 0;            // number of square-root factors; n = d - m
    Vector bQ;            // d
    Matrix betaQ;         // d x d
    Vector Sigma;         // d
    Matrix Bx;            // d x d, column i drives S_ii
    double gamma0 = 0.0;
    Vector gammax;        // d, ones in the canonical form

    int n() const { return d - m; }
    void validate() const;
};

/// Integration grid on [0, max maturity]; every maturity is a grid point.
struct TimeGrid {
    std::vector<double> points;          // ascending, points[0] == 0
    std::vector<int> maturity_index;     // index into points per maturity

    static TimeGrid build(const std::vector<double>& maturities, int segments);
};

/// Per-maturity yield intercepts and factor loadings:
/// y(t, tau_i) = PhiTilde_i + PsiTilde_{i,:} X(t) (+ noise).
struct YieldLoadings {
    Vector PhiTilde;      // M
    Matrix PsiTilde;      // M x d
};

/// Solution of the pricing ODEs at the maturities: Phi(tau_l, 0) and
/// Psi(tau_l, 0) per maturity l.
struct RiccatiSolution {
    Vector Phi;           // M
    Matrix Psi;           // M x d
};

/// Closed-form transform coefficient for the conditionally Gaussian factors:
/// Psi_J(t, u) = exp(t beta_JJ') u_J - (beta_JJ')^{-1} (exp(t beta_JJ') - I) gammax_J.
Vector psi_J(double t, const Vector& uJ, const QSpec& spec);

/// Time integrals of Psi_J(., 0) up to a grid point t; both the linear and
/// the elementwise squared integral are closed forms of exp(t beta_JJ').
struct PsiJIntegrals {
    Vector int_psi;       // n
    Vector int_psi_sq;    // n, elementwise square integrated
};
PsiJIntegrals integrate_psi_J(double t, const QSpec& spec, const TimeGrid& grid);

/// Transform coefficient of square-root factor i (1-based, i <= m) at a
/// maturity, via the 2x2 exponential linearization of the scalar Riccati ODE.
double psi_I(double t, int i, const QSpec& spec, const TimeGrid& grid);

/// Phi(t, 0) including the -gamma0 * t funding term.
double phi(double t, const QSpec& spec, const TimeGrid& grid);

/// Full sweep over the grid; throws numerical_error on blow-up.
RiccatiSolution solve_riccati(const QSpec& spec, const std::vector<double>& maturities,
                              const TimeGrid& grid);

YieldLoadings yield_loadings(const QSpec& spec, const std::vector<double>& maturities,
                             const TimeGrid& grid);

/// Non-throwing variant for the estimation hot loop.
std::optional<YieldLoadings> try_yield_loadings(const QSpec& spec,
                                                const std::vector<double>& maturities,
                                                const TimeGrid& grid);

} // namespace atsm
