#pragma once

#include "atsm/basis.hpp"
#include "atsm/types.hpp"

namespace atsm {

/// Affine diffusion with diagonal quadratic variation:
///   dX = (b + beta X) dt + Sigma sqrt(S(X)) dW,
///   S_ii(X) = B0_i + sum_j Bx(j,i) X_j,  S_ij = 0 for i != j.
///
/// Bx(j,i) is the weight of X_j in the i-th squared-volatility slope, i.e.
/// column i of Bx drives S_ii.  In the canonical A_m(d) form B0 = (0_m, 1_n)',
/// the upper-left m x m block of Bx is the identity and only rows 1..m of the
/// I x J block may be non-zero.
struct DiffusionSpec {
    int d = 0;
    Vector b;      // d
    Matrix beta;   // d x d
    Vector Sigma;  // d, strictly positive
    Vector B0;     // d
    Matrix Bx;     // d x d

    void validate() const;
};

/// Matrix representation of the infinitesimal generator on the graded
/// monomial basis.  Row i holds the expansion of G applied to basis element i.
struct GeneratorMatrix {
    Matrix A;
    MonomialBasis basis;
};

/// Builds the generator matrix by applying
///   G f = sum_i (b_i + beta_{i,:} x) df/dx_i
///       + 1/2 sum_i Sigma_i^2 (B0_i + Bx_{:,i}' x) d2f/dx_i^2
/// to every basis monomial and collecting coefficients.
GeneratorMatrix build_generator(const DiffusionSpec& spec, const MonomialBasis& basis);

} // namespace atsm
