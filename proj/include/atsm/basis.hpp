#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "atsm/types.hpp"

namespace atsm {

/// Exponent tuple of a monomial x1^e1 * ... * xd^ed (entries beyond d are 0).
using Exponents = std::array<int, 3>;

/// Graded monomial basis (1, x', (x^2)', ..., (x^p)') for polynomials in
/// d variables up to total degree p.
///
/// Within a degree block the tuples are listed in descending lexicographic
/// order of the exponents, e.g. for d=3, k=2:
/// x1^2, x1x2, x1x3, x2^2, x2x3, x3^2.  The flat position of a basis element
/// is frozen: generator matrices and moment vectors index into it.
class MonomialBasis {
public:
    MonomialBasis(int d, int p);

    int d() const { return d_; }
    int p() const { return p_; }
    int size() const { return static_cast<int>(exponents_.size()); }

    /// Number of monomials of total degree k: C(k+d-1, k).
    int block_size(int k) const;
    /// Flat index of the first monomial of degree k (0-based).
    int block_start(int k) const;

    const Exponents& exponents(int flat_index) const { return exponents_[flat_index]; }
    const std::vector<Exponents>& all() const { return exponents_; }

    /// Flat index (0-based) of the monomial with the given exponents.
    /// The tuple must have total degree <= p and entries >= 0.
    int index_of(const Exponents& e) const;

    /// Evaluates the stacked monomial vector (1, x', (x^2)', ...)'.
    Vector stack(const Vector& x) const;

private:
    int d_;
    int p_;
    std::vector<Exponents> exponents_;
    std::vector<int> block_start_;
};

/// C(k+d-1, k), the dimension of the space of degree-k monomials in d variables.
int monomial_count(int k, int d);

} // namespace atsm
