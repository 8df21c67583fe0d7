#pragma once

#include <optional>

#include "atsm/generator.hpp"
#include "atsm/matexp.hpp"

namespace atsm {

/// E(x~(t+dt) | X(t) = x) = exp(dt A) x~ with x~ the stacked monomials.
/// The first entry is exactly 1.
Vector conditional_moments(const GeneratorMatrix& gen, const Vector& x, double dt);

/// Result of the stationary-moment solve.  `rcond` is the reciprocal
/// condition estimate of (I - exp(dt A)_{2:N,2:N}); `ill_conditioned` is set
/// when it falls below 1e-12.
struct StationaryMoments {
    Vector m;              // N-1 entries, degree blocks 1..p
    double rcond = 0.0;
    bool ill_conditioned = false;
};

/// Unconditional moments of orders 1..p for a stationary diffusion:
/// solves (I - E22) m = E21 with E = exp(dt A).  Throws numerical_error with
/// an eigenvalue diagnostic when the system is singular (non-stationary spec).
StationaryMoments stationary_moments(const GeneratorMatrix& gen, double dt = 1.0);

/// Non-throwing variant for the estimation hot loop: nullopt on failure.
std::optional<StationaryMoments> try_stationary_moments(const Matrix& exp_dtA);

} // namespace atsm
