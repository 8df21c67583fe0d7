#pragma once

#include "atsm/types.hpp"

namespace atsm {

/// exp(t * M) by scaling-and-squaring with a Pade approximant.
/// Relative accuracy ~1e-13 on well-conditioned inputs.
Matrix matrix_exponential(const Matrix& M, double t);

/// Closed-form exp of a 2x2 matrix (trace/determinant form); used in the
/// bond-pricing ODE loop where millions of tiny exponentials are needed.
Eigen::Matrix2d expm2(const Eigen::Matrix2d& M);

} // namespace atsm
