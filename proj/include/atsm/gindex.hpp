#pragma once

#include "atsm/types.hpp"

namespace atsm {

/// 1-based position of the monomial x_i x_j (sorted i <= j) within the
/// degree-2 block of the graded basis for dimension d.
int g2(int i, int j, int d = 3);

/// 1-based position of x_i x_j x_m (i <= j <= m) within the degree-3 block.
int g3(int i, int j, int m, int d = 3);

/// 1-based position of x_i x_j x_m x_n (i <= j <= m <= n) within the
/// degree-4 block.
int g4(int i, int j, int m, int n, int d = 3);

/// Sorted-argument conveniences (arguments in any order).
int g2_sorted(int i, int j, int d = 3);
int g3_sorted(int i, int j, int m, int d = 3);
int g4_sorted(int i, int j, int m, int n, int d = 3);

/// vech^{-1}: maps the d(d+1)/2 vector of a symmetric matrix's lower
/// triangle (degree-2 block order) back to the full matrix; for d = 3,
/// (a1..a6) -> [[a1,a2,a3],[a2,a4,a5],[a3,a5,a6]].
Matrix vech_inverse(const Vector& v, int d);

/// vech of a symmetric matrix in the same order.
Vector vech(const Matrix& S);

} // namespace atsm
