#include "atsm/matexp.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace atsm {

Matrix matrix_exponential(const Matrix& M, double t) {
    if (M.rows() != M.cols()) throw std::invalid_argument("matrix_exponential: matrix not square");
    if (!(t >= 0.0)) throw std::invalid_argument("matrix_exponential: t must be >= 0");
    if (!M.allFinite()) throw std::invalid_argument("matrix_exponential: non-finite entries");
    return (t * M).exp();
}

Eigen::Matrix2d expm2(const Eigen::Matrix2d& M) {
    // exp(M) = e^mu [ cosh(delta) I + sinh(delta)/delta (M - mu I) ],
    // mu = tr/2, delta^2 = mu^2 - det.  Negative delta^2 switches to cos/sin.
    const double mu = 0.5 * (M(0, 0) + M(1, 1));
    const double det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
    const double disc = mu * mu - det;
    double ch, shd; // cosh(delta), sinh(delta)/delta
    if (disc > 1e-24) {
        const double delta = std::sqrt(disc);
        ch = std::cosh(delta);
        shd = std::sinh(delta) / delta;
    } else if (disc < -1e-24) {
        const double omega = std::sqrt(-disc);
        ch = std::cos(omega);
        shd = std::sin(omega) / omega;
    } else {
        ch = 1.0 + 0.5 * disc;
        shd = 1.0 + disc / 6.0;
    }
    const double emu = std::exp(mu);
    Eigen::Matrix2d out;
    out(0, 0) = emu * (ch + shd * (M(0, 0) - mu));
    out(0, 1) = emu * shd * M(0, 1);
    out(1, 0) = emu * shd * M(1, 0);
    out(1, 1) = emu * (ch + shd * (M(1, 1) - mu));
    return out;
}

} // namespace atsm
