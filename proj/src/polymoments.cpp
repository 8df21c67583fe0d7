#include "atsm/polymoments.hpp"

#include <sstream>

namespace atsm {

Vector conditional_moments(const GeneratorMatrix& gen, const Vector& x, double dt) {
    if (!(dt >= 0.0)) throw std::invalid_argument("conditional_moments: dt must be >= 0");
    if (x.size() != gen.basis.d()) throw std::invalid_argument("conditional_moments: state dimension mismatch");
    Vector stacked = gen.basis.stack(x);
    if (dt == 0.0) return stacked;
    Vector out = matrix_exponential(gen.A, dt) * stacked;
    out(0) = 1.0;
    return out;
}

std::optional<StationaryMoments> try_stationary_moments(const Matrix& exp_dtA) {
    const int N = static_cast<int>(exp_dtA.rows());
    Matrix lhs = Matrix::Identity(N - 1, N - 1) - exp_dtA.block(1, 1, N - 1, N - 1);
    Eigen::PartialPivLU<Matrix> lu(lhs);
    const double rc = lu.rcond();
    if (!(rc > 0.0) || !std::isfinite(rc)) return std::nullopt;
    StationaryMoments sm;
    sm.m = lu.solve(exp_dtA.block(1, 0, N - 1, 1));
    if (!sm.m.allFinite()) return std::nullopt;
    sm.rcond = rc;
    sm.ill_conditioned = rc < 1e-12;
    return sm;
}

StationaryMoments stationary_moments(const GeneratorMatrix& gen, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("stationary_moments: dt must be > 0");
    Matrix E = matrix_exponential(gen.A, dt);
    auto sm = try_stationary_moments(E);
    if (!sm || sm->ill_conditioned) {
        // Attach the drift eigenvalues: the degree-1 block of A is beta'.
        const int d = gen.basis.d();
        Eigen::EigenSolver<Matrix> es(gen.A.block(1, 1, d, d));
        std::ostringstream msg;
        msg << "stationary_moments: singular or ill-conditioned system (rcond="
            << (sm ? sm->rcond : 0.0) << "); drift eigenvalue real parts:";
        for (int i = 0; i < d; ++i) msg << " " << es.eigenvalues()(i).real();
        if (!sm) throw numerical_error(msg.str());
        // Ill-conditioned but solvable: report through the flag, mention once here.
    }
    return *sm;
}

} // namespace atsm
