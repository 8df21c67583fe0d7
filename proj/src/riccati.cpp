#include "atsm/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "atsm/matexp.hpp"

namespace atsm {

void QSpec::validate() const {
    if (d < 1 || d > 3) throw std::invalid_argument("QSpec: d must be in [1,3]");
    if (m < 0 || m > d) throw std::invalid_argument("QSpec: m must be in [0,d]");
    if (bQ.size() != d || betaQ.rows() != d || betaQ.cols() != d ||
        Sigma.size() != d || Bx.rows() != d || Bx.cols() != d || gammax.size() != d)
        throw std::invalid_argument("QSpec: dimension mismatch");
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j)
            if (i != j && betaQ(i, j) != 0.0)
                throw std::invalid_argument("QSpec: beta_II must be diagonal");
        for (int j = m; j < d; ++j)
            if (betaQ(i, j) != 0.0)
                throw std::invalid_argument("QSpec: beta_IJ must be zero");
    }
    for (int i = m; i < d; ++i)
        for (int j = 0; j < m; ++j)
            if (betaQ(i, j) < 0.0)
                throw std::invalid_argument("QSpec: beta_JI must be nonnegative");
}

TimeGrid TimeGrid::build(const std::vector<double>& maturities, int segments) {
    if (maturities.empty()) throw std::invalid_argument("TimeGrid: no maturities");
    if (segments < 1) throw std::invalid_argument("TimeGrid: segments must be >= 1");
    for (size_t l = 0; l < maturities.size(); ++l) {
        if (!(maturities[l] > 0.0)) throw std::invalid_argument("TimeGrid: maturities must be positive");
        if (l > 0 && !(maturities[l] > maturities[l - 1]))
            throw std::invalid_argument("TimeGrid: maturities must be sorted and distinct");
    }
    const double tmax = maturities.back();
    TimeGrid grid;
    grid.points.reserve(segments + 1 + maturities.size());
    for (int k = 0; k <= segments; ++k)
        grid.points.push_back(tmax * static_cast<double>(k) / static_cast<double>(segments));
    grid.points.insert(grid.points.end(), maturities.begin(), maturities.end());
    std::sort(grid.points.begin(), grid.points.end());
    grid.maturity_index.resize(maturities.size());
    for (size_t l = 0; l < maturities.size(); ++l) {
        auto it = std::lower_bound(grid.points.begin(), grid.points.end(), maturities[l]);
        if (it == grid.points.end() || *it != maturities[l])
            throw std::logic_error("TimeGrid: maturity lost during insertion");
        grid.maturity_index[l] = static_cast<int>(it - grid.points.begin());
    }
    return grid;
}

namespace {

int grid_index_of(const TimeGrid& grid, double t) {
    auto it = std::lower_bound(grid.points.begin(), grid.points.end(), t);
    if (it == grid.points.end() || *it != t)
        throw std::invalid_argument("riccati: t is not a grid point");
    return static_cast<int>(it - grid.points.begin());
}

// Closed-form machinery for the conditionally Gaussian block.  With
// B = beta_JJ' and c = B^{-1} gammax_J the zero-start transform coefficient
// splits as Psi_J(t) = w(t) + c, w(t) = -exp(tB) c, and every integral the
// pricing functions need is available exactly: int w from the exponential,
// int w w' from the Lyapunov identity d(ww')/dt = B(ww') + (ww')B'.
struct GaussBlock {
    int n = 0;
    Matrix B;
    Matrix Binv;
    Vector c;            // B^{-1} gammax_J
    Vector sig2J;
    Eigen::PartialPivLU<Matrix> kron_lu; // of I (x) B + B (x) I

    Matrix expt(double t) const {
        if (n == 1) {
            Matrix e(1, 1);
            e(0, 0) = std::exp(t * B(0, 0));
            return e;
        }
        if (n == 2) return expm2(Eigen::Matrix2d(t * B));
        return matrix_exponential(B, t);
    }

    // Psi_J(t, 0), int_0^t Psi_J, int_0^t Psi_J^2 (elementwise).
    void eval(double t, Vector& psi, Vector& int_psi, Vector& int_psi2) const {
        Matrix Et = expt(t);
        Vector w = -Et * c;
        psi = w + c;
        Vector iw = -Binv * (Et - Matrix::Identity(n, n)) * c;
        int_psi = iw + t * c;
        Matrix P0 = c * c.transpose();
        Matrix Pt = w * w.transpose();
        Matrix diff = Pt - P0;
        Eigen::Map<const Vector> rhs(diff.data(), n * n);
        Vector ip = kron_lu.solve(rhs);
        int_psi2 = Vector(n);
        for (int j = 0; j < n; ++j)
            int_psi2(j) = ip(j + j * n) + 2.0 * c(j) * iw(j) + c(j) * c(j) * t;
    }
};

std::optional<GaussBlock> make_gauss_block(const QSpec& spec, std::string* err) {
    GaussBlock g;
    g.n = spec.n();
    if (g.n == 0) return g;
    const int m = spec.m, n = g.n;
    g.B = spec.betaQ.block(m, m, n, n).transpose();
    Eigen::PartialPivLU<Matrix> lu(g.B);
    if (!(lu.rcond() > 1e-12)) {
        if (err) *err = "riccati: beta_JJ is numerically singular";
        return std::nullopt;
    }
    g.Binv = lu.inverse();
    g.c = g.Binv * spec.gammax.segment(m, n);
    g.sig2J = spec.Sigma.segment(m, n).array().square();
    Matrix K = Matrix::Zero(n * n, n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                K(i + j * n, k + j * n) += g.B(i, k); // I (x) B
                K(i + j * n, i + k * n) += g.B(j, k); // B (x) I
            }
    g.kron_lu.compute(K);
    if (!(g.kron_lu.rcond() > 1e-12)) {
        if (err) *err = "riccati: beta_JJ eigenvalue sum vanishes; squared integral is singular";
        return std::nullopt;
    }
    return g;
}

// Pointwise state of the pricing functions at one time.
struct PricingPoint {
    Vector psiJ;     // n
    Vector psiI;     // m
    double phiJ = 0.0;
};

class PricingEvaluator {
public:
    PricingEvaluator(const QSpec& spec, const GaussBlock& gauss)
        : spec_(&spec), gauss_(&gauss) {}

    bool at(double t, PricingPoint& out, std::string* err) const {
        const QSpec& spec = *spec_;
        const GaussBlock& g = *gauss_;
        const int m = spec.m, n = g.n;
        Vector int_psi = Vector::Zero(n), int_psi2 = Vector::Zero(n);
        out.psiJ = Vector::Zero(n);
        out.phiJ = 0.0;
        if (n > 0) {
            g.eval(t, out.psiJ, int_psi, int_psi2);
            for (int j = 0; j < n; ++j)
                out.phiJ += 0.5 * g.sig2J(j) * int_psi2(j) + spec.bQ(m + j) * int_psi(j);
        }
        out.psiI = Vector::Zero(m);
        for (int i = 0; i < m; ++i) {
            double ig = spec.gammax(i) * t;
            for (int j = 0; j < n; ++j) {
                ig -= spec.betaQ(m + j, i) * int_psi(j);
                ig -= 0.5 * g.sig2J(j) * spec.Bx(i, m + j) * int_psi2(j);
            }
            const double s2 = spec.Sigma(i) * spec.Sigma(i);
            Eigen::Matrix2d G;
            G << t * spec.betaQ(i, i), -s2 * ig,
                 -0.5 * t, 0.0;
            Eigen::Matrix2d E = expm2(G);
            // M4 starts at 1 and stays positive up to the explosion time of
            // the Riccati solution; a non-positive value means the pole was
            // crossed and the transform is meaningless from here on.
            if (!(E(1, 1) > 1e-12) || !std::isfinite(E(0, 1))) {
            	if (err) {
                    std::ostringstream msg;
                    msg << "riccati: transform denominator vanished for factor " << (i + 1)
                        << " at t=" << t;
                    *err = msg.str();
                }
                return false;
            }
            out.psiI(i) = E(0, 1) / (s2 * E(1, 1));
        }
        return true;
    }

private:
    const QSpec* spec_;
    const GaussBlock* gauss_;
};

// Sweep over the grid: the Gaussian block and Phi_J are exact at every
// point; Phi_I accumulates b_I' int Psi_I by composite Simpson per segment.
std::optional<RiccatiSolution> sweep(const QSpec& spec, const TimeGrid& grid, std::string* err) {
    auto gauss = make_gauss_block(spec, err);
    if (!gauss) return std::nullopt;
    PricingEvaluator eval(spec, *gauss);

    const int d = spec.d, m = spec.m, n = spec.n();
    const int K = static_cast<int>(grid.points.size());
    const int M = static_cast<int>(grid.maturity_index.size());

    RiccatiSolution sol;
    sol.Phi = Vector::Zero(M);
    sol.Psi = Matrix::Zero(M, d);

    std::vector<std::pair<int, int>> mat_at;
    for (int l = 0; l < M; ++l) mat_at.emplace_back(grid.maturity_index[l], l);
    std::sort(mat_at.begin(), mat_at.end());
    size_t next_mat = 0;

    PricingPoint left, mid, right;
    if (!eval.at(grid.points[0], left, err)) return std::nullopt;
    double phiI = 0.0;

    for (int k = 0; k < K; ++k) {
        if (k > 0) {
            const double t0 = grid.points[k - 1];
            const double t1 = grid.points[k];
            const double h = t1 - t0;
            if (h > 0.0) {
                if (!eval.at(0.5 * (t0 + t1), mid, err)) return std::nullopt;
                if (!eval.at(t1, right, err)) return std::nullopt;
                if (m > 0) {
                    double fl = 0.0, fm = 0.0, fr = 0.0;
                    for (int i = 0; i < m; ++i) {
                        fl += spec.bQ(i) * left.psiI(i);
                        fm += spec.bQ(i) * mid.psiI(i);
                        fr += spec.bQ(i) * right.psiI(i);
                    }
                    phiI += h / 6.0 * (fl + 4.0 * fm + fr);
                }
                left = right;
            }
        }
        while (next_mat < mat_at.size() && mat_at[next_mat].first == k) {
            const int l = mat_at[next_mat].second;
            const double t = grid.points[k];
            sol.Phi(l) = phiI + left.phiJ - spec.gamma0 * t;
            for (int i = 0; i < m; ++i) sol.Psi(l, i) = left.psiI(i);
            for (int j = 0; j < n; ++j) sol.Psi(l, m + j) = left.psiJ(j);
            ++next_mat;
        }
    }
    if (next_mat != mat_at.size()) {
        if (err) *err = "riccati: not all maturities were reached by the sweep";
        return std::nullopt;
    }
    if (!sol.Phi.allFinite() || !sol.Psi.allFinite()) {
        if (err) *err = "riccati: non-finite pricing coefficients";
        return std::nullopt;
    }
    return sol;
}

} // namespace

Vector psi_J(double t, const Vector& uJ, const QSpec& spec) {
    spec.validate();
    if (!(t >= 0.0)) throw std::invalid_argument("psi_J: t must be >= 0");
    std::string err;
    auto g = make_gauss_block(spec, &err);
    if (!g) throw numerical_error(err);
    if (uJ.size() != g->n) throw std::invalid_argument("psi_J: u_J dimension mismatch");
    if (g->n == 0) return Vector{};
    Matrix Et = g->expt(t);
    return Et * uJ - g->Binv * ((Et - Matrix::Identity(g->n, g->n)) *
                                spec.gammax.segment(spec.m, g->n));
}

PsiJIntegrals integrate_psi_J(double t, const QSpec& spec, const TimeGrid& grid) {
    spec.validate();
    (void)grid_index_of(grid, t); // t must live on the caller's grid
    std::string err;
    auto g = make_gauss_block(spec, &err);
    if (!g) throw numerical_error(err);
    PsiJIntegrals out;
    out.int_psi = Vector::Zero(g->n);
    out.int_psi_sq = Vector::Zero(g->n);
    if (g->n == 0) return out;
    Vector psi;
    g->eval(t, psi, out.int_psi, out.int_psi_sq);
    return out;
}

double psi_I(double t, int i, const QSpec& spec, const TimeGrid& grid) {
    spec.validate();
    if (i < 1 || i > spec.m) throw std::invalid_argument("psi_I: factor index out of range");
    (void)grid_index_of(grid, t);
    std::string err;
    auto g = make_gauss_block(spec, &err);
    if (!g) throw numerical_error(err);
    PricingEvaluator eval(spec, *g);
    PricingPoint pt;
    if (!eval.at(t, pt, &err)) throw numerical_error(err);
    return pt.psiI(i - 1);
}

double phi(double t, const QSpec& spec, const TimeGrid& grid) {
    spec.validate();
    TimeGrid sub = grid;
    sub.maturity_index.assign(1, grid_index_of(grid, t));
    std::string err;
    auto sol = sweep(spec, sub, &err);
    if (!sol) throw numerical_error(err);
    return sol->Phi(0);
}

RiccatiSolution solve_riccati(const QSpec& spec, const std::vector<double>& maturities,
                              const TimeGrid& grid) {
    spec.validate();
    if (maturities.size() != grid.maturity_index.size())
        throw std::invalid_argument("solve_riccati: maturities do not match grid");
    std::string err;
    auto sol = sweep(spec, grid, &err);
    if (!sol) throw numerical_error(err);
    return *sol;
}

YieldLoadings yield_loadings(const QSpec& spec, const std::vector<double>& maturities,
                             const TimeGrid& grid) {
    RiccatiSolution sol = solve_riccati(spec, maturities, grid);
    const int M = static_cast<int>(maturities.size());
    YieldLoadings out;
    out.PhiTilde = Vector::Zero(M);
    out.PsiTilde = Matrix::Zero(M, spec.d);
    for (int l = 0; l < M; ++l) {
        out.PhiTilde(l) = -sol.Phi(l) / maturities[l];
        out.PsiTilde.row(l) = -sol.Psi.row(l) / maturities[l];
    }
    return out;
}

std::optional<YieldLoadings> try_yield_loadings(const QSpec& spec,
                                                const std::vector<double>& maturities,
                                                const TimeGrid& grid) {
    std::string err;
    auto sol = sweep(spec, grid, &err);
    if (!sol) return std::nullopt;
    const int M = static_cast<int>(maturities.size());
    YieldLoadings out;
    out.PhiTilde = Vector::Zero(M);
    out.PsiTilde = Matrix::Zero(M, spec.d);
    for (int l = 0; l < M; ++l) {
        out.PhiTilde(l) = -sol->Phi(l) / maturities[l];
        out.PsiTilde.row(l) = -sol->Psi.row(l) / maturities[l];
    }
    if (!out.PhiTilde.allFinite() || !out.PsiTilde.allFinite()) return std::nullopt;
    return out;
}

} // namespace atsm
