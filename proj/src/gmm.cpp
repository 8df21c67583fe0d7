#include "atsm/gmm.hpp"

#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "atsm/chi2.hpp"
#include "atsm/matexp.hpp"
#include "atsm/parallel.hpp"
#include "atsm/polymoments.hpp"

namespace atsm {

int worker_count() {
    if (const char* env = std::getenv("AFFINE_GMM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 0; // let OpenMP decide
}

bool MomentSelector::uses_fourth_order() const {
    for (const auto& l : labels)
        if (required_degree(l) >= 4) return true;
    return false;
}

int MomentSelector::max_maturity_index() const {
    int mx = 0;
    for (const auto& l : labels) mx = std::max({mx, l.i, l.j});
    return mx;
}

MomentSelector MomentSelector::default27(int M) {
    if (M != 10)
        throw std::invalid_argument("default27: defined for M = 10; supply a selector file otherwise");
    MomentSelector s;
    for (int i = 1; i <= M; ++i) s.labels.push_back({MomentKind::Ey, i, 0});
    for (int i = 1; i <= M; ++i) s.labels.push_back({MomentKind::Eylag, i, 0});
    const int pairs[7][2] = {{1, 1}, {2, 2}, {2, 3}, {5, 5}, {7, 7}, {9, 10}, {10, 10}};
    for (const auto& pr : pairs) s.labels.push_back({MomentKind::Eyy, pr[0], pr[1]});
    return s;
}

MomentSelector MomentSelector::parse(const std::string& text, int M) {
    MomentSelector s;
    std::istringstream is(text);
    std::string line;
    std::set<std::string> seen;
    while (std::getline(is, line)) {
        // Trim and skip blanks/comments.
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        line = line.substr(start);
        if (line[0] == '#') continue;
        MomentLabel label = parse_moment_label(line);
        if (label.i > M || label.j > M)
            throw std::invalid_argument("selector: maturity index out of range in '" + line + "'");
        if (label.kind == MomentKind::Eyy2 && label.i == label.j)
            throw std::invalid_argument("selector: Eyy2 requires distinct maturities in '" + line + "'");
        const std::string canon = to_string(label);
        if (!seen.insert(canon).second)
            throw std::invalid_argument("selector: duplicate condition '" + canon + "'");
        s.labels.push_back(label);
    }
    const int p_dim = s.uses_fourth_order() ? 24 : 23;
    if (s.q() < p_dim)
        throw std::invalid_argument("selector: order condition violated, q = " + std::to_string(s.q()) +
                                    " < p = " + std::to_string(p_dim));
    return s;
}

std::string MomentSelector::serialize() const {
    std::ostringstream os;
    for (const auto& l : labels) os << to_string(l) << "\n";
    return os.str();
}

namespace {

// One selected per-date row: contemporaneous entries at date r, lag entries
// pairing date r with r-1 (r >= 1).
void fill_row(const Matrix& Y, const std::vector<MomentLabel>& labels, int r, Vector& out) {
    for (size_t k = 0; k < labels.size(); ++k) {
        const MomentLabel& l = labels[k];
        double v = 0.0;
        switch (l.kind) {
            case MomentKind::Ey: v = Y(r, l.i - 1); break;
            case MomentKind::Eyy: v = Y(r, l.i - 1) * Y(r, l.j - 1); break;
            case MomentKind::Ey2y: v = Y(r, l.i - 1) * Y(r, l.i - 1) * Y(r, l.j - 1); break;
            case MomentKind::Eyy2: v = Y(r, l.i - 1) * Y(r, l.j - 1) * Y(r, l.j - 1); break;
            case MomentKind::Ey2y2:
                v = Y(r, l.i - 1) * Y(r, l.i - 1) * Y(r, l.j - 1) * Y(r, l.j - 1);
                break;
            case MomentKind::Eylag: v = Y(r, l.i - 1) * Y(r - 1, l.i - 1); break;
            case MomentKind::Ey2y2lag: {
                const double prod = Y(r, l.i - 1) * Y(r - 1, l.i - 1);
                v = prod * prod;
                break;
            }
        }
        out(static_cast<int>(k)) = v;
    }
}

struct MomentSums {
    Vector S1;
    Matrix S2;
    Vector contempo; // sums of contemporaneous entries over all dates

    static MomentSums zero(int q) {
        MomentSums s;
        s.S1 = Vector::Zero(q);
        s.S2 = Matrix::Zero(q, q);
        s.contempo = Vector::Zero(q);
        return s;
    }
};

MomentSums accumulate_range(const Matrix& Y, const std::vector<MomentLabel>& labels,
                            int begin, int end) {
    const int q = static_cast<int>(labels.size());
    MomentSums acc = MomentSums::zero(q);
    Vector row(q);
    for (int r = begin; r < end; ++r) {
        for (size_t k = 0; k < labels.size(); ++k) {
            const MomentLabel& l = labels[k];
            if (is_lag(l)) continue;
            double v = 0.0;
            switch (l.kind) {
                case MomentKind::Ey: v = Y(r, l.i - 1); break;
                case MomentKind::Eyy: v = Y(r, l.i - 1) * Y(r, l.j - 1); break;
                case MomentKind::Ey2y: v = Y(r, l.i - 1) * Y(r, l.i - 1) * Y(r, l.j - 1); break;
                case MomentKind::Eyy2: v = Y(r, l.i - 1) * Y(r, l.j - 1) * Y(r, l.j - 1); break;
                case MomentKind::Ey2y2:
                    v = Y(r, l.i - 1) * Y(r, l.i - 1) * Y(r, l.j - 1) * Y(r, l.j - 1);
                    break;
                default: break;
            }
            acc.contempo(static_cast<int>(k)) += v;
        }
        if (r >= 1) {
            fill_row(Y, labels, r, row);
            acc.S1 += row;
            acc.S2.selfadjointView<Eigen::Lower>().rankUpdate(row);
        }
    }
    return acc;
}

void finalize_context(GmmContext& ctx, const MomentSums& sums) {
    const int q = ctx.selector.q();
    const int T = ctx.panel.T();
    ctx.S1 = sums.S1;
    ctx.S2 = sums.S2;
    ctx.S2.triangularView<Eigen::StrictlyUpper>() =
        ctx.S2.triangularView<Eigen::StrictlyLower>().transpose();
    ctx.lag_count = T - 1;
    ctx.m_T = Vector::Zero(q);
    for (int k = 0; k < q; ++k) {
        if (is_lag(ctx.selector.labels[static_cast<size_t>(k)]))
            ctx.m_T(k) = sums.S1(k) / static_cast<double>(T - 1);
        else
            ctx.m_T(k) = sums.contempo(k) / static_cast<double>(T);
    }
    ctx.mbar_shortest = ctx.panel.observations.col(0).mean();
}

} // namespace

void accumulate_sample_moments_serial(GmmContext& ctx) {
    MomentSums sums = accumulate_range(ctx.panel.observations, ctx.selector.labels,
                                       0, ctx.panel.T());
    finalize_context(ctx, sums);
}

void accumulate_sample_moments_parallel(GmmContext& ctx) {
    const int T = ctx.panel.T();
    const int q = ctx.selector.q();
    MomentSums total = chunked_reduce<MomentSums>(
        T, 64,
        [&](int begin, int end) {
            return accumulate_range(ctx.panel.observations, ctx.selector.labels, begin, end);
        },
        [q](MomentSums& into, const MomentSums& part) {
            into.S1 += part.S1;
            into.S2 += part.S2;
            into.contempo += part.contempo;
            (void)q;
        });
    finalize_context(ctx, total);
}

GmmContext make_gmm_context(YieldPanel panel, MomentSelector selector,
                            int grid_segments, bool parallel) {
    if (panel.T() < 2) throw std::invalid_argument("make_gmm_context: need T >= 2");
    if (selector.q() == 0) throw std::invalid_argument("make_gmm_context: empty selector");
    if (selector.max_maturity_index() > panel.M())
        throw std::invalid_argument("make_gmm_context: selector indexes beyond panel maturities");

    GmmContext ctx;
    ctx.panel = std::move(panel);
    ctx.selector = std::move(selector);
    int need = 2;
    for (const auto& l : ctx.selector.labels) need = std::max(need, required_degree(l));
    ctx.basis = MonomialBasis(3, need);
    ctx.p_dim = ctx.selector.uses_fourth_order() ? 24 : 23;
    ctx.maturities = ctx.panel.maturities;
    ctx.grid = TimeGrid::build(ctx.maturities, grid_segments);
    if (parallel)
        accumulate_sample_moments_parallel(ctx);
    else
        accumulate_sample_moments_serial(ctx);
    return ctx;
}

std::optional<Vector> selected_moments(const GmmContext& ctx, const ParamVector& p) {
    if (ctx.selector.uses_fourth_order() && !p.sigma4_eps)
        throw std::invalid_argument("selected_moments: selector needs sigma4eps in the parameter vector");
    auto loadings = try_yield_loadings(p.q_spec(), ctx.maturities, ctx.grid);
    if (!loadings) return std::nullopt;

    GeneratorMatrix gen = build_generator(p.p_spec(), ctx.basis);
    Matrix expA = matrix_exponential(gen.A, 1.0);
    auto statm = try_stationary_moments(expA);
    if (!statm || statm->ill_conditioned) return std::nullopt;

    MomentContext mc;
    mc.basis = &ctx.basis;
    mc.loadings = *loadings;
    mc.statm = statm->m;
    mc.expA = std::move(expA);
    mc.noise.sigma2 = p.sigma2_eps;
    mc.noise.sigma4 = p.sigma4_eps;

    Vector mu(ctx.selector.q());
    for (int k = 0; k < ctx.selector.q(); ++k)
        mu(k) = evaluate_moment(mc, ctx.selector.labels[static_cast<size_t>(k)]);
    if (!mu.allFinite()) return std::nullopt;
    return mu;
}

double distance(const ParamVector& p, const GmmContext& ctx, const Matrix& C) {
    if (C.rows() != ctx.selector.q() || C.cols() != ctx.selector.q())
        throw std::invalid_argument("distance: weight dimension mismatch");
    auto mu = selected_moments(ctx, p);
    if (!mu) return std::numeric_limits<double>::infinity();
    Vector h = ctx.m_T - *mu;
    const double q = h.dot(C * h);
    if (q < -1e-9 * (1.0 + h.squaredNorm()) * C.norm())
        throw std::invalid_argument("distance: weighting matrix is not positive semidefinite");
    return std::max(q, 0.0);
}

Matrix cue_lambda(const GmmContext& ctx, const Vector& mu) {
    const double n = static_cast<double>(ctx.lag_count);
    Matrix lam = (ctx.S2 - ctx.S1 * mu.transpose() - mu * ctx.S1.transpose() +
                  n * (mu * mu.transpose())) /
                 n;
    return 0.5 * (lam + lam.transpose());
}

Matrix cue_weight(const GmmContext& ctx, const Vector& mu, bool* ridged) {
    Matrix lam = cue_lambda(ctx, mu);
    const int q = static_cast<int>(lam.rows());
    Eigen::PartialPivLU<Matrix> lu(lam);
    bool applied = false;
    if (!(lu.rcond() > 1e-14)) {
        lam += (1e-10 * lam.trace() / q) * Matrix::Identity(q, q);
        lu.compute(lam);
        applied = true;
    }
    if (ridged) *ridged = applied;
    if (!(lu.rcond() > 0.0) || !std::isfinite(lu.rcond()))
        throw numerical_error("cue_weight: moment covariance irrecoverably singular");
    Matrix C = lu.inverse();
    return 0.5 * (C + C.transpose());
}

Matrix moment_jacobian(const ParamVector& theta_hat, const GmmContext& ctx) {
    const int q = ctx.selector.q();
    const int p_dim = theta_hat.dim();
    Matrix H(q, p_dim);
    for (int j = 0; j < p_dim; ++j) {
        const double step = std::max(1e-5 * std::fabs(theta_hat.get(j)), 1e-7);
        ParamVector up = theta_hat, dn = theta_hat;
        up.set(j, theta_hat.get(j) + step);
        dn.set(j, theta_hat.get(j) - step);
        auto mu_up = selected_moments(ctx, up);
        auto mu_dn = selected_moments(ctx, dn);
        if (!mu_up || !mu_dn)
            throw numerical_error(std::string("moment_jacobian: finite difference failed at ") +
                                  ParamVector::coord_name(j));
        H.col(j) = (*mu_up - *mu_dn) / (2.0 * step);
    }
    return H;
}

Matrix sandwich_covariance(const Matrix& H, const Matrix& lambda) {
    const int p_dim = static_cast<int>(H.cols());
    Eigen::PartialPivLU<Matrix> lu(lambda);
    if (!(lu.rcond() > 1e-15))
        throw numerical_error("sandwich_covariance: moment covariance singular");
    Matrix bread = H.transpose() * lu.solve(H);
    bread = 0.5 * (bread + bread.transpose());
    // Equilibrate before the conditioning check: the raw parameter scales
    // differ by orders of magnitude and would mask a perfectly usable system.
    Vector scale(p_dim);
    for (int j = 0; j < p_dim; ++j)
        scale(j) = 1.0 / std::sqrt(std::max(bread(j, j), 1e-300));
    Matrix balanced = scale.asDiagonal() * bread * scale.asDiagonal();
    Eigen::PartialPivLU<Matrix> lu2(balanced);
    if (!(lu2.rcond() > 1e-13))
        throw numerical_error("sandwich_covariance: H' Lambda^{-1} H is rank deficient");
    Matrix V = scale.asDiagonal() * lu2.inverse() * scale.asDiagonal();
    return 0.5 * (V + V.transpose());
}

Matrix standard_covariance(const ParamVector& theta_hat, const GmmContext& ctx) {
    auto mu0 = selected_moments(ctx, theta_hat);
    if (!mu0) throw numerical_error("standard_covariance: moments unavailable at theta_hat");
    return sandwich_covariance(moment_jacobian(theta_hat, ctx), cue_lambda(ctx, *mu0));
}

WaldResult wald(const Vector& r_value, const Matrix& R, const Matrix& V, double T) {
    const int r = static_cast<int>(R.rows());
    if (r_value.size() != r || R.cols() != V.rows() || V.rows() != V.cols())
        throw std::invalid_argument("wald: dimension mismatch");
    Matrix RVRt = R * V * R.transpose();
    RVRt = 0.5 * (RVRt + RVRt.transpose());
    if (r == 1 && r_value(0) == 0.0) return {0.0, 1.0};
    Eigen::PartialPivLU<Matrix> lu(RVRt);
    if (!(lu.rcond() > 1e-12))
        throw numerical_error("wald: R V R' is numerically rank deficient");
    const double W = T * r_value.dot(lu.solve(r_value));
    return {W, chi2_survival(W, r)};
}

} // namespace atsm
