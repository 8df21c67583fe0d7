#include "atsm/yieldmoments.hpp"

#include <cmath>
#include <sstream>

#include "atsm/gindex.hpp"

namespace atsm {

void NoiseSpec::validate() const {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("NoiseSpec: sigma2 must be > 0");
    if (sigma4 && !(*sigma4 >= sigma2 * sigma2))
        throw std::invalid_argument("NoiseSpec: sigma4 must be >= sigma2^2");
}

std::string to_string(const MomentLabel& label) {
    std::ostringstream os;
    switch (label.kind) {
        case MomentKind::Ey: os << "Ey " << label.i; break;
        case MomentKind::Eyy: os << "Eyy " << label.i << " " << label.j; break;
        case MomentKind::Ey2y: os << "Ey2y " << label.i << " " << label.j; break;
        case MomentKind::Eyy2: os << "Eyy2 " << label.i << " " << label.j; break;
        case MomentKind::Ey2y2: os << "Ey2y2 " << label.i << " " << label.j; break;
        case MomentKind::Eylag: os << "Eylag " << label.i; break;
        case MomentKind::Ey2y2lag: os << "Ey2y2lag " << label.i; break;
    }
    return os.str();
}

MomentLabel parse_moment_label(const std::string& line) {
    std::istringstream is(line);
    std::string kind;
    is >> kind;
    MomentLabel label;
    auto need = [&](int count) {
        if (count >= 1 && !(is >> label.i)) throw std::invalid_argument("moment label: missing index in '" + line + "'");
        if (count >= 2 && !(is >> label.j)) throw std::invalid_argument("moment label: missing index in '" + line + "'");
        std::string rest;
        if (is >> rest) throw std::invalid_argument("moment label: trailing tokens in '" + line + "'");
    };
    if (kind == "Ey") { label.kind = MomentKind::Ey; need(1); }
    else if (kind == "Eyy") { label.kind = MomentKind::Eyy; need(2); if (label.i > label.j) std::swap(label.i, label.j); }
    else if (kind == "Ey2y") { label.kind = MomentKind::Ey2y; need(2); }
    else if (kind == "Eyy2") { label.kind = MomentKind::Eyy2; need(2); }
    else if (kind == "Ey2y2") { label.kind = MomentKind::Ey2y2; need(2); if (label.i > label.j) std::swap(label.i, label.j); }
    else if (kind == "Eylag") { label.kind = MomentKind::Eylag; need(1); }
    else if (kind == "Ey2y2lag") { label.kind = MomentKind::Ey2y2lag; need(1); }
    else throw std::invalid_argument("moment label: unknown family '" + kind + "'");
    if (label.i < 1 || (label.j != 0 && label.j < 1))
        throw std::invalid_argument("moment label: indices must be >= 1 in '" + line + "'");
    return label;
}

bool needs_sigma4(const MomentLabel& label) {
    return label.kind == MomentKind::Ey2y2 && label.i == label.j;
}

int required_degree(const MomentLabel& label) {
    switch (label.kind) {
        case MomentKind::Ey: return 1;
        case MomentKind::Eyy:
        case MomentKind::Eylag: return 2;
        case MomentKind::Ey2y:
        case MomentKind::Eyy2: return 3;
        case MomentKind::Ey2y2:
        case MomentKind::Ey2y2lag: return 4;
    }
    return 4;
}

bool is_lag(const MomentLabel& label) {
    return label.kind == MomentKind::Eylag || label.kind == MomentKind::Ey2y2lag;
}

std::vector<MomentLabel> full_catalogue_labels(int M) {
    std::vector<MomentLabel> out;
    for (int i = 1; i <= M; ++i) out.push_back({MomentKind::Ey, i, 0});
    for (int i = 1; i <= M; ++i)
        for (int j = i; j <= M; ++j) out.push_back({MomentKind::Eyy, i, j});
    for (int i = 1; i <= M; ++i)
        for (int j = 1; j <= M; ++j) out.push_back({MomentKind::Ey2y, i, j});
    for (int i = 1; i <= M; ++i)
        for (int j = 1; j <= M; ++j)
            if (i != j) out.push_back({MomentKind::Eyy2, i, j});
    for (int i = 1; i <= M; ++i)
        for (int j = i; j <= M; ++j) out.push_back({MomentKind::Ey2y2, i, j});
    for (int i = 1; i <= M; ++i) out.push_back({MomentKind::Eylag, i, 0});
    for (int i = 1; i <= M; ++i) out.push_back({MomentKind::Ey2y2lag, i, 0});
    return out;
}

MomentCoeffs moment_coeff_vectors(const Vector& psi_i, const Vector& psi_j,
                                  const MonomialBasis& basis) {
    const int d = basis.d();
    if (psi_i.size() != d || psi_j.size() != d)
        throw std::invalid_argument("moment_coeff_vectors: loading dimension mismatch");
    MomentCoeffs mc;
    auto slot = [&](int degree, const Exponents& e) {
        return basis.index_of(e) - basis.block_start(degree);
    };
    if (basis.p() >= 2) {
        mc.m2 = Vector::Zero(basis.block_size(2));
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
                Exponents e{0, 0, 0};
                e[a] += 1; e[b] += 1;
                mc.m2(slot(2, e)) += psi_i(a) * psi_j(b);
            }
    }
    if (basis.p() >= 3) {
        mc.m3a = Vector::Zero(basis.block_size(3));
        mc.m3b = Vector::Zero(basis.block_size(3));
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                for (int c = 0; c < d; ++c) {
                    Exponents e{0, 0, 0};
                    e[a] += 1; e[b] += 1; e[c] += 1;
                    const int s = slot(3, e);
                    mc.m3a(s) += psi_i(a) * psi_i(b) * psi_j(c);
                    mc.m3b(s) += psi_i(a) * psi_j(b) * psi_j(c);
                }
    }
    if (basis.p() >= 4) {
        mc.m4 = Vector::Zero(basis.block_size(4));
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                for (int c = 0; c < d; ++c)
                    for (int f = 0; f < d; ++f) {
                        Exponents e{0, 0, 0};
                        e[a] += 1; e[b] += 1; e[c] += 1; e[f] += 1;
                        mc.m4(slot(4, e)) += psi_i(a) * psi_i(b) * psi_j(c) * psi_j(f);
                    }
    }
    return mc;
}

namespace {

struct Blocks {
    int d, p;
    Eigen::Map<const Vector> EX, EX2, EX3, EX4;

    explicit Blocks(const MomentContext& ctx)
        : d(ctx.basis->d()),
          p(ctx.basis->p()),
          EX(ctx.statm.data(), d),
          EX2(p >= 2 ? ctx.statm.data() + d : ctx.statm.data(), p >= 2 ? ctx.basis->block_size(2) : 0),
          EX3(p >= 3 ? ctx.statm.data() + ctx.basis->block_start(3) - 1 : ctx.statm.data(),
              p >= 3 ? ctx.basis->block_size(3) : 0),
          EX4(p >= 4 ? ctx.statm.data() + ctx.basis->block_start(4) - 1 : ctx.statm.data(),
              p >= 4 ? ctx.basis->block_size(4) : 0) {}
};

void check_available(const MomentContext& ctx, const MomentLabel& label) {
    const int M = static_cast<int>(ctx.loadings.PhiTilde.size());
    if (label.i > M || label.j > M)
        throw std::invalid_argument("evaluate_moment: maturity index out of range for " + to_string(label));
    const int need = required_degree(label);
    if (ctx.basis->p() < need || ctx.statm.size() < ctx.basis->block_start(need) - 1 + ctx.basis->block_size(need))
        throw std::invalid_argument("evaluate_moment: stationary moments of degree " +
                                    std::to_string(need) + " unavailable for " + to_string(label));
    if (needs_sigma4(label) && !ctx.noise.sigma4)
        throw std::invalid_argument("evaluate_moment: sigma4 required for " + to_string(label));
    if (is_lag(label) && ctx.expA.rows() != ctx.basis->size())
        throw std::invalid_argument("evaluate_moment: exp(dt A) unavailable for lag label " + to_string(label));
}

// E(X_ti X_sj X_tl), 1-based indices, t > s.
double exxx_tst(const MomentContext& ctx, const Blocks& bl, int i, int j, int l) {
    const int d = bl.d;
    const int row = d + g2_sorted(i, l, d);
    double v = ctx.expA(row, 0) * bl.EX(j - 1);
    for (int c = 1; c <= d; ++c)
        v += ctx.expA(row, c) * bl.EX2(g2_sorted(c, j, d) - 1);
    int g = 1;
    for (int a = 1; a <= d; ++a)
        for (int b = a; b <= d; ++b, ++g)
            v += ctx.expA(row, d + g) * bl.EX3(g3_sorted(a, b, j, d) - 1);
    return v;
}

// E(X_ti X_sj X_sl), 1-based indices, t > s.
double exxx_tss(const MomentContext& ctx, const Blocks& bl, int i, int j, int l) {
    const int d = bl.d;
    double v = ctx.expA(i, 0) * bl.EX2(g2_sorted(j, l, d) - 1);
    for (int c = 1; c <= d; ++c)
        v += ctx.expA(i, c) * bl.EX3(g3_sorted(c, j, l, d) - 1);
    return v;
}

// E(X_ti X_sj X_tm X_sn), 1-based indices, t > s.
double exxxx(const MomentContext& ctx, const Blocks& bl, int i, int j, int m, int n) {
    const int d = bl.d;
    const int row = d + g2_sorted(i, m, d);
    double v = ctx.expA(row, 0) * bl.EX2(g2_sorted(j, n, d) - 1);
    for (int c = 1; c <= d; ++c)
        v += ctx.expA(row, c) * bl.EX3(g3_sorted(c, j, n, d) - 1);
    int g = 1;
    for (int a = 1; a <= d; ++a)
        for (int b = a; b <= d; ++b, ++g)
            v += ctx.expA(row, d + g) * bl.EX4(g4_sorted(a, b, j, n, d) - 1);
    return v;
}

} // namespace

Matrix cross_time_moments(const MomentContext& ctx, int v, int w) {
    const MonomialBasis& basis = *ctx.basis;
    if (v < 1 || w < 1 || v + w > 4 || v + w > basis.p())
        throw std::invalid_argument("cross_time_moments: need 1 <= v,w and v+w <= min(4,p)");
    if (ctx.expA.rows() != basis.size())
        throw std::invalid_argument("cross_time_moments: exp(dt A) dimension mismatch");
    auto statm_at = [&](const Exponents& e) {
        int degree = e[0] + e[1] + e[2];
        if (degree == 0) return 1.0;
        return ctx.statm(basis.index_of(e) - 1);
    };
    Matrix out(basis.block_size(v), basis.block_size(w));
    for (int a = 0; a < basis.block_size(v); ++a) {
        const int row = basis.block_start(v) + a;
        for (int b = 0; b < basis.block_size(w); ++b) {
            const Exponents& eb = basis.exponents(basis.block_start(w) + b);
            double acc = 0.0;
            for (int deg = 0; deg <= v; ++deg) {
                for (int c = 0; c < basis.block_size(deg); ++c) {
                    const int col = basis.block_start(deg) + c;
                    const Exponents& ec = basis.exponents(col);
                    Exponents sum{ec[0] + eb[0], ec[1] + eb[1], ec[2] + eb[2]};
                    acc += ctx.expA(row, col) * statm_at(sum);
                }
            }
            out(a, b) = acc;
        }
    }
    return out;
}

double evaluate_moment(const MomentContext& ctx, const MomentLabel& label) {
    check_available(ctx, label);
    ctx.noise.validate();
    const Blocks bl(ctx);
    const int d = bl.d;
    const double s2 = ctx.noise.sigma2;
    const auto& L = ctx.loadings;

    auto Phi = [&](int idx) { return L.PhiTilde(idx - 1); };
    auto Psi = [&](int idx) { return Vector(L.PsiTilde.row(idx - 1).transpose()); };

    switch (label.kind) {
        case MomentKind::Ey: {
            return Phi(label.i) + Psi(label.i).dot(bl.EX);
        }
        case MomentKind::Eyy: {
            const int i = label.i, j = label.j;
            Vector pi = Psi(i), pj = Psi(j);
            MomentCoeffs mc = moment_coeff_vectors(pi, pj, *ctx.basis);
            double v = Phi(i) * Phi(j) + (Phi(i) * pj + Phi(j) * pi).dot(bl.EX) + mc.m2.dot(bl.EX2);
            if (i == j) v += s2;
            return v;
        }
        case MomentKind::Ey2y:
        case MomentKind::Eyy2: {
            // Eyy2(i, j) = E(y_i y_j^2) shares the algebra of Ey2y with the
            // squared slot swapped; the i==j noise correction is identical.
            const bool sq_first = label.kind == MomentKind::Ey2y;
            const int a = sq_first ? label.i : label.j;  // squared maturity
            const int b = sq_first ? label.j : label.i;  // linear maturity
            Vector pa = Psi(a), pb = Psi(b);
            MomentCoeffs mc = moment_coeff_vectors(pa, pb, *ctx.basis);
            MomentCoeffs mcaa = moment_coeff_vectors(pa, pa, *ctx.basis);
            double v = (Phi(a) * Phi(a) + s2) * Phi(b);
            v += (Phi(a) * Phi(a) * pb + 2.0 * Phi(a) * Phi(b) * pa + s2 * pb).dot(bl.EX);
            v += (2.0 * Phi(a) * mc.m2 + Phi(b) * mcaa.m2).dot(bl.EX2);
            v += mc.m3a.dot(bl.EX3);
            if (a == b) v += 2.0 * (Phi(a) + pa.dot(bl.EX)) * s2;
            return v;
        }
        case MomentKind::Ey2y2: {
            const int i = label.i, j = label.j;
            Vector pi = Psi(i), pj = Psi(j);
            MomentCoeffs mij = moment_coeff_vectors(pi, pj, *ctx.basis);
            MomentCoeffs mii = moment_coeff_vectors(pi, pi, *ctx.basis);
            MomentCoeffs mjj = moment_coeff_vectors(pj, pj, *ctx.basis);
            const double fi = Phi(i), fj = Phi(j);
            double v = fi * fi * fj * fj + s2 * fj * fj + s2 * fi * fi;
            v += (i == j) ? *ctx.noise.sigma4 : s2 * s2;
            v += 2.0 * fi * pi.dot(bl.EX) * (fj * fj + s2);
            v += 2.0 * fj * pj.dot(bl.EX) * (fi * fi + s2);
            v += mii.m2.dot(bl.EX2) * (fj * fj + s2);
            v += mjj.m2.dot(bl.EX2) * (fi * fi + s2);
            v += 4.0 * fi * fj * mij.m2.dot(bl.EX2);
            v += 2.0 * fi * mij.m3b.dot(bl.EX3);
            v += 2.0 * fj * mij.m3a.dot(bl.EX3);
            v += mij.m4.dot(bl.EX4);
            if (i == j)
                v += 4.0 * s2 * (fi * fi + 2.0 * fi * pi.dot(bl.EX) + mii.m2.dot(bl.EX2));
            return v;
        }
        case MomentKind::Eylag: {
            Vector psi = Psi(label.i);
            const double f = Phi(label.i);
            Matrix cross = ctx.expA.block(1, 0, d, 1) * bl.EX.transpose() +
                           ctx.expA.block(1, 1, d, d) * vech_inverse(bl.EX2, d);
            return f * f + 2.0 * f * psi.dot(bl.EX) + psi.dot(cross * psi);
        }
        case MomentKind::Ey2y2lag: {
            Vector psi = Psi(label.i);
            const double f = Phi(label.i);
            MomentCoeffs mc = moment_coeff_vectors(psi, psi, *ctx.basis);
            const double B1 = mc.m2.dot(bl.EX2);
            Matrix cross = ctx.expA.block(1, 0, d, 1) * bl.EX.transpose() +
                           ctx.expA.block(1, 1, d, d) * vech_inverse(bl.EX2, d);
            const double B2 = psi.dot(cross * psi);
            double B3 = 0.0, B4 = 0.0, B5 = 0.0;
            for (int a = 1; a <= d; ++a)
                for (int b = 1; b <= d; ++b) {
                    const double wab = psi(a - 1) * psi(b - 1);
                    if (wab == 0.0) continue;
                    for (int l = 1; l <= d; ++l) {
                        B3 += wab * psi(l - 1) * exxx_tst(ctx, bl, a, b, l);
                        B4 += wab * psi(l - 1) * exxx_tss(ctx, bl, a, b, l);
                        for (int k = 1; k <= d; ++k)
                            B5 += wab * psi(k - 1) * psi(l - 1) * exxxx(ctx, bl, a, b, k, l);
                    }
                }
            double v = f * f * f * f + 2.0 * (f * f + s2) * B1 + 2.0 * f * f * s2 + s2 * s2;
            v += B5 + 2.0 * f * (B3 + B4);
            v += 4.0 * (f * f + s2) * f * psi.dot(bl.EX);
            v += 4.0 * f * f * B2;
            return v;
        }
    }
    throw std::logic_error("evaluate_moment: unreachable");
}

MomentCatalogue evaluate_catalogue(const MomentContext& ctx,
                                   const std::vector<MomentLabel>& labels) {
    MomentCatalogue cat;
    cat.labels = labels;
    cat.values = Vector(labels.size());
    for (size_t k = 0; k < labels.size(); ++k)
        cat.values(static_cast<int>(k)) = evaluate_moment(ctx, labels[k]);
    return cat;
}

} // namespace atsm
