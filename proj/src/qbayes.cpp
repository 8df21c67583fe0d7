#include "atsm/qbayes.hpp"

#include <cmath>

#include "atsm/chi2.hpp"
#include "atsm/parallel.hpp"

namespace atsm {

QuadraticObjective::QuadraticObjective(ParamVector mode, Matrix H, double T,
                                       std::function<bool(const ParamVector&)> support)
    : mode_(std::move(mode)), H_(std::move(H)), T_(T), support_(std::move(support)) {
    if (H_.rows() != H_.cols() || H_.rows() != mode_.dim())
        throw std::invalid_argument("QuadraticObjective: H must be p x p");
}

bool QuadraticObjective::in_support(const ParamVector& p) const {
    return support_ ? support_(p) : true;
}

std::optional<Vector> QuadraticObjective::residual(const ParamVector& p) const {
    return Vector(p.as_vector() - mode_.as_vector());
}

void SamplerConfig::validate() const {
    if (n_starts < 1) throw std::invalid_argument("SamplerConfig: n_starts must be >= 1");
    if (n_draws < 1) throw std::invalid_argument("SamplerConfig: n_draws must be >= 1");
    if (burnin < 0 || burnin >= n_draws)
        throw std::invalid_argument("SamplerConfig: need 0 <= burnin < n_draws");
    for (double prob : {big_move_prob, rj_prob, p_s1, tie_prob})
        if (prob < 0.0 || prob > 1.0)
            throw std::invalid_argument("SamplerConfig: probabilities must be in [0,1]");
    if (!(rw_scale > 0.0) || !(sigma_u > 0.0) || !(sigma_ugamma > 0.0))
        throw std::invalid_argument("SamplerConfig: scales must be > 0");
}

SamplerConfig desk_profile(SamplerConfig base) {
    base.n_starts = 200;
    base.n_draws = 2000;
    base.burnin = 500;
    return base;
}

std::array<std::vector<int>, 5> parameter_blocks(int p_dim) {
    std::array<std::vector<int>, 5> blocks;
    blocks[0] = {0, 1, 18};
    blocks[1] = {2, 3, 4, 5, 6, 7, 8};
    blocks[2] = {9, 10, 11, 12, 13, 14};
    blocks[3] = {15, 16, 17};
    for (int j = 19; j < p_dim; ++j) blocks[4].push_back(j);
    return blocks;
}

namespace {

double log_normal_density(double u, double sd) {
    return -0.5 * u * u / (sd * sd) - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
}

ParamVector perturb_once(const ParamVector& center, double c_theta, double tie_prob,
                         Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ParamVector cand = center;
    for (int j = 0; j < center.dim(); ++j) {
        const double zeta = gauss(rng);
        const double v = center.get(j);
        if (c_theta == 0.0) {
            cand.set(j, v);
        } else if (ParamVector::coord_support(j) == CoordSupport::Real) {
            cand.set(j, v + c_theta * std::fabs(v) * zeta);
        } else if (v == 0.0) {
            cand.set(j, 0.0); // log-scale perturbation keeps exact zeros
        } else {
            const double sgn = v > 0.0 ? 1.0 : -1.0;
            cand.set(j, sgn * std::exp(std::log(std::fabs(v)) + c_theta * zeta));
        }
    }
    if (unif(rng) < tie_prob) cand.thetaP = cand.thetaQ;
    return cand;
}

} // namespace

ParamVector perturb_start(const ParamVector& center, double c_theta, double tie_prob,
                          const QuasiObjective& obj, Rng& rng) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
        ParamVector cand = perturb_once(center, c_theta, tie_prob, rng);
        if (obj.in_support(cand)) return cand;
    }
    throw numerical_error(
        "perturb_start: 10000 consecutive draws left the sampler support; "
        "check the center against the support bounds");
}

ParamVector multistart_serial(const QuasiObjective& obj, const ParamVector& center,
                              const SamplerConfig& cfg, Rng& rng) {
    return multistart(obj, center, cfg, rng, /*parallel=*/false);
}

ParamVector multistart(const QuasiObjective& obj, const ParamVector& center,
                       const SamplerConfig& cfg, Rng& rng, bool parallel) {
    cfg.validate();
    std::vector<ParamVector> candidates;
    candidates.reserve(static_cast<size_t>(cfg.n_starts));
    for (int n = 0; n < cfg.n_starts; ++n)
        candidates.push_back(perturb_start(center, cfg.c_theta, cfg.tie_prob, obj, rng));

    std::vector<double> quality(candidates.size(),
                                std::numeric_limits<double>::infinity());
    auto eval = [&](int k) {
        auto h = obj.residual(candidates[static_cast<size_t>(k)]);
        if (h) quality[static_cast<size_t>(k)] = h->squaredNorm();
    };
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int k = 0; k < static_cast<int>(candidates.size()); ++k) eval(k);
    } else {
        for (int k = 0; k < static_cast<int>(candidates.size()); ++k) eval(k);
    }

    int best = -1;
    double best_q = std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(candidates.size()); ++k) {
        if (quality[static_cast<size_t>(k)] < best_q) {
            best_q = quality[static_cast<size_t>(k)];
            best = k;
        }
    }
    if (best < 0)
        throw numerical_error("multistart: no feasible start produced a computable objective");
    return candidates[static_cast<size_t>(best)];
}

SplitImage rj_split_map(double theta, double gamma0, double eta, double u, double u_gamma,
                        bool update_gamma0) {
    SplitImage out;
    out.thetaP = theta - 2.0 * eta * u;
    out.thetaQ = theta + 2.0 * (1.0 - eta) * u;
    out.gamma0 = update_gamma0 ? gamma0 - 2.0 * eta * u + u_gamma : gamma0;
    return out;
}

MergeImage rj_merge_map(double thetaP, double thetaQ, double gamma0, double eta,
                        double u_gamma, bool update_gamma0) {
    MergeImage out;
    out.u = 0.5 * (thetaQ - thetaP);
    out.theta = (1.0 - eta) * thetaP + eta * thetaQ;
    out.gamma0 = update_gamma0 ? gamma0 + 2.0 * eta * out.u - u_gamma : gamma0;
    return out;
}

namespace {

struct ChainState {
    ParamVector x;
    Vector h;
    bool s1 = false;
};

// Shared machinery for one MH decision given the current weight.
struct SweepContext {
    const QuasiObjective* obj;
    const SamplerConfig* cfg;
    Rng* rng;
    Matrix C;
    double q_current = 0.0;

    double quad(const Vector& h) const { return h.dot(C * h); }

    bool accept_log_ratio(double log_ratio) {
        if (log_ratio >= 0.0) return true;
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        return std::log(unif(*rng)) < log_ratio;
    }
};

} // namespace

ChainTrace run_chain(const QuasiObjective& obj, const ParamVector& start,
                     const SamplerConfig& cfg) {
    cfg.validate();
    if (!obj.in_support(start))
        throw std::invalid_argument("run_chain: start is outside the sampler support");
    auto h0 = obj.residual(start);
    if (!h0) throw numerical_error("run_chain: objective not computable at the start");

    const int p_dim = start.dim();
    const double T = obj.sample_size();
    const auto blocks = parameter_blocks(p_dim);

    Rng rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    ChainState state{start, *h0, start.thetaQ == start.thetaP};

    ChainTrace trace;
    trace.with_sigma4 = start.sigma4_eps.has_value();
    trace.draws = Matrix(cfg.n_draws, p_dim);
    trace.s1.resize(static_cast<size_t>(cfg.n_draws));
    trace.qt = Vector(cfg.n_draws);

    SweepContext sweep{&obj, &cfg, &rng, Matrix(), 0.0};

    for (int m = 0; m < cfg.n_draws; ++m) {
        // Continuous-updating refresh from the previous accepted draw.
        sweep.C = obj.weight(state.x, state.h);
        sweep.q_current = sweep.quad(state.h);

        for (int k = 0; k < 5; ++k) {
            if (blocks[static_cast<size_t>(k)].empty()) continue;
            ++trace.block_totals[static_cast<size_t>(k)];

            const bool big = unif(rng) < cfg.big_move_prob;
            const double scale = big ? cfg.big_move_scale : cfg.rw_scale;
            ParamVector cand = state.x;
            if (k == 0 && state.s1) {
                // Tied state: one proposal drives both theta coordinates.
                const double sd_t = scale * std::max(std::fabs(state.x.thetaQ), cfg.rw_abs_floor);
                const double theta_new = state.x.thetaQ + sd_t * gauss(rng);
                cand.thetaQ = theta_new;
                cand.thetaP = theta_new;
                const double sd_g = scale * std::max(std::fabs(state.x.gamma0), cfg.rw_abs_floor);
                cand.gamma0 = state.x.gamma0 + sd_g * gauss(rng);
            } else {
                for (int j : blocks[static_cast<size_t>(k)]) {
                    const double sd = scale * std::max(std::fabs(state.x.get(j)), cfg.rw_abs_floor);
                    cand.set(j, state.x.get(j) + sd * gauss(rng));
                }
            }
            if (!obj.in_support(cand)) continue;
            auto h_new = obj.residual(cand);
            if (!h_new) continue;
            const double q_new = sweep.quad(*h_new);
            if (sweep.accept_log_ratio(-0.5 * T * (q_new - sweep.q_current))) {
                state.x = cand;
                state.h = *h_new;
                sweep.q_current = q_new;
                ++trace.block_accepts[static_cast<size_t>(k)];
            }
        }

        if (unif(rng) < cfg.rj_prob) {
            ++trace.rj_attempts;
            if (state.s1) {
                // Split the tied theta into separate P and Q values.
                const double eta = unif(rng);
                const double u = cfg.sigma_u * gauss(rng);
                const double ug = cfg.sigma_ugamma * gauss(rng);
                SplitImage img = rj_split_map(state.x.thetaQ, state.x.gamma0, eta, u, ug,
                                              cfg.rj_update_gamma0);
                ParamVector cand = state.x;
                cand.thetaP = img.thetaP;
                cand.thetaQ = img.thetaQ;
                cand.gamma0 = img.gamma0;
                if (obj.in_support(cand)) {
                    auto h_new = obj.residual(cand);
                    if (h_new) {
                        const double q_new = sweep.quad(*h_new);
                        const double log_ratio = -0.5 * T * (q_new - sweep.q_current) +
                                                 std::log(1.0 - cfg.p_s1) - std::log(cfg.p_s1) +
                                                 std::log(2.0) - log_normal_density(u, cfg.sigma_u);
                        if (sweep.accept_log_ratio(log_ratio)) {
                            state.x = cand;
                            state.h = *h_new;
                            state.s1 = false;
                            sweep.q_current = q_new;
                            ++trace.rj_accepts;
                        }
                    }
                }
            } else {
                // Merge back to a tied theta; the u recovered below makes the
                // move the exact inverse of the split map.
                double eta = unif(rng);
                while (eta == 0.0 || eta == 1.0) eta = unif(rng);
                const double ug = cfg.sigma_ugamma * gauss(rng);
                MergeImage img = rj_merge_map(state.x.thetaP, state.x.thetaQ, state.x.gamma0,
                                              eta, ug, cfg.rj_update_gamma0);
                const double u = img.u;
                ParamVector cand = state.x;
                cand.thetaP = img.theta;
                cand.thetaQ = img.theta;
                cand.gamma0 = img.gamma0;
                if (obj.in_support(cand)) {
                    auto h_new = obj.residual(cand);
                    if (h_new) {
                        const double q_new = sweep.quad(*h_new);
                        const double log_ratio = -0.5 * T * (q_new - sweep.q_current) +
                                                 std::log(cfg.p_s1) - std::log(1.0 - cfg.p_s1) +
                                                 log_normal_density(u, cfg.sigma_u) - std::log(2.0);
                        if (sweep.accept_log_ratio(log_ratio)) {
                            state.x = cand;
                            state.h = *h_new;
                            state.s1 = true;
                            sweep.q_current = q_new;
                            ++trace.rj_accepts;
                        }
                    }
                }
            }
        }

        trace.draws.row(m) = state.x.as_vector().transpose();
        trace.s1[static_cast<size_t>(m)] = state.s1 ? 1 : 0;
        trace.qt(m) = sweep.q_current;
    }
    return trace;
}

EstimateResult estimate(const ChainTrace& trace, const SamplerConfig& cfg) {
    const int n = trace.draws.rows() - cfg.burnin;
    if (n < 100) throw std::invalid_argument("estimate: need at least 100 post-burn-in draws");
    Matrix tail = trace.draws.bottomRows(n);
    const int p_dim = static_cast<int>(tail.cols());

    EstimateResult out;
    Vector mean = tail.colwise().mean();
    out.theta_hat = ParamVector::from_vector(mean, trace.with_sigma4);
    out.mc_se = Vector(p_dim);
    out.sd_chain = Vector(p_dim);
    for (int j = 0; j < p_dim; ++j) {
        out.mc_se(j) = std::sqrt(batch_means_variance_of_mean(tail.col(j)));
        out.sd_chain(j) = std::sqrt((tail.col(j).array() - mean(j)).square().sum() /
                                    static_cast<double>(n - 1));
    }
    long s1_count = 0;
    for (int m = cfg.burnin; m < trace.draws.rows(); ++m)
        s1_count += trace.s1[static_cast<size_t>(m)];
    out.s1_occupancy = static_cast<double>(s1_count) / static_cast<double>(n);
    return out;
}

Matrix theta_contrast_matrix(int p_dim) {
    Matrix R = Matrix::Zero(1, p_dim);
    R(0, 0) = 1.0;
    R(0, 1) = -1.0;
    return R;
}

Matrix beta_contrast_matrix(int p_dim) {
    Matrix R = Matrix::Zero(7, p_dim);
    for (int k = 0; k < 7; ++k) {
        R(k, 2 + k) = 1.0;
        R(k, 9 + k) = -1.0;
    }
    return R;
}

ChainWald wald_from_chain(const ChainTrace& trace, int burnin, const Matrix& R,
                          double sample_size, ChainVariance convention) {
    const int n = trace.draws.rows() - burnin;
    if (n < 100) throw std::invalid_argument("wald_from_chain: need at least 100 post-burn-in draws");
    if (R.cols() != trace.draws.cols())
        throw std::invalid_argument("wald_from_chain: contrast dimension mismatch");
    const int r = static_cast<int>(R.rows());

    Matrix series = trace.draws.bottomRows(n) * R.transpose(); // n x r
    Vector r_hat = series.colwise().mean();

    ChainWald out;
    out.contrast = r_hat;
    const double spread = (series.rowwise() - r_hat.transpose()).cwiseAbs().maxCoeff();
    if (r_hat.cwiseAbs().maxCoeff() == 0.0 && spread == 0.0) return out; // W = 0, p = 1

    Matrix cov;
    if (convention == ChainVariance::BatchMeansMean) {
        cov = batch_means_asymptotic_covariance(series) / static_cast<double>(n);
    } else {
        Matrix centered = series.rowwise() - r_hat.transpose();
        cov = centered.transpose() * centered / static_cast<double>(n - 1);
    }
    // W = T r'(R V R')^{-1} r with V = T * cov and R folded into the series.
    Eigen::PartialPivLU<Matrix> lu(cov);
    if (!(lu.rcond() > 1e-13))
        throw numerical_error("wald_from_chain: contrast covariance is rank deficient");
    out.statistic = r_hat.dot(lu.solve(r_hat));
    out.p_value = chi2_survival(out.statistic, r);
    (void)sample_size;
    return out;
}

} // namespace atsm
