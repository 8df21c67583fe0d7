#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>

#include "atsm/batchmeans.hpp"
#include "atsm/gmm.hpp"
#include "atsm/model.hpp"

namespace atsm {

/// Quasi-likelihood target L(theta) = exp(-T Q_T(theta)/2) presented to the
/// sampler as a residual + weight pair so the continuous-updating weight can
/// be refreshed from the previous accepted draw.
class QuasiObjective {
public:
    virtual ~QuasiObjective() = default;
    virtual int q() const = 0;
    virtual int p_dim() const = 0;
    virtual double sample_size() const = 0;
    virtual bool with_sigma4() const = 0;
    virtual bool in_support(const ParamVector& p) const = 0;
    virtual std::optional<Vector> residual(const ParamVector& p) const = 0;
    /// Weight refreshed once per sweep from the previous accepted draw.
    virtual Matrix weight(const ParamVector& state, const Vector& h_state) const = 0;
};

/// CUE-GMM objective over a data panel.
class GmmObjective : public QuasiObjective {
public:
    explicit GmmObjective(const GmmContext& ctx) : ctx_(&ctx) {}
    int q() const override { return ctx_->selector.q(); }
    int p_dim() const override { return ctx_->p_dim; }
    double sample_size() const override { return ctx_->temperature_T(); }
    bool with_sigma4() const override { return ctx_->selector.uses_fourth_order(); }
    bool in_support(const ParamVector& p) const override {
        return in_theta0(p, ctx_->mbar_shortest).ok();
    }
    std::optional<Vector> residual(const ParamVector& p) const override {
        auto mu = selected_moments(*ctx_, p);
        if (!mu) return std::nullopt;
        return Vector(ctx_->m_T - *mu);
    }
    Matrix weight(const ParamVector&, const Vector& h_state) const override {
        return cue_weight(*ctx_, Vector(ctx_->m_T - h_state));
    }

private:
    const GmmContext* ctx_;
};

/// Fixed-weight quadratic target for sampler calibration tests:
/// Q(theta) = (theta - mode)' H (theta - mode).
class QuadraticObjective : public QuasiObjective {
public:
    QuadraticObjective(ParamVector mode, Matrix H, double T,
                       std::function<bool(const ParamVector&)> support = nullptr);
    int q() const override { return static_cast<int>(H_.rows()); }
    int p_dim() const override { return mode_.dim(); }
    double sample_size() const override { return T_; }
    bool with_sigma4() const override { return mode_.sigma4_eps.has_value(); }
    bool in_support(const ParamVector& p) const override;
    std::optional<Vector> residual(const ParamVector& p) const override;
    Matrix weight(const ParamVector&, const Vector&) const override { return H_; }

private:
    ParamVector mode_;
    Matrix H_;
    double T_;
    std::function<bool(const ParamVector&)> support_;
};

struct SamplerConfig {
    int n_starts = 2000;
    int n_draws = 20000;
    int burnin = 5000;
    double c_theta = 1.0;
    double rw_scale = 0.01;
    double big_move_prob = 0.10;
    double big_move_scale = 0.10;
    double rw_abs_floor = 0.01;   // |theta| floor inside the proposal sd
    double rj_prob = 0.10;
    double p_s1 = 0.90;
    double tie_prob = 0.80;
    double sigma_u = 1.0;
    double sigma_ugamma = 0.5;
    bool rj_update_gamma0 = true;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Desk-scale profile for quick studies; the full profile mirrors the
/// defaults above.
SamplerConfig desk_profile(SamplerConfig base = {});

struct ChainTrace {
    Matrix draws;                  // n_draws x p
    std::vector<std::uint8_t> s1;  // tied-state flag per draw
    Vector qt;                     // Q_T of the stored draw under that sweep's weight
    std::array<long, 5> block_accepts{};
    std::array<long, 5> block_totals{};
    long rj_attempts = 0;
    long rj_accepts = 0;
    bool with_sigma4 = false;
};

using Rng = std::mt19937_64;

/// Start-value perturbation on the coordinate supports; ties thetaP to
/// thetaQ with probability tie_prob; resamples until the support accepts,
/// giving up after 10000 consecutive rejections.
ParamVector perturb_start(const ParamVector& center, double c_theta, double tie_prob,
                          const QuasiObjective& obj, Rng& rng);

/// Identity-weight random search; returns the feasible candidate with the
/// smallest Q.  `parallel` fans the evaluations out over OpenMP (result is
/// thread-count independent).
ParamVector multistart(const QuasiObjective& obj, const ParamVector& center,
                       const SamplerConfig& cfg, Rng& rng, bool parallel = true);
ParamVector multistart_serial(const QuasiObjective& obj, const ParamVector& center,
                              const SamplerConfig& cfg, Rng& rng);

/// Dimension-changing move maps between the tied state (thetaQ = thetaP)
/// and the split state.  The merge map is the exact inverse of the split
/// map for a shared (eta, u, u_gamma).
struct SplitImage {
    double thetaP, thetaQ, gamma0;
};
SplitImage rj_split_map(double theta, double gamma0, double eta, double u, double u_gamma,
                        bool update_gamma0);

struct MergeImage {
    double theta, gamma0;
    double u; // recovered innovation, enters the acceptance density
};
MergeImage rj_merge_map(double thetaP, double thetaQ, double gamma0, double eta,
                        double u_gamma, bool update_gamma0);

/// Block random-walk Metropolis-Hastings with reversible tie/untie moves on
/// (thetaQ, thetaP, gamma0).
ChainTrace run_chain(const QuasiObjective& obj, const ParamVector& start,
                     const SamplerConfig& cfg);

/// Parameter blocks over the frozen coordinate order (0-based indices).
std::array<std::vector<int>, 5> parameter_blocks(int p_dim);

struct EstimateResult {
    ParamVector theta_hat;
    Vector mc_se;        // sqrt of batch-means Var(chain mean), per coordinate
    Vector sd_chain;     // posterior spread of the draws, per coordinate
    double s1_occupancy = 0.0;
};

EstimateResult estimate(const ChainTrace& trace, const SamplerConfig& cfg);

enum class ChainVariance {
    BatchMeansMean,  // covariance of the chain mean, batch means
    Draws            // covariance of the draws
};

struct ChainWald {
    double statistic = 0.0;
    double p_value = 1.0;
    Vector contrast;
};

/// Wald test of R theta = 0 from chain output; the covariance of the
/// contrast comes from the post-burn-in draws under the chosen convention.
ChainWald wald_from_chain(const ChainTrace& trace, int burnin, const Matrix& R,
                          double sample_size, ChainVariance convention);

/// Contrast selectors for the two supported hypotheses.
Matrix theta_contrast_matrix(int p_dim);  // 1 x p: thetaQ - thetaP
Matrix beta_contrast_matrix(int p_dim);   // 7 x p: betaQ - betaP

} // namespace atsm
