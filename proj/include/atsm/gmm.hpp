#pragma once

#include <optional>
#include <string>
#include <vector>

#include "atsm/model.hpp"
#include "atsm/simulate.hpp"
#include "atsm/yieldmoments.hpp"

namespace atsm {

/// Ordered list of catalogue labels used as moment conditions.
struct MomentSelector {
    std::vector<MomentLabel> labels;

    int q() const { return static_cast<int>(labels.size()); }
    bool uses_fourth_order() const;
    int max_maturity_index() const;

    /// The default 27-condition set for M = 10 maturities: E(y_i) and the
    /// own-lag autocovariances for all i, plus E(y_i y_j) for the pairs
    /// (1,1), (2,2), (2,3), (5,5), (7,7), (9,10), (10,10).
    static MomentSelector default27(int M);

    static MomentSelector parse(const std::string& text, int M);
    std::string serialize() const;
};

/// Immutable data-side context for GMM estimation: selected per-date moment
/// rows are folded into running sums so the CUE weight can be refreshed in
/// O(q^2) per candidate parameter.
struct GmmContext {
    YieldPanel panel;
    MomentSelector selector;
    MonomialBasis basis{3, 4};

    Vector m_T;               // selected sample moments
    Vector S1;                // sum over t=2..T of m_(t)
    Matrix S2;                // sum over t=2..T of m_(t) m_(t)'
    int lag_count = 0;        // T - 1
    double mbar_shortest = 0; // sample mean of the shortest-maturity yield

    TimeGrid grid;
    std::vector<double> maturities;
    int p_dim = 23;           // parameter dimension implied by the selector

    double temperature_T() const { return static_cast<double>(panel.T()); }
};

/// Builds the context.  `parallel` switches the per-date accumulation to the
/// chunk-deterministic OpenMP kernel (identical results either way).
GmmContext make_gmm_context(YieldPanel panel, MomentSelector selector,
                            int grid_segments = 2000, bool parallel = true);

/// Serial reference for the per-date accumulation; kept for testing and the
/// kernel benchmark.
void accumulate_sample_moments_serial(GmmContext& ctx);
void accumulate_sample_moments_parallel(GmmContext& ctx);

/// mu(theta) for the selected conditions; nullopt when the pricing ODEs or
/// the stationary solve fail.
std::optional<Vector> selected_moments(const GmmContext& ctx, const ParamVector& p);

/// Q_T = h' C h with h = m_T - mu.  +infinity when mu(theta) is unavailable.
double distance(const ParamVector& p, const GmmContext& ctx, const Matrix& C);

/// Lambda_T(theta) = (1/(T-1)) sum h_(t) h_(t)' evaluated via the cached
/// sums; `ridged` reports whether the stabilizing ridge was applied.
Matrix cue_lambda(const GmmContext& ctx, const Vector& mu);
Matrix cue_weight(const GmmContext& ctx, const Vector& mu, bool* ridged = nullptr);

/// (H' Lambda^{-1} H)^{-1} with scale equilibration; throws numerical_error
/// when the system is rank deficient beyond repair.
Matrix sandwich_covariance(const Matrix& H, const Matrix& lambda);

/// Classical GMM covariance (H' Lambda^{-1} H)^{-1} at theta_hat with a
/// central finite-difference Jacobian (relative step 1e-5, floor 1e-7).
Matrix standard_covariance(const ParamVector& theta_hat, const GmmContext& ctx);

/// The finite-difference Jacobian of mu(theta) used above.
Matrix moment_jacobian(const ParamVector& theta_hat, const GmmContext& ctx);

struct WaldResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// W = T r'(R V R')^{-1} r with a chi-square(r) p-value.
WaldResult wald(const Vector& r_value, const Matrix& R, const Matrix& V, double T);

} // namespace atsm
