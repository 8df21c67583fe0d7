#pragma once

#include <optional>
#include <string>
#include <vector>

#include "atsm/basis.hpp"
#include "atsm/riccati.hpp"
#include "atsm/types.hpp"

namespace atsm {

/// Observation-noise moments; sigma4 (the raw fourth moment of the noise) is
/// needed only when fourth powers of a single yield are evaluated.
struct NoiseSpec {
    double sigma2 = 0.0;
    std::optional<double> sigma4;

    void validate() const;
};

/// Families of observed-yield moments.  Indices are 1-based maturity slots.
///   Ey i        : E(y_i)
///   Eyy i j     : E(y_i y_j), i <= j
///   Ey2y i j    : E(y_i^2 y_j)   (i == j gives the third moment)
///   Eyy2 i j    : E(y_i y_j^2), i != j
///   Ey2y2 i j   : E(y_i^2 y_j^2), i <= j  (i == j gives the fourth moment)
///   Eylag i     : E(y_{t,i} y_{t-1,i})
///   Ey2y2lag i  : E(y_{t,i}^2 y_{t-1,i}^2)
enum class MomentKind { Ey, Eyy, Ey2y, Eyy2, Ey2y2, Eylag, Ey2y2lag };

struct MomentLabel {
    MomentKind kind;
    int i = 0;
    int j = 0;

    bool operator==(const MomentLabel&) const = default;
};

std::string to_string(const MomentLabel& label);
MomentLabel parse_moment_label(const std::string& line);

/// Whether a label involves fourth powers of one yield (requires sigma4).
bool needs_sigma4(const MomentLabel& label);
/// Highest degree of latent stationary moments the label consumes.
int required_degree(const MomentLabel& label);
/// Whether the label is a lag-1 product (1/(T-1) sample-average convention).
bool is_lag(const MomentLabel& label);

/// The frozen full catalogue order for M maturities.
std::vector<MomentLabel> full_catalogue_labels(int M);

/// Named values, in catalogue order.
struct MomentCatalogue {
    std::vector<MomentLabel> labels;
    Vector values;
};

/// Expansion coefficients of products of linear forms over the graded basis
/// blocks (the hand-derived d=3 vectors in matrix form, valid for any d):
///   m2'  E(x^2 block) = (Psi_i'X)(Psi_j'X) expectation,
///   m3a' E(x^3 block) = (Psi_i'X)^2 (Psi_j'X),
///   m3b' E(x^3 block) = (Psi_i'X)(Psi_j'X)^2,
///   m4'  E(x^4 block) = (Psi_i'X)^2 (Psi_j'X)^2.
struct MomentCoeffs {
    Vector m2;   // d2
    Vector m3a;  // d3
    Vector m3b;  // d3
    Vector m4;   // d4
};
MomentCoeffs moment_coeff_vectors(const Vector& psi_i, const Vector& psi_j,
                                  const MonomialBasis& basis);

/// Everything a catalogue evaluation needs.  `expA` is exp(dt A) for the
/// P-measure generator (only consumed by lag labels), `statm` the stationary
/// moment vector (blocks 1..p).
struct MomentContext {
    const MonomialBasis* basis = nullptr;
    YieldLoadings loadings;
    Vector statm;
    Matrix expA;
    NoiseSpec noise;
};

/// E(X_t^v (X_s^w)') as a d_v x d_w array of stationary cross-time moments,
/// with t - s = dt already folded into expA.  Columns of exp(dt A) beyond
/// degree v never enter (moment closure).
Matrix cross_time_moments(const MomentContext& ctx, int v, int w);

double evaluate_moment(const MomentContext& ctx, const MomentLabel& label);

MomentCatalogue evaluate_catalogue(const MomentContext& ctx,
                                   const std::vector<MomentLabel>& labels);

} // namespace atsm
