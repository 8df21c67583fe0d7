#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "atsm/generator.hpp"
#include "atsm/riccati.hpp"
#include "atsm/types.hpp"

namespace atsm {

/// Support classification per coordinate, used by the random-search
/// perturbation and the samplers' proposal bookkeeping.
enum class CoordSupport { Positive, Negative, Real };

/// Full A1(3) parameter vector in the frozen reporting order:
///   1 thetaQ, 2 thetaP,
///   3..9  betaQ (11, 21, 31, 22, 32, 23, 33),
///   10..16 betaP (same pattern),
///   17 Bx12, 18 Bx13, 19 gamma0,
///   20 Sigma1, 21 Sigma2, 22 Sigma3, 23 sigma2_eps, [24 sigma4_eps].
struct ParamVector {
    double thetaQ = 0.0;
    double thetaP = 0.0;
    std::array<double, 7> betaQ{};  // 11, 21, 31, 22, 32, 23, 33
    std::array<double, 7> betaP{};
    double Bx12 = 0.0;
    double Bx13 = 0.0;
    double gamma0 = 0.0;
    double Sigma1 = 0.0;
    double Sigma2 = 0.0;
    double Sigma3 = 0.0;
    double sigma2_eps = 0.0;
    std::optional<double> sigma4_eps;

    int dim() const { return sigma4_eps ? 24 : 23; }
    double get(int idx) const;             // 0-based
    void set(int idx, double value);
    Vector as_vector() const;
    static ParamVector from_vector(const Vector& v, bool with_sigma4);

    static const char* coord_name(int idx); // 0-based, stable names
    static CoordSupport coord_support(int idx);

    Matrix betaQ_matrix() const;
    Matrix betaP_matrix() const;
    Vector thetaQ_vec() const;              // (thetaQ, 0, 0)
    Vector thetaP_vec() const;
    Vector sigma_vec() const;
    Matrix bx_matrix() const;               // rows drive S_ii via columns

    /// Generator inputs under the empirical measure.
    DiffusionSpec p_spec() const;
    /// Pricing inputs under the risk-neutral measure.
    QSpec q_spec() const;

    /// Flat key=value text block, byte-stable round trip.
    std::string serialize() const;
    static ParamVector parse(const std::string& text);
};

/// b = -beta theta for theta with zero J-part.
Vector b_from_theta(const Matrix& beta, const Vector& theta);

struct ConstraintCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;
};

struct ConstraintReport {
    std::vector<ConstraintCheck> checks;

    bool ok() const;
    std::vector<std::string> failures() const;
};

/// Dai-Singleton admissibility and identification signs, both measures.
ConstraintReport check_admissibility(const ParamVector& p);

/// Boundary non-attainment b_i >= Sigma_i^2 / 2 for the square-root factor,
/// both measures.  Advisory; not part of the sampler's support.
ConstraintReport check_feller(const ParamVector& p);

/// All eigenvalues of betaP and betaQ must have real part < -1e-10.
ConstraintReport check_stationarity(const ParamVector& p);

/// Sampler support: box bounds, the short-rate level band
/// mbar/c <= gamma0 + thetaP <= c*mbar, admissibility and stationarity.
ConstraintReport in_theta0(const ParamVector& p, double shortest_yield_mean,
                           double c = 1.45);

} // namespace atsm
