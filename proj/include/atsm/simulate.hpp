#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "atsm/model.hpp"
#include "atsm/types.hpp"

namespace atsm {

struct SimConfig {
    int T = 500;
    int substeps = 1000;      // Euler steps per unit observation interval
    std::uint64_t seed = 0;
    int burnin = 500;         // discarded observation dates

    void validate() const;
};

struct YieldPanel {
    std::vector<double> maturities;        // ascending
    Matrix observations;                   // T x M
    std::vector<std::string> dates;        // row labels

    int T() const { return static_cast<int>(observations.rows()); }
    int M() const { return static_cast<int>(observations.cols()); }
};

/// Euler-Maruyama path of the latent diffusion under the empirical measure,
/// full truncation inside the square roots and state truncation of the
/// square-root coordinate.  Starts at the drift fixed point, drops burn-in.
Matrix simulate_latent(const DiffusionSpec& pspec, const Vector& start, const SimConfig& cfg);

/// Synthetic observed-yield panel y_t = PhiTilde + PsiTilde X_t + eps_t with
/// iid Gaussian noise of variance sigma2_eps.
YieldPanel simulate_panel(const ParamVector& p, const std::vector<double>& maturities,
                          const SimConfig& cfg, int grid_segments = 2000);

/// Panel CSV: header "date,tau_<m1>,...", one row per date.
void write_panel_csv(const std::string& path, const YieldPanel& panel);

/// Reads a panel; rows with any unparseable/missing cell are dropped and
/// counted.  Recognized missing markers: empty, ".", "ND", "NA".
YieldPanel read_panel_csv(const std::string& path, int* dropped_rows = nullptr);

} // namespace atsm
