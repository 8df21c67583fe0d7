#pragma once

#include <cstdint>
#include <string>

#include "atsm/qbayes.hpp"

namespace atsm {

/// FNV-1a over bytes; used to stamp outputs with a config fingerprint.
std::uint64_t fnv1a(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

struct RunProvenance {
    std::uint64_t seed = 0;
    std::string config_hash;
};

struct ResultReport {
    EstimateResult est;
    ChainWald theta_test;
    ChainWald beta_test;
    bool beta_test_valid = false;
    std::array<double, 5> block_acceptance{};
    double rj_acceptance = 0.0;
    double s1_occupancy = 0.0;
    double final_qt = 0.0;
    RunProvenance provenance;

    /// Human-readable table.
    std::string human() const;
    /// Machine-readable structured text (JSON) with the same content.
    std::string machine() const;
};

ResultReport build_report(const ChainTrace& trace, const SamplerConfig& cfg,
                          double sample_size, ChainVariance convention,
                          const RunProvenance& prov);

/// Trace CSV: columns m, state_flag, Q_T, then the parameter coordinates in
/// reporting order.  Values round-trip bit-exactly.
void write_trace_csv(const std::string& path, const ChainTrace& trace);
ChainTrace read_trace_csv(const std::string& path);

} // namespace atsm
