#include "atsm/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace atsm {

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ResultReport build_report(const ChainTrace& trace, const SamplerConfig& cfg,
                          double sample_size, ChainVariance convention,
                          const RunProvenance& prov) {
    ResultReport rep;
    rep.est = estimate(trace, cfg);
    const int p_dim = static_cast<int>(trace.draws.cols());
    rep.theta_test = wald_from_chain(trace, cfg.burnin, theta_contrast_matrix(p_dim),
                                     sample_size, convention);
    try {
        rep.beta_test = wald_from_chain(trace, cfg.burnin, beta_contrast_matrix(p_dim),
                                        sample_size, convention);
        rep.beta_test_valid = true;
    } catch (const numerical_error&) {
        rep.beta_test_valid = false;
    }
    for (int k = 0; k < 5; ++k)
        rep.block_acceptance[static_cast<size_t>(k)] =
            trace.block_totals[static_cast<size_t>(k)] > 0
                ? static_cast<double>(trace.block_accepts[static_cast<size_t>(k)]) /
                      static_cast<double>(trace.block_totals[static_cast<size_t>(k)])
                : 0.0;
    rep.rj_acceptance = trace.rj_attempts > 0
                            ? static_cast<double>(trace.rj_accepts) /
                                  static_cast<double>(trace.rj_attempts)
                            : 0.0;
    rep.s1_occupancy = rep.est.s1_occupancy;
    rep.final_qt = trace.qt(trace.qt.size() - 1);
    rep.provenance = prov;
    return rep;
}

std::string ResultReport::human() const {
    std::ostringstream os;
    char line[160];
    os << "parameter        estimate     bm.se        chain.sd\n";
    for (int j = 0; j < est.theta_hat.dim(); ++j) {
        std::snprintf(line, sizeof(line), "%-12s %12.6f %12.6f %12.6f\n",
                      ParamVector::coord_name(j), est.theta_hat.get(j), est.mc_se(j),
                      est.sd_chain(j));
        os << line;
    }
    std::snprintf(line, sizeof(line),
                  "wald thetaQ=thetaP : contrast %.6f  W = %.5f  p = %.5f\n",
                  theta_test.contrast(0), theta_test.statistic, theta_test.p_value);
    os << line;
    if (beta_test_valid) {
        std::snprintf(line, sizeof(line), "wald betaQ=betaP   : W = %.5f  p = %.5f\n",
                      beta_test.statistic, beta_test.p_value);
        os << line;
    } else {
        os << "wald betaQ=betaP   : unavailable (rank-deficient contrast covariance)\n";
    }
    os << "block acceptance   :";
    for (double a : block_acceptance) {
        std::snprintf(line, sizeof(line), " %.3f", a);
        os << line;
    }
    os << "\n";
    std::snprintf(line, sizeof(line), "rj acceptance      : %.3f\n", rj_acceptance);
    os << line;
    std::snprintf(line, sizeof(line), "s1 occupancy       : %.3f\n", s1_occupancy);
    os << line;
    std::snprintf(line, sizeof(line), "final Q_T          : %.6g\n", final_qt);
    os << line;
    os << "seed               : " << provenance.seed << "\n";
    os << "config hash        : " << provenance.config_hash << "\n";
    return os.str();
}

std::string ResultReport::machine() const {
    nlohmann::json j;
    for (int k = 0; k < est.theta_hat.dim(); ++k) {
        const char* name = ParamVector::coord_name(k);
        j["estimate"][name] = est.theta_hat.get(k);
        j["bm_se"][name] = est.mc_se(k);
        j["chain_sd"][name] = est.sd_chain(k);
    }
    j["wald_theta"]["contrast"] = theta_test.contrast(0);
    j["wald_theta"]["W"] = theta_test.statistic;
    j["wald_theta"]["p"] = theta_test.p_value;
    if (beta_test_valid) {
        j["wald_beta"]["W"] = beta_test.statistic;
        j["wald_beta"]["p"] = beta_test.p_value;
    }
    for (size_t k = 0; k < block_acceptance.size(); ++k)
        j["diagnostics"]["block_acceptance"].push_back(block_acceptance[k]);
    j["diagnostics"]["rj_acceptance"] = rj_acceptance;
    j["diagnostics"]["s1_occupancy"] = s1_occupancy;
    j["diagnostics"]["final_qt"] = final_qt;
    j["provenance"]["seed"] = provenance.seed;
    j["provenance"]["config_hash"] = provenance.config_hash;
    return j.dump(2) + "\n";
}

void write_trace_csv(const std::string& path, const ChainTrace& trace) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_trace_csv: cannot open " + path);
    const int p_dim = static_cast<int>(trace.draws.cols());
    os << "m,state,qt";
    for (int j = 0; j < p_dim; ++j) os << "," << ParamVector::coord_name(j);
    os << "\n";
    char buf[40];
    for (int m = 0; m < trace.draws.rows(); ++m) {
        os << (m + 1) << "," << (trace.s1[static_cast<size_t>(m)] ? "s1" : "s2");
        std::snprintf(buf, sizeof(buf), "%.17g", trace.qt(m));
        os << "," << buf;
        for (int j = 0; j < p_dim; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", trace.draws(m, j));
            os << "," << buf;
        }
        os << "\n";
    }
    if (!os) throw std::runtime_error("write_trace_csv: write failed for " + path);
}

ChainTrace read_trace_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_trace_csv: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("read_trace_csv: empty file");
    int p_dim = -3;
    for (char c : line)
        if (c == ',') ++p_dim;
    if (p_dim != 23 && p_dim != 24)
        throw std::runtime_error("read_trace_csv: unexpected column count");

    std::vector<double> values;
    std::vector<std::uint8_t> flags;
    std::vector<double> qts;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ','); // m
        std::getline(row, cell, ',');
        flags.push_back(cell == "s1" ? 1 : 0);
        std::getline(row, cell, ',');
        qts.push_back(std::stod(cell));
        for (int j = 0; j < p_dim; ++j) {
            if (!std::getline(row, cell, ','))
                throw std::runtime_error("read_trace_csv: short row");
            values.push_back(std::stod(cell));
        }
    }
    const int n = static_cast<int>(flags.size());
    if (n == 0) throw std::runtime_error("read_trace_csv: no draws");
    ChainTrace trace;
    trace.with_sigma4 = p_dim == 24;
    trace.draws = Matrix(n, p_dim);
    for (int m = 0; m < n; ++m)
        for (int j = 0; j < p_dim; ++j)
            trace.draws(m, j) = values[static_cast<size_t>(m) * p_dim + j];
    trace.s1 = std::move(flags);
    trace.qt = Eigen::Map<Vector>(qts.data(), n);
    return trace;
}

} // namespace atsm
