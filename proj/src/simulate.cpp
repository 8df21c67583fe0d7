#include "atsm/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace atsm {

void SimConfig::validate() const {
    if (T < 2) throw std::invalid_argument("SimConfig: T must be >= 2");
    if (substeps < 100) throw std::invalid_argument("SimConfig: substeps must be >= 100");
    if (burnin < 0) throw std::invalid_argument("SimConfig: burnin must be >= 0");
}

Matrix simulate_latent(const DiffusionSpec& pspec, const Vector& start, const SimConfig& cfg) {
    pspec.validate();
    cfg.validate();
    if (start.size() != pspec.d) throw std::invalid_argument("simulate_latent: start dimension mismatch");

    const int d = pspec.d;
    const double dt = 1.0 / static_cast<double>(cfg.substeps);
    const double sqdt = std::sqrt(dt);

    // Number of square-root coordinates: those with zero constant term B0.
    // In canonical form these are the leading m coordinates.
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Matrix path(cfg.T, d);
    Vector x = start;
    const int total_dates = cfg.burnin + cfg.T;
    for (int date = 0; date < total_dates; ++date) {
        for (int s = 0; s < cfg.substeps; ++s) {
            Vector drift = pspec.b + pspec.beta * x;
            Vector xn = x;
            for (int i = 0; i < d; ++i) {
                double sii = pspec.B0(i);
                for (int j = 0; j < d; ++j) sii += pspec.Bx(j, i) * x(j);
                const double vol = pspec.Sigma(i) * std::sqrt(std::max(sii, 0.0));
                xn(i) += drift(i) * dt + vol * sqdt * gauss(rng);
            }
            // Keep the square-root coordinates inside the state space.
            for (int i = 0; i < d; ++i)
                if (pspec.B0(i) == 0.0 && xn(i) < 0.0) xn(i) = 0.0;
            x = xn;
            if (!x.allFinite())
                throw numerical_error("simulate_latent: path exploded at date " + std::to_string(date));
        }
        if (date >= cfg.burnin) path.row(date - cfg.burnin) = x.transpose();
    }
    return path;
}

YieldPanel simulate_panel(const ParamVector& p, const std::vector<double>& maturities,
                          const SimConfig& cfg, int grid_segments) {
    cfg.validate();
    TimeGrid grid = TimeGrid::build(maturities, grid_segments);
    YieldLoadings loadings = yield_loadings(p.q_spec(), maturities, grid);

    DiffusionSpec pspec = p.p_spec();
    Matrix path = simulate_latent(pspec, p.thetaP_vec(), cfg);

    // Separate stream for the observation noise so latent paths are
    // reproducible independent of M.
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double noise_sd = std::sqrt(p.sigma2_eps);

    YieldPanel panel;
    panel.maturities = maturities;
    panel.observations = Matrix(cfg.T, static_cast<int>(maturities.size()));
    panel.dates.resize(cfg.T);
    for (int t = 0; t < cfg.T; ++t) {
        Vector x = path.row(t).transpose();
        Vector y = loadings.PhiTilde + loadings.PsiTilde * x;
        for (int i = 0; i < y.size(); ++i) y(i) += noise_sd * gauss(rng);
        panel.observations.row(t) = y.transpose();
        char buf[16];
        std::snprintf(buf, sizeof(buf), "t%05d", t + 1);
        panel.dates[t] = buf;
    }
    return panel;
}

namespace {

std::string format_maturity(double tau) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", tau);
    return buf;
}

bool is_missing(const std::string& cell) {
    return cell.empty() || cell == "." || cell == "ND" || cell == "NA";
}

} // namespace

void write_panel_csv(const std::string& path, const YieldPanel& panel) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_panel_csv: cannot open " + path);
    os << "date";
    for (double tau : panel.maturities) os << ",tau_" << format_maturity(tau);
    os << "\n";
    char buf[40];
    for (int t = 0; t < panel.T(); ++t) {
        os << panel.dates[t];
        for (int i = 0; i < panel.M(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", panel.observations(t, i));
            os << "," << buf;
        }
        os << "\n";
    }
    if (!os) throw std::runtime_error("write_panel_csv: write failed for " + path);
}

YieldPanel read_panel_csv(const std::string& path, int* dropped_rows) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_panel_csv: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("read_panel_csv: empty file " + path);

    YieldPanel panel;
    {
        std::istringstream header(line);
        std::string cell;
        if (!std::getline(header, cell, ',') )
            throw std::runtime_error("read_panel_csv: malformed header");
        while (std::getline(header, cell, ',')) {
            if (cell.rfind("tau_", 0) == 0) cell = cell.substr(4);
            panel.maturities.push_back(std::stod(cell));
        }
    }
    const int M = static_cast<int>(panel.maturities.size());
    if (M == 0) throw std::runtime_error("read_panel_csv: no maturity columns");

    std::vector<std::string> dates;
    std::vector<double> values;
    int dropped = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        std::string date = cell;
        std::vector<double> vals;
        bool bad = false;
        while (std::getline(row, cell, ',')) {
            if (is_missing(cell)) { bad = true; break; }
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                bad = true;
                break;
            }
        }
        if (bad || static_cast<int>(vals.size()) != M) {
            ++dropped;
            continue;
        }
        dates.push_back(date);
        values.insert(values.end(), vals.begin(), vals.end());
    }
    if (dropped_rows) *dropped_rows = dropped;
    const int T = static_cast<int>(dates.size());
    if (T == 0) throw std::runtime_error("read_panel_csv: no complete rows in " + path);
    panel.dates = std::move(dates);
    panel.observations = Matrix(T, M);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < M; ++i) panel.observations(t, i) = values[static_cast<size_t>(t) * M + i];
    return panel;
}

} // namespace atsm
