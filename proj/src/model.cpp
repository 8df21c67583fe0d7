#include "atsm/model.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace atsm {

namespace {

constexpr std::array<const char*, 24> kNames = {
    "thetaQ", "thetaP",
    "betaQ11", "betaQ21", "betaQ31", "betaQ22", "betaQ32", "betaQ23", "betaQ33",
    "betaP11", "betaP21", "betaP31", "betaP22", "betaP32", "betaP23", "betaP33",
    "Bx12", "Bx13", "gamma0",
    "Sigma1", "Sigma2", "Sigma3", "sigma2eps", "sigma4eps"};

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

double ParamVector::get(int idx) const {
    switch (idx) {
        case 0: return thetaQ;
        case 1: return thetaP;
        case 2: case 3: case 4: case 5: case 6: case 7: case 8: return betaQ[idx - 2];
        case 9: case 10: case 11: case 12: case 13: case 14: case 15: return betaP[idx - 9];
        case 16: return Bx12;
        case 17: return Bx13;
        case 18: return gamma0;
        case 19: return Sigma1;
        case 20: return Sigma2;
        case 21: return Sigma3;
        case 22: return sigma2_eps;
        case 23:
            if (!sigma4_eps) break;
            return *sigma4_eps;
    }
    throw std::invalid_argument("ParamVector::get: index out of range");
}

void ParamVector::set(int idx, double value) {
    switch (idx) {
        case 0: thetaQ = value; return;
        case 1: thetaP = value; return;
        case 2: case 3: case 4: case 5: case 6: case 7: case 8: betaQ[idx - 2] = value; return;
        case 9: case 10: case 11: case 12: case 13: case 14: case 15: betaP[idx - 9] = value; return;
        case 16: Bx12 = value; return;
        case 17: Bx13 = value; return;
        case 18: gamma0 = value; return;
        case 19: Sigma1 = value; return;
        case 20: Sigma2 = value; return;
        case 21: Sigma3 = value; return;
        case 22: sigma2_eps = value; return;
        case 23:
            if (sigma4_eps) { sigma4_eps = value; return; }
            break;
    }
    throw std::invalid_argument("ParamVector::set: index out of range");
}

Vector ParamVector::as_vector() const {
    Vector v(dim());
    for (int i = 0; i < dim(); ++i) v(i) = get(i);
    return v;
}

ParamVector ParamVector::from_vector(const Vector& v, bool with_sigma4) {
    const int expect = with_sigma4 ? 24 : 23;
    if (v.size() != expect) throw std::invalid_argument("ParamVector::from_vector: length mismatch");
    ParamVector p;
    if (with_sigma4) p.sigma4_eps = 0.0;
    for (int i = 0; i < expect; ++i) p.set(i, v(i));
    return p;
}

const char* ParamVector::coord_name(int idx) {
    if (idx < 0 || idx >= static_cast<int>(kNames.size()))
        throw std::invalid_argument("ParamVector::coord_name: index out of range");
    return kNames[static_cast<size_t>(idx)];
}

CoordSupport ParamVector::coord_support(int idx) {
    switch (idx) {
        case 0: case 1:                  // thetaQ, thetaP
        case 3: case 4:                  // betaQ21, betaQ31
        case 10: case 11:                // betaP21, betaP31
        case 16: case 17:                // Bx12, Bx13
        case 19: case 20: case 21:       // Sigma
        case 22: case 23:                // noise moments
            return CoordSupport::Positive;
        case 2: case 5: case 8:          // betaQ diagonal
        case 9: case 12: case 15:        // betaP diagonal
            return CoordSupport::Negative;
        case 6: case 7: case 13: case 14: case 18:
            return CoordSupport::Real;
    }
    throw std::invalid_argument("ParamVector::coord_support: index out of range");
}

namespace {

Matrix beta_from_seven(const std::array<double, 7>& b) {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = b[0];
    m(1, 0) = b[1];
    m(2, 0) = b[2];
    m(1, 1) = b[3];
    m(2, 1) = b[4];
    m(1, 2) = b[5];
    m(2, 2) = b[6];
    return m;
}

} // namespace

Matrix ParamVector::betaQ_matrix() const { return beta_from_seven(betaQ); }
Matrix ParamVector::betaP_matrix() const { return beta_from_seven(betaP); }

Vector ParamVector::thetaQ_vec() const {
    Vector t = Vector::Zero(3);
    t(0) = thetaQ;
    return t;
}

Vector ParamVector::thetaP_vec() const {
    Vector t = Vector::Zero(3);
    t(0) = thetaP;
    return t;
}

Vector ParamVector::sigma_vec() const {
    Vector s(3);
    s << Sigma1, Sigma2, Sigma3;
    return s;
}

Matrix ParamVector::bx_matrix() const {
    Matrix bx = Matrix::Zero(3, 3);
    bx(0, 0) = 1.0;
    bx(0, 1) = Bx12;
    bx(0, 2) = Bx13;
    return bx;
}

Vector b_from_theta(const Matrix& beta, const Vector& theta) {
    if (beta.rows() != beta.cols() || beta.rows() != theta.size())
        throw std::invalid_argument("b_from_theta: dimension mismatch");
    return -beta * theta;
}

DiffusionSpec ParamVector::p_spec() const {
    DiffusionSpec s;
    s.d = 3;
    s.beta = betaP_matrix();
    s.b = b_from_theta(s.beta, thetaP_vec());
    s.Sigma = sigma_vec();
    s.B0 = Vector::Zero(3);
    s.B0(1) = 1.0;
    s.B0(2) = 1.0;
    s.Bx = bx_matrix();
    return s;
}

QSpec ParamVector::q_spec() const {
    QSpec q;
    q.d = 3;
    q.m = 1;
    q.betaQ = betaQ_matrix();
    q.bQ = b_from_theta(q.betaQ, thetaQ_vec());
    q.Sigma = sigma_vec();
    q.Bx = bx_matrix();
    q.gamma0 = gamma0;
    q.gammax = Vector::Ones(3);
    return q;
}

std::string ParamVector::serialize() const {
    std::ostringstream os;
    for (int i = 0; i < dim(); ++i)
        os << coord_name(i) << "=" << format_double(get(i)) << "\n";
    return os.str();
}

ParamVector ParamVector::parse(const std::string& text) {
    std::map<std::string, double> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("ParamVector::parse: malformed line '" + line + "'");
        std::string key = line.substr(0, eq);
        kv[key] = std::stod(line.substr(eq + 1));
    }
    ParamVector p;
    if (kv.count("sigma4eps")) p.sigma4_eps = 0.0;
    for (int i = 0; i < p.dim(); ++i) {
        auto it = kv.find(coord_name(i));
        if (it == kv.end())
            throw std::invalid_argument(std::string("ParamVector::parse: missing key ") + coord_name(i));
        p.set(i, it->second);
        kv.erase(it);
    }
    if (!kv.empty())
        throw std::invalid_argument("ParamVector::parse: unknown key " + kv.begin()->first);
    return p;
}

bool ConstraintReport::ok() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::vector<std::string> ConstraintReport::failures() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
        if (!c.pass) out.push_back(c.name);
    return out;
}

ConstraintReport check_admissibility(const ParamVector& p) {
    ConstraintReport r;
    auto add = [&](const std::string& name, bool pass, double value) {
        r.checks.push_back({name, pass, value});
    };
    add("thetaQ >= 0", p.thetaQ >= 0.0, p.thetaQ);
    add("thetaP >= 0", p.thetaP >= 0.0, p.thetaP);
    add("betaQ11 < 0", p.betaQ[0] < 0.0, p.betaQ[0]);
    add("betaP11 < 0", p.betaP[0] < 0.0, p.betaP[0]);
    add("betaQ21 >= 0", p.betaQ[1] >= 0.0, p.betaQ[1]);
    add("betaQ31 >= 0", p.betaQ[2] >= 0.0, p.betaQ[2]);
    add("betaP21 >= 0", p.betaP[1] >= 0.0, p.betaP[1]);
    add("betaP31 >= 0", p.betaP[2] >= 0.0, p.betaP[2]);
    add("Bx12 >= 0", p.Bx12 >= 0.0, p.Bx12);
    add("Bx13 >= 0", p.Bx13 >= 0.0, p.Bx13);
    add("Sigma1 > 0", p.Sigma1 > 0.0, p.Sigma1);
    add("Sigma2 > 0", p.Sigma2 > 0.0, p.Sigma2);
    add("Sigma3 > 0", p.Sigma3 > 0.0, p.Sigma3);
    add("betaQ_II thetaQ_I < 0", p.betaQ[0] * p.thetaQ < 0.0, p.betaQ[0] * p.thetaQ);
    add("betaP_II thetaP_I < 0", p.betaP[0] * p.thetaP < 0.0, p.betaP[0] * p.thetaP);
    return r;
}

ConstraintReport check_feller(const ParamVector& p) {
    ConstraintReport r;
    const double bQ1 = -p.betaQ[0] * p.thetaQ;
    const double bP1 = -p.betaP[0] * p.thetaP;
    const double bound = 0.5 * p.Sigma1 * p.Sigma1;
    r.checks.push_back({"bQ1 >= Sigma1^2/2", bQ1 >= bound, bQ1});
    r.checks.push_back({"bP1 >= Sigma1^2/2", bP1 >= bound, bP1});
    return r;
}

namespace {

double max_real_eigenvalue(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw numerical_error("check_stationarity: eigen solver failed");
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m.rows(); ++i) worst = std::max(worst, es.eigenvalues()(i).real());
    return worst;
}

} // namespace

ConstraintReport check_stationarity(const ParamVector& p) {
    ConstraintReport r;
    const double wq = max_real_eigenvalue(p.betaQ_matrix());
    const double wp = max_real_eigenvalue(p.betaP_matrix());
    r.checks.push_back({"Re eig(betaQ) < 0", wq < -1e-10, wq});
    r.checks.push_back({"Re eig(betaP) < 0", wp < -1e-10, wp});
    return r;
}

ConstraintReport in_theta0(const ParamVector& p, double shortest_yield_mean, double c) {
    if (!(shortest_yield_mean > 0.0))
        throw std::invalid_argument("in_theta0: shortest yield mean must be > 0");
    ConstraintReport r = check_admissibility(p);
    {
        ConstraintReport s = check_stationarity(p);
        r.checks.insert(r.checks.end(), s.checks.begin(), s.checks.end());
    }
    auto add = [&](const std::string& name, bool pass, double value) {
        r.checks.push_back({name, pass, value});
    };
    auto in_band = [&](const std::string& name, double v, double lo, double hi) {
        add(name, v >= lo && v <= hi, v);
    };
    in_band("Sigma1 in [0.1,2]", p.Sigma1, 0.1, 2.0);
    in_band("Sigma2 in [0.1,2]", p.Sigma2, 0.1, 2.0);
    in_band("Sigma3 in [0.1,2]", p.Sigma3, 0.1, 2.0);
    in_band("Bx12 in [0,2]", p.Bx12, 0.0, 2.0);
    in_band("Bx13 in [0,2]", p.Bx13, 0.0, 2.0);
    in_band("sigma2eps in [0.005,0.025]", p.sigma2_eps, 0.005, 0.025);
    if (p.sigma4_eps)
        in_band("sigma4eps in [2.5e-5,1.875e-3]", *p.sigma4_eps, 2.5e-5, 1.875e-3);
    const int diag_idx[6] = {2, 5, 8, 9, 12, 15};
    for (int idx : diag_idx)
        in_band(std::string(ParamVector::coord_name(idx)) + " in [-50,-0.1]",
                p.get(idx), -50.0, -0.1);
    const int offdiag_idx[8] = {3, 4, 6, 7, 10, 11, 13, 14};
    for (int idx : offdiag_idx)
        in_band(std::string(ParamVector::coord_name(idx)) + " in [-10,10]",
                p.get(idx), -10.0, 10.0);
    const double level = p.gamma0 + p.thetaP;
    in_band("gamma0+thetaP short-rate band", level,
            shortest_yield_mean / c, c * shortest_yield_mean);
    return r;
}

} // namespace atsm
