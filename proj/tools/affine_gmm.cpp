// Command-line front end for the affine term-structure GMM toolkit:
// simulate synthetic yield panels, print moment catalogues, run the
// quasi-Bayesian estimator, test market-price-of-risk restrictions, and fan
// replication sweeps out over workers.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <omp.h>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "atsm/gmm.hpp"
#include "atsm/parallel.hpp"
#include "atsm/qbayes.hpp"
#include "atsm/report.hpp"
#include "atsm/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace atsm;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string model = "A1(3)";
    std::string params_path;
    std::vector<double> maturities;
    std::string units;
    std::string selector = "default27";
    std::string data_path;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    int T = 500;
    int substeps = 1000;
    int sim_burnin = 500;
    int grid_points = 2000;
    std::string preset = "desk";
    SamplerConfig sampler;
    std::string wald_variance = "batch_means";
    int replications = 50;
    std::vector<double> alphas{0.01, 0.05, 0.10};

    json raw;
    std::string config_hash;
};

std::string slurp(const std::string& path, const char* what) {
    std::ifstream is(path);
    if (!is) throw DataError(std::string("cannot open ") + what + ": " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    json j;
    try {
        j = json::parse(slurp(path, "config"));
    } catch (const DataError&) {
        throw ConfigError("cannot open config: " + path);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    cfg.raw = j;
    auto get_or = [&](const char* key, auto fallback) {
        using T = decltype(fallback);
        return j.contains(key) ? j.at(key).get<T>() : fallback;
    };
    cfg.model = get_or("model", std::string("A1(3)"));
    if (cfg.model != "A1(3)") throw ConfigError("model: only the A1(3) preset is exposed");
    if (!j.contains("units"))
        throw ConfigError("units: an explicit declaration is required (\"percent\" or \"decimal\")");
    cfg.units = j.at("units").get<std::string>();
    if (cfg.units != "percent" && cfg.units != "decimal")
        throw ConfigError("units must be \"percent\" or \"decimal\"");
    cfg.params_path = get_or("params", std::string());
    if (j.contains("maturities")) cfg.maturities = j.at("maturities").get<std::vector<double>>();
    cfg.selector = get_or("selector", std::string("default27"));
    cfg.data_path = get_or("data", std::string());
    cfg.out_dir = get_or("out", std::string("."));
    cfg.seed = get_or("seed", std::uint64_t{1});
    cfg.T = get_or("T", 500);
    cfg.substeps = get_or("substeps", 1000);
    cfg.sim_burnin = get_or("sim_burnin", 500);
    cfg.grid_points = get_or("grid_points", 2000);
    cfg.preset = get_or("preset", std::string("desk"));
    cfg.wald_variance = get_or("wald_variance", std::string("batch_means"));
    cfg.replications = get_or("replications", 50);
    if (j.contains("alphas")) cfg.alphas = j.at("alphas").get<std::vector<double>>();

    if (cfg.preset == "desk")
        cfg.sampler = desk_profile();
    else if (cfg.preset == "paper")
        cfg.sampler = SamplerConfig{};
    else
        throw ConfigError("preset must be \"desk\" or \"paper\"");
    if (j.contains("sampler")) {
        const json& s = j.at("sampler");
        auto pick = [&](const char* key, auto& field) {
            if (s.contains(key)) field = s.at(key).get<std::decay_t<decltype(field)>>();
        };
        pick("n_starts", cfg.sampler.n_starts);
        pick("n_draws", cfg.sampler.n_draws);
        pick("burnin", cfg.sampler.burnin);
        pick("c_theta", cfg.sampler.c_theta);
        pick("rw_scale", cfg.sampler.rw_scale);
        pick("big_move_prob", cfg.sampler.big_move_prob);
        pick("big_move_scale", cfg.sampler.big_move_scale);
        pick("rw_abs_floor", cfg.sampler.rw_abs_floor);
        pick("rj_prob", cfg.sampler.rj_prob);
        pick("p_s1", cfg.sampler.p_s1);
        pick("tie_prob", cfg.sampler.tie_prob);
        pick("sigma_u", cfg.sampler.sigma_u);
        pick("sigma_ugamma", cfg.sampler.sigma_ugamma);
        pick("rj_update_gamma0", cfg.sampler.rj_update_gamma0);
    }
    if (cfg.wald_variance != "batch_means" && cfg.wald_variance != "draws")
        throw ConfigError("wald_variance must be \"batch_means\" or \"draws\"");
    return cfg;
}

void finalize_config(RunConfig& cfg) {
    json canon = cfg.raw;
    canon["seed"] = cfg.seed;
    canon["out"] = cfg.out_dir;
    canon["preset"] = cfg.preset;
    canon["selector"] = cfg.selector;
    std::string material = canon.dump();
    if (!cfg.params_path.empty()) material += "\n" + slurp(cfg.params_path, "params file");
    cfg.config_hash = hash_hex(fnv1a(material));
}

ParamVector load_params(const RunConfig& cfg) {
    if (cfg.params_path.empty()) throw ConfigError("params: a parameter file is required");
    try {
        return ParamVector::parse(slurp(cfg.params_path, "params file"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("params file: ") + e.what());
    }
}

MomentSelector load_selector(const RunConfig& cfg, int M) {
    if (cfg.selector == "default27") return MomentSelector::default27(M);
    try {
        return MomentSelector::parse(slurp(cfg.selector, "selector file"), M);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("selector: ") + e.what());
    }
}

ChainVariance wald_convention(const RunConfig& cfg) {
    return cfg.wald_variance == "draws" ? ChainVariance::Draws : ChainVariance::BatchMeansMean;
}

void ensure_out_dir(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw DataError("cannot create output directory " + cfg.out_dir);
}

void check_maturities_match(const RunConfig& cfg, const YieldPanel& panel) {
    if (cfg.maturities.empty()) return;
    if (cfg.maturities.size() != panel.maturities.size())
        throw ConfigError("maturities: config and data column counts differ");
    for (size_t l = 0; l < cfg.maturities.size(); ++l) {
        const double a = cfg.maturities[l], b = panel.maturities[l];
        if (std::fabs(a - b) > 1e-3 * std::max(1.0, std::fabs(a)))
            throw ConfigError("maturities: config and data disagree at column " +
                              std::to_string(l + 1));
    }
}

json meta_block(const RunConfig& cfg) {
    json meta;
    meta["units"] = cfg.units;
    meta["seed"] = cfg.seed;
    meta["config_hash"] = cfg.config_hash;
    return meta;
}

// ---------------------------------------------------------------------------

int cmd_simulate(RunConfig cfg) {
    finalize_config(cfg);
    ensure_out_dir(cfg);
    ParamVector truth = load_params(cfg);
    auto admissible = check_admissibility(truth);
    auto stationary = check_stationarity(truth);
    if (!admissible.ok() || !stationary.ok()) {
        std::cerr << "invalid parameters:\n";
        for (const auto& name : admissible.failures()) std::cerr << "  " << name << "\n";
        for (const auto& name : stationary.failures()) std::cerr << "  " << name << "\n";
        return kExitConfig;
    }
    if (cfg.maturities.empty()) throw ConfigError("maturities: required for simulate");

    SimConfig sim;
    sim.T = cfg.T;
    sim.substeps = cfg.substeps;
    sim.burnin = cfg.sim_burnin;
    sim.seed = cfg.seed;
    YieldPanel panel = simulate_panel(truth, cfg.maturities, sim, cfg.grid_points);

    const std::string panel_path = cfg.out_dir + "/panel.csv";
    write_panel_csv(panel_path, panel);
    {
        std::ofstream os(cfg.out_dir + "/truth.params");
        os << truth.serialize();
    }
    json meta = meta_block(cfg);
    meta["T"] = cfg.T;
    meta["substeps"] = cfg.substeps;
    meta["sim_burnin"] = cfg.sim_burnin;
    meta["maturities"] = cfg.maturities;
    std::ofstream(cfg.out_dir + "/panel.meta.json") << meta.dump(2) << "\n";
    std::cout << "wrote " << panel_path << " (" << panel.T() << " x " << panel.M() << ")\n";
    return 0;
}

int cmd_moments(RunConfig cfg) {
    finalize_config(cfg);
    ParamVector p = load_params(cfg);
    std::vector<double> mats = cfg.maturities;
    std::optional<YieldPanel> panel;
    if (!cfg.data_path.empty()) {
        int dropped = 0;
        panel = read_panel_csv(cfg.data_path, &dropped);
        if (dropped > 0) std::cerr << "dropped " << dropped << " incomplete rows\n";
        if (mats.empty()) mats = panel->maturities;
        check_maturities_match(cfg, *panel);
    }
    if (mats.empty()) throw ConfigError("maturities: required (directly or via data)");
    const int M = static_cast<int>(mats.size());

    MomentSelector sel = load_selector(cfg, M);
    std::set<std::string> selected;
    for (const auto& l : sel.labels) selected.insert(to_string(l));

    MonomialBasis basis(3, 4);
    TimeGrid grid = TimeGrid::build(mats, cfg.grid_points);
    MomentContext ctx;
    ctx.basis = &basis;
    ctx.loadings = yield_loadings(p.q_spec(), mats, grid);
    GeneratorMatrix gen = build_generator(p.p_spec(), basis);
    ctx.expA = matrix_exponential(gen.A, 1.0);
    ctx.statm = stationary_moments(gen).m;
    ctx.noise.sigma2 = p.sigma2_eps;
    ctx.noise.sigma4 = p.sigma4_eps;

    std::optional<GmmContext> sample_ctx;
    if (panel) {
        MomentSelector all;
        all.labels = full_catalogue_labels(M);
        sample_ctx = make_gmm_context(*panel, all, cfg.grid_points);
    }

    std::printf("%-16s %14s %14s  %s\n", "moment", "model", panel ? "sample" : "", "sel");
    const auto labels = full_catalogue_labels(M);
    for (size_t k = 0; k < labels.size(); ++k) {
        const std::string name = to_string(labels[k]);
        std::string model_value = "n/a";
        try {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%14.8f", evaluate_moment(ctx, labels[k]));
            model_value = buf;
        } catch (const std::invalid_argument&) {
            // fourth moment of the noise not supplied: leave n/a
        }
        std::string sample_value;
        if (sample_ctx) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%14.8f", sample_ctx->m_T(static_cast<int>(k)));
            sample_value = buf;
        }
        std::printf("%-16s %14s %14s  %s\n", name.c_str(), model_value.c_str(),
                    sample_value.c_str(), selected.count(name) ? "*" : "");
    }
    return 0;
}

struct EstimationOutput {
    ResultReport report;
    ChainTrace trace;
};

EstimationOutput run_estimation(const RunConfig& cfg, const YieldPanel& panel) {
    MomentSelector sel = load_selector(cfg, panel.M());
    GmmContext ctx = make_gmm_context(panel, sel, cfg.grid_points);
    GmmObjective obj(ctx);
    ParamVector center = load_params(cfg);

    SamplerConfig sampler = cfg.sampler;
    sampler.seed = cfg.seed;
    Rng rng(cfg.seed ^ 0xa5a5a5a5ull);
    ParamVector start = multistart(obj, center, sampler, rng);
    ChainTrace trace = run_chain(obj, start, sampler);

    RunProvenance prov{cfg.seed, cfg.config_hash};
    EstimationOutput out{
        build_report(trace, sampler, ctx.temperature_T(), wald_convention(cfg), prov),
        std::move(trace)};
    return out;
}

int cmd_estimate(RunConfig cfg) {
    finalize_config(cfg);
    ensure_out_dir(cfg);
    if (cfg.data_path.empty()) throw ConfigError("data: a panel CSV is required for estimate");
    int dropped = 0;
    YieldPanel panel = read_panel_csv(cfg.data_path, &dropped);
    if (dropped > 0) std::cerr << "dropped " << dropped << " incomplete rows\n";
    check_maturities_match(cfg, panel);

    EstimationOutput out = run_estimation(cfg, panel);
    std::ofstream(cfg.out_dir + "/report.txt") << out.report.human();
    std::ofstream(cfg.out_dir + "/report.json") << out.report.machine();
    write_trace_csv(cfg.out_dir + "/trace.csv", out.trace);
    std::cout << out.report.human();
    return 0;
}

int cmd_test(RunConfig cfg, const std::string& trace_path, const std::string& restriction) {
    finalize_config(cfg);
    ChainTrace trace = read_trace_csv(trace_path);
    const int p_dim = static_cast<int>(trace.draws.cols());
    Matrix R = restriction == "beta" ? beta_contrast_matrix(p_dim) : theta_contrast_matrix(p_dim);
    ChainWald w = wald_from_chain(trace, cfg.sampler.burnin, R, static_cast<double>(cfg.T),
                                  wald_convention(cfg));
    json j;
    j["restriction"] = restriction;
    j["W"] = w.statistic;
    j["p"] = w.p_value;
    for (int k = 0; k < w.contrast.size(); ++k) j["contrast"].push_back(w.contrast(k));
    j["provenance"]["config_hash"] = cfg.config_hash;
    std::cout << j.dump(2) << "\n";
    if (!cfg.out_dir.empty()) {
        ensure_out_dir(cfg);
        std::ofstream(cfg.out_dir + "/test_" + restriction + ".json") << j.dump(2) << "\n";
    }
    return 0;
}

int cmd_sweep(RunConfig cfg) {
    finalize_config(cfg);
    ensure_out_dir(cfg);
    ParamVector truth = load_params(cfg);
    if (cfg.maturities.empty()) throw ConfigError("maturities: required for sweep");
    const int L = cfg.replications;

    struct Row {
        bool ok = false;
        std::string error;
        double theta_q = 0, theta_p = 0, W = 0, p = 1, s1 = 0, qt = 0;
    };
    std::vector<Row> rows(static_cast<size_t>(L));

    const int cap = worker_count();
    if (cap > 0) omp_set_num_threads(cap);

#pragma omp parallel for schedule(dynamic)
    for (int l = 0; l < L; ++l) {
        Row row;
        try {
            RunConfig local = cfg;
            local.seed = cfg.seed + 1000003ull * static_cast<std::uint64_t>(l);
            SimConfig sim;
            sim.T = local.T;
            sim.substeps = local.substeps;
            sim.burnin = local.sim_burnin;
            sim.seed = local.seed;
            YieldPanel panel = simulate_panel(truth, local.maturities, sim, local.grid_points);
            EstimationOutput out = run_estimation(local, panel);
            row.ok = true;
            row.theta_q = out.report.est.theta_hat.thetaQ;
            row.theta_p = out.report.est.theta_hat.thetaP;
            row.W = out.report.theta_test.statistic;
            row.p = out.report.theta_test.p_value;
            row.s1 = out.report.s1_occupancy;
            row.qt = out.report.final_qt;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows[static_cast<size_t>(l)] = row;
    }

    std::ofstream csv(cfg.out_dir + "/sweep.csv");
    csv << "replication,seed,thetaQ,thetaP,W,p,s1_occupancy,final_qt,status\n";
    int ok_count = 0;
    std::vector<double> pvals;
    for (int l = 0; l < L; ++l) {
        const Row& row = rows[static_cast<size_t>(l)];
        csv << l << "," << (cfg.seed + 1000003ull * static_cast<std::uint64_t>(l)) << ",";
        if (row.ok) {
            ++ok_count;
            pvals.push_back(row.p);
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%.8g,%.8g,%.8g,%.8g,%.4f,%.6g,ok", row.theta_q,
                          row.theta_p, row.W, row.p, row.s1, row.qt);
            csv << buf << "\n";
        } else {
            csv << ",,,,,,error: " << row.error << "\n";
        }
    }

    json summary = meta_block(cfg);
    summary["replications"] = L;
    summary["completed"] = ok_count;
    for (double alpha : cfg.alphas) {
        int reject = 0;
        for (double p : pvals) reject += p < alpha;
        summary["rejection_rate"][std::to_string(alpha)] =
            ok_count > 0 ? static_cast<double>(reject) / ok_count : 0.0;
    }
    std::ofstream(cfg.out_dir + "/sweep_summary.json") << summary.dump(2) << "\n";
    std::cout << summary.dump(2) << "\n";
    return ok_count == L ? 0 : kExitNumerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Affine term-structure GMM estimation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_flag;
    std::optional<std::string> out_flag, preset_flag, selector_flag;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--seed", seed_flag, "override the config seed");
    app.add_option("--out", out_flag, "override the output directory");
    app.add_option("--preset", preset_flag, "sampler profile: desk or paper");
    app.add_option("--selector", selector_flag, "moment selector: default27 or a file path");

    auto* sim = app.add_subcommand("simulate", "simulate a synthetic yield panel");
    auto* mom = app.add_subcommand("moments", "print the moment catalogue");
    auto* est = app.add_subcommand("estimate", "run the quasi-Bayesian GMM estimator");
    auto* tst = app.add_subcommand("test", "Wald tests from a stored chain trace");
    std::string trace_path, restriction = "theta";
    tst->add_option("--trace", trace_path, "trace CSV from estimate")->required();
    tst->add_option("--restriction", restriction, "theta or beta")
        ->check(CLI::IsMember({"theta", "beta"}));
    auto* swp = app.add_subcommand("sweep", "replication sweep: simulate + estimate + test");
    std::optional<int> reps_flag;
    swp->add_option("--replications", reps_flag, "number of Monte-Carlo replications");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        if (seed_flag) cfg.seed = *seed_flag;
        if (out_flag) cfg.out_dir = *out_flag;
        if (preset_flag) {
            cfg.preset = *preset_flag;
            if (cfg.preset != "desk" && cfg.preset != "paper")
                throw ConfigError("preset must be \"desk\" or \"paper\"");
            cfg.sampler = cfg.preset == "paper" ? SamplerConfig{} : desk_profile();
        }
        if (selector_flag) cfg.selector = *selector_flag;
        if (reps_flag) cfg.replications = *reps_flag;

        if (sim->parsed()) return cmd_simulate(std::move(cfg));
        if (mom->parsed()) return cmd_moments(std::move(cfg));
        if (est->parsed()) return cmd_estimate(std::move(cfg));
        if (tst->parsed()) return cmd_test(std::move(cfg), trace_path, restriction);
        if (swp->parsed()) return cmd_sweep(std::move(cfg));
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
}
