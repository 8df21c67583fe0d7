// Timing harness comparing the serial reference kernels against their
// OpenMP counterparts: per-date moment accumulation, the multistart scan,
// and batched latent-path simulation.

#include <chrono>
#include <cstdio>
#include <omp.h>
#include <random>
#include <vector>

#include "atsm/gmm.hpp"
#include "atsm/parallel.hpp"
#include "atsm/qbayes.hpp"
#include "atsm/simulate.hpp"

using namespace atsm;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

ParamVector reference_params() {
    ParamVector p;
    p.thetaQ = 10.0;
    p.thetaP = 1.5;
    p.betaQ = {-1.0, 0.2, 0.02, -1.0, 0.04, 0.0, -0.8};
    p.betaP = {-1.0, 0.02, 0.01, -0.7, 0.01, 0.0, -0.7};
    p.Bx12 = 0.1;
    p.Bx13 = 0.01;
    p.gamma0 = 2.0;
    p.Sigma1 = 0.7;
    p.Sigma2 = 1.0;
    p.Sigma3 = 0.8;
    p.sigma2_eps = 0.0067;
    return p;
}

const std::vector<double> kMaturities{1.0 / 12.0, 0.25, 0.5, 1.0, 2.0,
                                      3.0,        5.0,  7.0, 10.0, 20.0};

void report(const char* name, double serial, double parallel) {
    std::printf("%-28s serial %8.3f s   openmp %8.3f s   speedup %5.2fx\n", name, serial,
                parallel, serial / parallel);
}

} // namespace

int main() {
    const int cap = worker_count();
    if (cap > 0) omp_set_num_threads(cap);
    std::printf("threads: %d\n", omp_get_max_threads());

    ParamVector p = reference_params();

    // Kernel 1: per-date sample-moment accumulation over a long panel.
    {
        SimConfig cfg;
        cfg.T = 150000;
        cfg.substeps = 100;
        cfg.burnin = 100;
        cfg.seed = 5;
        YieldPanel panel = simulate_panel(p, kMaturities, cfg, 500);
        MomentSelector sel = MomentSelector::default27(10);

        GmmContext ctx;
        auto t0 = Clock::now();
        ctx = make_gmm_context(panel, sel, 500, /*parallel=*/false);
        const double serial = seconds_since(t0);
        t0 = Clock::now();
        GmmContext ctx2 = make_gmm_context(panel, sel, 500, /*parallel=*/true);
        const double par = seconds_since(t0);
        report("sample-moment accumulation", serial, par);
        if ((ctx.m_T - ctx2.m_T).cwiseAbs().maxCoeff() > 1e-10)
            std::printf("  WARNING: kernels disagree\n");
    }

    // Kernel 2: multistart objective scan.
    {
        SimConfig cfg;
        cfg.T = 500;
        cfg.substeps = 100;
        cfg.burnin = 100;
        cfg.seed = 7;
        YieldPanel panel = simulate_panel(p, kMaturities, cfg, 1000);
        GmmContext ctx = make_gmm_context(panel, MomentSelector::default27(10), 2000);
        GmmObjective obj(ctx);
        SamplerConfig sampler = desk_profile();
        sampler.n_starts = 96;

        Rng rng1(17), rng2(17);
        auto t0 = Clock::now();
        ParamVector a = multistart_serial(obj, p, sampler, rng1);
        const double serial = seconds_since(t0);
        t0 = Clock::now();
        ParamVector b = multistart(obj, p, sampler, rng2, /*parallel=*/true);
        const double par = seconds_since(t0);
        report("multistart scan (96 starts)", serial, par);
        if ((a.as_vector() - b.as_vector()).cwiseAbs().maxCoeff() != 0.0)
            std::printf("  WARNING: kernels disagree\n");
    }

    // Kernel 3: batched latent-path simulation (independent seeds).
    {
        DiffusionSpec spec = p.p_spec();
        const int paths = 48;
        SimConfig cfg;
        cfg.T = 300;
        cfg.substeps = 300;
        cfg.burnin = 50;

        std::vector<double> sums(paths, 0.0);
        auto run_batch = [&](bool parallel) {
#pragma omp parallel for schedule(dynamic) if (parallel)
            for (int k = 0; k < paths; ++k) {
                SimConfig local = cfg;
                local.seed = 1000 + static_cast<std::uint64_t>(k);
                Matrix path = simulate_latent(spec, p.thetaP_vec(), local);
                sums[static_cast<size_t>(k)] = path.col(0).mean();
            }
        };
        auto t0 = Clock::now();
        run_batch(false);
        const double serial = seconds_since(t0);
        std::vector<double> ref = sums;
        t0 = Clock::now();
        run_batch(true);
        const double par = seconds_since(t0);
        report("latent path batch (48 paths)", serial, par);
        for (int k = 0; k < paths; ++k)
            if (sums[static_cast<size_t>(k)] != ref[static_cast<size_t>(k)]) {
                std::printf("  WARNING: kernels disagree\n");
                break;
            }
    }

    return 0;
}
