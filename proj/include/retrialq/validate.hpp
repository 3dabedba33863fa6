#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "retrialq/analytic.hpp"
#include "retrialq/channel.hpp"
#include "retrialq/ctmc.hpp"
#include "retrialq/simulator.hpp"
#include "retrialq/sweep.hpp"
#include "retrialq/timedist.hpp"

namespace retrialq {

struct CriterionResult {
    std::string id;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

namespace validate_detail {

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// reference parameter sets of the validation battery
inline ChannelModel linear_case() { return {CapacityMode::Linear, 3.0, 1.0, 0.0}; }
inline ChannelModel nonlinear_case() { return {CapacityMode::Nonlinear, 3.0, 2.0, 1.0}; }

}  // namespace validate_detail

// A1: hand-derived exactness anchors of the analytic engine
inline CriterionResult validate_a1() {
    using namespace validate_detail;
    Timer timer;
    CriterionResult res{"A1", "hand-anchored-exactness"};
    const QueueParams p{2, 1.0, 1.0, 1.0, 1.0};
    const auto r = performance_metrics(p, exponential_holding(1.0));
    const auto ws = busy_period_workspace(p, exponential_holding(1.0));
    struct Check {
        const char* what;
        double got, want;
    };
    const std::vector<Check> checks{
        {"p1", r.p1, 2.0 / 3.0},   {"L", r.L, 2.0 / 3.0},     {"W", r.W, 1.0},
        {"LS", r.LS, 4.0 / 3.0},   {"WS", r.WS, 2.0},         {"E_BP", r.e_bp, 4.0},
        {"q0", r.q[0], 1.0 / 3.0}, {"q1", r.q[1], 1.0 / 9.0}, {"C0", r.C[0], 3.0},
        {"C1", r.C[1], 1.0},       {"p00", r.p0[0], 1.0 / 9.0}, {"p01", r.p0[1], 2.0 / 9.0},
        {"A0", ws.A[0], 2.0},      {"B0", ws.B[0], -1.0}};
    double worst = 0.0;
    std::string worst_name = "-";
    for (const Check& c : checks) {
        const double err = std::abs(c.got - c.want);
        if (err > worst) {
            worst = err;
            worst_name = c.what;
        }
    }
    res.seconds = timer.elapsed();
    res.pass = worst <= 1e-9 && res.seconds < 1.0;
    std::ostringstream oss;
    oss << "max abs error " << worst << " (" << worst_name << "), budget 1e-9";
    res.detail = oss.str();
    return res;
}

// A2: analytic engine vs exact chain across K and random rate triples
inline CriterionResult validate_a2() {
    using namespace validate_detail;
    Timer timer;
    CriterionResult res{"A2", "oracle-equivalence-ctmc"};
    std::mt19937_64 gen(0xA2A2A2);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    double worst_metric = 0.0, worst_resid = 0.0, worst_regen = 0.0;
    int cases = 0;
    for (int K = 2; K <= 15; ++K) {
        for (int trial = 0; trial < 50; ++trial) {
            const double lam = u(gen), gam = u(gen), nu = u(gen);
            const QueueParams p{K, lam, gam, 1.0, 1.0};
            const auto h = exponential_holding(nu);
            const auto a = performance_metrics(p, h);
            const auto c = ctmc_metrics({K, lam, gam, nu});
            worst_metric = std::max({worst_metric, rel(a.p1, c.p1), rel(a.L, c.L), rel(a.W, c.W),
                                     rel(a.LS, c.LS), rel(a.WS, c.WS), rel(a.e_bp, c.e_bp)});
            worst_resid = std::max(worst_resid, eq5_max_residual(p, h.lst, a.q));
            const double idle = 1.0 / (K * lam);
            worst_regen = std::max(worst_regen, rel(a.p0[0], idle / (idle + a.e_bp)));
            ++cases;
        }
    }
    res.seconds = timer.elapsed();
    res.pass = worst_metric <= 1e-6 && worst_resid <= 1e-10 && worst_regen <= 1e-6 &&
               res.seconds < 30.0;
    std::ostringstream oss;
    oss << cases << " cases; worst metric rel " << worst_metric << ", worst residual "
        << worst_resid << ", worst regenerative " << worst_regen;
    res.detail = oss.str();
    return res;
}

// A3: distribution engine vs protocol Monte Carlo on the reference parameter sets
inline CriterionResult validate_a3() {
    using namespace validate_detail;
    Timer timer;
    CriterionResult res{"A3", "distribution-engine"};
    const double mu = 0.1, T = 3.0;
    bool pass = true;
    std::ostringstream oss;
    int block = 0;
    for (const ChannelModel& ch : {linear_case(), nonlinear_case()}) {
        const double p = success_probability(ch, T);
        const auto def = total_time_distribution(ch, mu, T, Semantics::Defective);
        const auto occ = total_time_distribution(ch, mu, T, Semantics::Occupancy);
        const double mass_err = std::abs(def.total_mass() - p * p);

        Rng rng(0xA3000 + static_cast<std::uint64_t>(block));
        const std::size_t n = 1000000;
        std::vector<double> zs, ts;
        zs.reserve(n);
        ts.reserve(n);
        double zsum = 0.0, zsum2 = 0.0;
        // 10^6 accepted samples per curve; conditioning keeps ~p^2 of draws
        while (zs.size() < n || ts.size() < n) {
            if (zs.size() < n) {
                const double z = sample_total_time(ch, mu, T, Semantics::Occupancy, rng);
                zs.push_back(z);
                zsum += z;
                zsum2 += z * z;
            }
            if (ts.size() < n) {
                const double t = sample_total_time(ch, mu, T, Semantics::Defective, rng);
                if (!std::isnan(t)) ts.push_back(t);
            }
        }
        const double ks_occ = ks_distance(occ, zs);
        const double ks_cond = ks_distance(normalized(def), ts);
        const double nn = static_cast<double>(n);
        const double mc_mean = zsum / nn;
        const double mc_se = std::sqrt((zsum2 / nn - mc_mean * mc_mean) / nn);
        const double beta1_err = std::abs(occ.moment(1) - mc_mean);

        const bool ok = mass_err <= 1e-6 && ks_occ <= 0.005 && ks_cond <= 0.005 &&
                        beta1_err <= 3.0 * mc_se;
        pass = pass && ok;
        oss << to_string(ch.mode) << ": mass err " << mass_err << ", KS(occ) " << ks_occ
            << ", KS(cond) " << ks_cond << ", beta1 err " << beta1_err << " vs 3se "
            << 3.0 * mc_se << (ok ? " [ok]" : " [FAIL]") << "; ";
        ++block;
    }
    res.seconds = timer.elapsed();
    res.pass = pass && res.seconds < 60.0;
    res.detail = oss.str();
    return res;
}

// A4: grid convolution vs the independent quadrature laws
inline CriterionResult validate_a4() {
    using namespace validate_detail;
    Timer timer;
    CriterionResult res{"A4", "quadrature-oracle-agreement"};
    const double mu = 0.1, T = 3.0;

    const ChannelModel lin = linear_case();
    const auto up = oneway_com_dist(lin, T, Semantics::Defective);
    const auto serv = exponential_dist(mu);
    const auto y = convolve(up, serv,
                            make_zoned_grid(up.hi() + serv.hi(), T + 3.0, 1 << 13, 1 << 13));
    double worst_lin = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double t = 2.0 * T * i / 100.0;
        worst_lin = std::max(worst_lin,
                             std::abs(y.density_at(t) - fy_linear_by_quadrature(t, lin, mu, T)));
    }

    const ChannelModel non = nonlinear_case();
    const auto def = total_time_distribution(non, mu, T, Semantics::Defective);
    double worst_non = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double t = 2.0 * T * i / 100.0;
        worst_non = std::max(
            worst_non, std::abs(def.cdf(t) - total_cdf_nonlinear_by_quadrature(t, non, mu, T)));
    }

    res.seconds = timer.elapsed();
    res.pass = worst_lin <= 1e-4 && worst_non <= 1e-4 && res.seconds < 60.0;
    std::ostringstream oss;
    oss << "linear density max abs diff " << worst_lin << "; nonlinear cdf max abs diff "
        << worst_non << " (budget 1e-4)";
    res.detail = oss.str();
    return res;
}

// A5: end-to-end theory vs simulation on the reference sweep grid
inline CriterionResult validate_a5() {
    using namespace validate_detail;
    Timer timer;
    CriterionResult res{"A5", "theory-vs-simulation"};
    const std::vector<double> alphas{0.5, 1.0, 2.0};
    const int n_invlam = 10;
    const double mu = 0.1, T = 3.0, gamma = 0.5;
    const int K = 10;
    const double horizon = 1e5, warmup = 1e4;
    const int reps = 30;

    struct Point {
        PerformanceReport theory;
        SimEstimates sim;
    };
    std::vector<std::vector<Point>> grid(alphas.size());

    std::uint64_t point_index = 0;
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        const ChannelModel ch{CapacityMode::Nonlinear, alphas[ai], 1.0, 1.0};
        const auto holding = make_holding(total_time_distribution(ch, mu, T, Semantics::Occupancy));
        for (int il = 1; il <= n_invlam; ++il) {
            const QueueParams qp{K, 1.0 / il, gamma, mu, T};
            Point pt;
            pt.theory = performance_metrics(qp, holding);
            SimConfig cfg;
            cfg.params = qp;
            cfg.channel = ch;
            cfg.horizon = horizon;
            cfg.warmup = warmup;
            cfg.replications = reps;
            cfg.master_seed = derive_seed(0xA5A5A5, point_index++);
            pt.sim = run_experiment(cfg);
            grid[ai].push_back(std::move(pt));
        }
    }

    std::ostringstream oss;
    bool pass = true;

    // CI coverage per metric across the 30 grid points
    const std::vector<std::pair<std::string, double PerformanceReport::*>> metrics{
        {"L", &PerformanceReport::L},
        {"W", &PerformanceReport::W},
        {"LS", &PerformanceReport::LS},
        {"WS", &PerformanceReport::WS}};
    const int total_points = static_cast<int>(alphas.size()) * n_invlam;
    for (const auto& [name, field] : metrics) {
        int covered = 0;
        for (const auto& row : grid)
            for (const Point& pt : row)
                if (pt.sim.metrics.at(name).covers(pt.theory.*field)) ++covered;
        const bool ok = covered * 10 >= total_points * 9;
        pass = pass && ok;
        oss << name << " covered " << covered << "/" << total_points << (ok ? "" : " [FAIL]")
            << "; ";
    }
    // E_BP: a point passes when the CI covers the theory value, or when no
    // busy period completed and the theory value says none could have
    // (theory E_BP far beyond the horizon)
    {
        int ok_points = 0, degenerate = 0;
        for (const auto& row : grid)
            for (const Point& pt : row) {
                const Estimate& e = pt.sim.metrics.at("E_BP");
                if (e.n == 0) {
                    if (pt.theory.e_bp > 10.0 * horizon) {
                        ++ok_points;
                        ++degenerate;
                    }
                } else if (e.covers(pt.theory.e_bp)) {
                    ++ok_points;
                }
            }
        const bool ok = ok_points * 10 >= total_points * 9;
        pass = pass && ok;
        oss << "E_BP consistent " << ok_points << "/" << total_points << " (" << degenerate
            << " with no completed busy period, as theory predicts)" << (ok ? "" : " [FAIL]")
            << "; ";
    }

    // expected qualitative directions of the theory curves
    {
        bool w_alpha = true, l_alpha = true, w_invlam = true, l_invlam = true, bp_invlam = true;
        for (int il = 0; il < n_invlam; ++il)
            for (std::size_t ai = 1; ai < alphas.size(); ++ai) {
                w_alpha = w_alpha && grid[ai][il].theory.W >= grid[ai - 1][il].theory.W - 1e-9;
                l_alpha = l_alpha && grid[ai][il].theory.L >= grid[ai - 1][il].theory.L - 1e-9;
            }
        for (std::size_t ai = 0; ai < alphas.size(); ++ai)
            for (int il = 1; il < n_invlam; ++il) {
                w_invlam =
                    w_invlam && grid[ai][il].theory.W <= grid[ai][il - 1].theory.W + 1e-9;
                l_invlam =
                    l_invlam && grid[ai][il].theory.L <= grid[ai][il - 1].theory.L + 1e-9;
                bp_invlam =
                    bp_invlam && grid[ai][il].theory.e_bp <= grid[ai][il - 1].theory.e_bp * (1 + 1e-9);
            }
        pass = pass && w_alpha && l_alpha && w_invlam && l_invlam && bp_invlam;
        oss << "monotone: W_alpha=" << (w_alpha ? "yes" : "NO") << " L_alpha="
            << (l_alpha ? "yes" : "NO") << " W_invlam=" << (w_invlam ? "yes" : "NO")
            << " L_invlam=" << (l_invlam ? "yes" : "NO") << " BP_invlam="
            << (bp_invlam ? "yes" : "NO");
    }

    res.seconds = timer.elapsed();
    res.pass = pass && res.seconds < 900.0;
    res.detail = oss.str();
    return res;
}

// A6: success-conditioned total-time medians, linear vs nonlinear
inline CriterionResult validate_a6() {
    using namespace validate_detail;
    Timer timer;
    CriterionResult res{"A6", "linear-vs-nonlinear-median"};
    const double mu = 0.1, T = 3.0;
    const auto lin = normalized(
        total_time_distribution(linear_case(), mu, T, Semantics::Defective));
    const auto non = normalized(
        total_time_distribution(nonlinear_case(), mu, T, Semantics::Defective));
    const double med_lin = lin.quantile(0.5);
    const double med_non = non.quantile(0.5);
    const double margin = (med_non - med_lin) / med_non;
    res.seconds = timer.elapsed();
    res.pass = margin >= 0.01;
    std::ostringstream oss;
    oss << "median linear " << med_lin << " vs nonlinear " << med_non << ", margin "
        << margin * 100.0 << "% (need >= 1%)";
    res.detail = oss.str();
    return res;
}

// A7: identical spec and seed produce byte-identical sweep CSV
inline CriterionResult validate_a7() {
    using namespace validate_detail;
    Timer timer;
    CriterionResult res{"A7", "reproducibility"};
    SweepSpec spec;
    spec.params = {4, 1.0, 0.5, 0.1, 3.0};
    spec.channel = {CapacityMode::Nonlinear, 1.0, 1.0, 1.0};
    spec.swept = "inv_lambda";
    spec.values = {1.0, 2.0, 4.0};
    spec.engines = "both";
    spec.horizon = 2000.0;
    spec.warmup = 200.0;
    spec.replications = 5;
    spec.seed = 42;
    spec.grid.total_cells = 1 << 12;
    spec.grid.oneway_cells = 1 << 10;
    const std::string a = sweep_csv(spec);
    const std::string b = sweep_csv(spec);
    res.seconds = timer.elapsed();
    res.pass = !a.empty() && a == b;
    std::ostringstream oss;
    oss << a.size() << " bytes, " << (res.pass ? "byte-identical across two runs"
                                               : "OUTPUTS DIFFER");
    res.detail = oss.str();
    return res;
}

inline std::vector<CriterionResult> run_validation(
    const std::vector<std::string>& only = {},
    const std::function<void(const CriterionResult&)>& on_result = {}) {
    auto wanted = [&](const std::string& id, const std::string& name) {
        if (only.empty()) return true;
        for (std::string tok : only) {
            std::transform(tok.begin(), tok.end(), tok.begin(), ::tolower);
            std::string lid = id, lname = name;
            std::transform(lid.begin(), lid.end(), lid.begin(), ::tolower);
            std::transform(lname.begin(), lname.end(), lname.begin(), ::tolower);
            if (lid == tok || lname.find(tok) != std::string::npos) return true;
        }
        return false;
    };
    std::vector<CriterionResult> out;
    auto maybe = [&](const std::string& id, const std::string& name, auto fn) {
        if (!wanted(id, name)) return;
        try {
            out.push_back(fn());
        } catch (const std::exception& e) {
            out.push_back({id, name, false, std::string("exception: ") + e.what(), 0.0});
        }
        if (on_result) on_result(out.back());
    };
    maybe("A1", "hand-anchored-exactness", validate_a1);
    maybe("A2", "oracle-equivalence-ctmc", validate_a2);
    maybe("A3", "distribution-engine", validate_a3);
    maybe("A4", "quadrature-oracle-agreement", validate_a4);
    maybe("A5", "theory-vs-simulation", validate_a5);
    maybe("A6", "linear-vs-nonlinear-median", validate_a6);
    maybe("A7", "reproducibility", validate_a7);
    return out;
}

}  // namespace retrialq
