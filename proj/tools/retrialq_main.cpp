// Command-line front end: distribution export, analytic solve, protocol
// simulation, parameter sweeps and the validation battery.
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "retrialq/analytic.hpp"
#include "retrialq/channel.hpp"
#include "retrialq/ctmc.hpp"
#include "retrialq/simulator.hpp"
#include "retrialq/sweep.hpp"
#include "retrialq/timedist.hpp"
#include "retrialq/validate.hpp"

using json = nlohmann::ordered_json;
using namespace retrialq;

namespace {

struct Ctx {
    std::string case_ = "nonlinear";
    int k = 10;
    double lambda = 1.0, gamma = 0.5, mu = 0.1, timeout = 3.0;
    double alpha = 1.0, bandwidth = 1.0, noise = 1.0;
    std::string semantics = "occupancy";
    std::uint64_t seed = 1;
    int reps = 30;
    double horizon = 1e5, warmup = 1e4;
    std::string out, format = "csv", config;
    int grid_cells = 1 << 14;
    int threads = 0;

    // config-file merge registry: option -> apply json value when flag absent
    std::vector<std::function<void(const json&)>> merges;

    ChannelModel channel() const {
        ChannelModel ch;
        ch.mode = case_ == "linear" ? CapacityMode::Linear : CapacityMode::Nonlinear;
        ch.alpha = alpha;
        ch.noise_power = noise;
        ch.bandwidth = bandwidth;
        return ch;
    }
    QueueParams params() const { return {k, lambda, gamma, mu, timeout}; }
    Semantics sem() const {
        return semantics == "occupancy" ? Semantics::Occupancy : Semantics::Defective;
    }
    GridOptions grid() const {
        GridOptions g;
        g.total_cells = static_cast<std::size_t>(grid_cells);
        g.oneway_cells = std::max<std::size_t>(g.total_cells / 4, 64);
        return g;
    }
};

template <typename T>
void reg(Ctx& ctx, CLI::App* cmd, CLI::Option* opt, const std::string& key, T& var) {
    ctx.merges.push_back([cmd, opt, key, &var](const json& j) {
        if (cmd->parsed() && opt->count() == 0 && j.contains(key)) var = j.at(key).get<T>();
    });
}

void add_channel_opts(CLI::App* cmd, Ctx& ctx) {
    reg(ctx, cmd, cmd->add_option("--case", ctx.case_, "capacity law: linear|nonlinear")
                 ->check(CLI::IsMember({"linear", "nonlinear"})),
        "case", ctx.case_);
    reg(ctx, cmd, cmd->add_option("--alpha", ctx.alpha, "signal-power decay rate"), "alpha", ctx.alpha);
    reg(ctx, cmd, cmd->add_option("--noise", ctx.noise, "noise power N"), "noise", ctx.noise);
    reg(ctx, cmd, cmd->add_option("--bandwidth", ctx.bandwidth, "bandwidth B (nonlinear case)"),
        "bandwidth", ctx.bandwidth);
    reg(ctx, cmd, cmd->add_option("--mu", ctx.mu, "database service rate"), "mu", ctx.mu);
    reg(ctx, cmd, cmd->add_option("--timeout", ctx.timeout, "transmission timeout T"), "timeout",
        ctx.timeout);
}

void add_queue_opts(CLI::App* cmd, Ctx& ctx) {
    reg(ctx, cmd, cmd->add_option("--k", ctx.k, "number of clients"), "k", ctx.k);
    reg(ctx, cmd, cmd->add_option("--lambda", ctx.lambda, "per-free-client arrival rate"), "lambda",
        ctx.lambda);
    reg(ctx, cmd, cmd->add_option("--gamma", ctx.gamma, "per-orbit-client retrial rate"), "gamma",
        ctx.gamma);
    reg(ctx, cmd,
        cmd->add_option("--semantics", ctx.semantics, "holding-time semantics for the theory")
            ->check(CLI::IsMember({"occupancy", "defective-renormalized"})),
        "semantics", ctx.semantics);
}

void add_sim_opts(CLI::App* cmd, Ctx& ctx) {
    reg(ctx, cmd, cmd->add_option("--seed", ctx.seed, "master RNG seed"), "seed", ctx.seed);
    reg(ctx, cmd, cmd->add_option("--reps", ctx.reps, "number of replications"), "reps", ctx.reps);
    reg(ctx, cmd, cmd->add_option("--horizon", ctx.horizon, "simulated time per replication"),
        "horizon", ctx.horizon);
    reg(ctx, cmd, cmd->add_option("--warmup", ctx.warmup, "statistics start time"), "warmup",
        ctx.warmup);
    reg(ctx, cmd, cmd->add_option("--threads", ctx.threads, "worker threads (0 = auto)"), "threads",
        ctx.threads);
}

void add_io_opts(CLI::App* cmd, Ctx& ctx) {
    reg(ctx, cmd, cmd->add_option("--out", ctx.out, "output path (default: stdout)"), "out", ctx.out);
    reg(ctx, cmd,
        cmd->add_option("--format", ctx.format, "output format")
            ->check(CLI::IsMember({"csv", "json"})),
        "format", ctx.format);
    reg(ctx, cmd,
        cmd->add_option("--grid-cells", ctx.grid_cells, "density grid resolution")
            ->check(CLI::PositiveNumber),
        "grid_cells", ctx.grid_cells);
    cmd->add_option("--config", ctx.config, "JSON config file; flags override file values");
}

void apply_config(Ctx& ctx) {
    if (ctx.config.empty()) return;
    std::ifstream in(ctx.config);
    if (!in) throw std::invalid_argument("cannot open config file: " + ctx.config);
    json j = json::parse(in);
    for (auto& m : ctx.merges) m(j);
}

void emit(const Ctx& ctx, const std::string& content) {
    if (ctx.out.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(ctx.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + ctx.out);
    out << content;
}

json report_to_json(const PerformanceReport& r) {
    json j;
    j["v"] = r.v;
    j["p1"] = r.p1;
    j["L"] = r.L;
    j["W"] = r.W;
    j["LS"] = r.LS;
    j["WS"] = r.WS;
    j["E_BP"] = r.e_bp;
    j["q"] = r.q;
    j["C"] = r.C;
    j["p0"] = r.p0;
    return j;
}

int cmd_dist(Ctx& ctx, double tmax, int points) {
    apply_config(ctx);
    const ChannelModel ch = ctx.channel();
    if (tmax <= 0.0) tmax = 2.0 * ctx.timeout + 3.0 / ctx.mu;
    const auto def = total_time_distribution(ch, ctx.mu, ctx.timeout, Semantics::Defective,
                                             ctx.grid());
    const auto cond = normalized(def);
    std::ostringstream oss;
    oss << std::setprecision(12);
    oss << "t,pdf,cdf,semantics\n";
    for (const auto& [d, label] :
         {std::pair<const MixedDistribution*, const char*>{&def, "defective"},
          std::pair<const MixedDistribution*, const char*>{&cond, "conditioned"}}) {
        for (int i = 1; i <= points; ++i) {
            const double t = tmax * i / points;
            oss << t << ',' << d->density_at(t) << ',' << d->cdf(t) << ',' << label << '\n';
        }
    }
    emit(ctx, oss.str());
    return 0;
}

int cmd_solve(Ctx& ctx, bool oracle_exponential) {
    apply_config(ctx);
    PerformanceReport r;
    if (oracle_exponential) {
        r = ctmc_metrics({ctx.k, ctx.lambda, ctx.gamma, ctx.mu});
    } else {
        const ChannelModel ch = ctx.channel();
        const MixedDistribution dist =
            ctx.sem() == Semantics::Occupancy
                ? total_time_distribution(ch, ctx.mu, ctx.timeout, Semantics::Occupancy,
                                          ctx.grid())
                : normalized(total_time_distribution(ch, ctx.mu, ctx.timeout,
                                                     Semantics::Defective, ctx.grid()));
        r = performance_metrics(ctx.params(), dist);
    }
    emit(ctx, report_to_json(r).dump(2) + "\n");
    return 0;
}

int cmd_simulate(Ctx& ctx, const std::string& rep_csv) {
    apply_config(ctx);
    SimConfig cfg;
    cfg.params = ctx.params();
    cfg.channel = ctx.channel();
    cfg.horizon = ctx.horizon;
    cfg.warmup = ctx.warmup;
    cfg.replications = ctx.reps;
    cfg.master_seed = ctx.seed;
    cfg.threads = ctx.threads;
    const auto raws = run_replications(cfg);
    const auto est = aggregate_estimates(cfg, raws);

    if (!rep_csv.empty()) {
        std::ofstream out(rep_csv, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open output file: " + rep_csv);
        out << std::setprecision(12) << "rep,metric,value\n";
        for (std::size_t i = 0; i < raws.size(); ++i) {
            const RawStats& r = raws[i];
            const std::vector<std::pair<const char*, double>> vals{
                {"p1", r.p1},
                {"L", r.L},
                {"LS", r.LS},
                {"W", r.W_all},
                {"WS", r.WS_all},
                {"W_completed", r.W_completed},
                {"WS_completed", r.WS_completed},
                {"mean_occupancy", r.mean_occupancy},
                {"discard_rate", r.discard_rate},
                {"bp_mean", r.bp_mean},
                {"bp_count", static_cast<double>(r.bp_count)},
                {"seizures", static_cast<double>(r.seizures)},
                {"completions", static_cast<double>(r.completions)}};
            for (const auto& [name, v] : vals) out << i << ',' << name << ',' << v << '\n';
        }
    }

    json j;
    j["replications"] = est.replications;
    j["master_seed"] = est.master_seed;
    json m;
    for (const auto& [name, e] : est.metrics) {
        json je;
        je["mean"] = e.mean;
        je["ci_low"] = e.ci_low;
        je["ci_high"] = e.ci_high;
        je["n"] = e.n;
        m[name] = je;
    }
    j["metrics"] = m;
    emit(ctx, j.dump(2) + "\n");
    return 0;
}

int cmd_sweep(Ctx& ctx, std::string swept, std::vector<double>& values, std::string engines) {
    apply_config(ctx);
    SweepSpec spec;
    spec.params = ctx.params();
    spec.channel = ctx.channel();
    spec.semantics = ctx.sem();
    spec.swept = std::move(swept);
    spec.values = values;
    spec.engines = std::move(engines);
    spec.horizon = ctx.horizon;
    spec.warmup = ctx.warmup;
    spec.replications = ctx.reps;
    spec.seed = ctx.seed;
    spec.grid = ctx.grid();
    spec.threads = ctx.threads;
    const SweepResult res = run_sweep(spec);
    std::ostringstream oss;
    write_sweep_csv(res.rows, oss);
    emit(ctx, oss.str());
    return res.ok ? 0 : 1;
}

int cmd_validate(Ctx& ctx, const std::vector<std::string>& only) {
    apply_config(ctx);
    const auto results = run_validation(only, [](const CriterionResult& r) {
        std::cerr << '[' << (r.pass ? "PASS" : "FAIL") << "] " << r.id << ' ' << r.name << " ("
                  << r.seconds << "s): " << r.detail << '\n';
    });
    json j;
    json arr = json::array();
    bool all = !results.empty();
    for (const auto& r : results) {
        json e;
        e["id"] = r.id;
        e["name"] = r.name;
        e["pass"] = r.pass;
        e["seconds"] = r.seconds;
        e["detail"] = r.detail;
        arr.push_back(e);
        all = all && r.pass;
    }
    j["schema_version"] = 1;
    j["criteria"] = arr;
    j["all_pass"] = all;
    emit(ctx, j.dump(2) + "\n");
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-source retrial queue over a Rayleigh fading channel"};
    app.require_subcommand(1);
    Ctx ctx;

    auto* dist = app.add_subcommand("dist", "export total-time pdf/cdf curves as CSV");
    add_channel_opts(dist, ctx);
    add_io_opts(dist, ctx);
    double tmax = 0.0;
    int points = 512;
    dist->add_option("--tmax", tmax, "grid upper end (default 2T + 3/mu)")
        ->check(CLI::PositiveNumber);
    dist->add_option("--points", points, "grid points")->check(CLI::PositiveNumber);

    auto* solve = app.add_subcommand("solve", "analytic stationary metrics as JSON");
    add_channel_opts(solve, ctx);
    add_queue_opts(solve, ctx);
    add_io_opts(solve, ctx);
    bool oracle_exponential = false;
    solve->add_flag("--oracle-exponential", oracle_exponential,
                    "exact chain for the all-exponential case (holding rate = --mu)");

    auto* sim = app.add_subcommand("simulate", "protocol simulation with CIs as JSON");
    add_channel_opts(sim, ctx);
    add_queue_opts(sim, ctx);
    add_sim_opts(sim, ctx);
    add_io_opts(sim, ctx);
    std::string rep_csv;
    sim->add_option("--rep-csv", rep_csv, "also write per-replication CSV to this path");

    auto* sweep = app.add_subcommand("sweep", "parameter sweep as CSV (theory and/or sim)");
    add_channel_opts(sweep, ctx);
    add_queue_opts(sweep, ctx);
    add_sim_opts(sweep, ctx);
    add_io_opts(sweep, ctx);
    std::string swept = "inv_lambda";
    std::vector<double> values;
    std::string engines = "both";
    sweep->add_option("--sweep", swept, "swept variable: inv_lambda|alpha|B|N")
        ->check(CLI::IsMember({"inv_lambda", "alpha", "B", "N"}));
    auto* values_opt = sweep->add_option("--values", values, "swept values, increasing");
    sweep->add_option("--engines", engines, "theory|sim|both")
        ->check(CLI::IsMember({"theory", "sim", "both"}));
    ctx.merges.push_back([sweep, values_opt, &values](const json& j) {
        if (sweep->parsed() && values_opt->count() == 0 && j.contains("values"))
            values = j.at("values").get<std::vector<double>>();
    });

    auto* validate = app.add_subcommand("validate", "run the acceptance battery, JSON report");
    add_io_opts(validate, ctx);
    std::vector<std::string> only;
    validate->add_option("--only", only, "run only criteria matching these ids/names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }

    try {
        if (dist->parsed()) return cmd_dist(ctx, tmax, points);
        if (solve->parsed()) return cmd_solve(ctx, oracle_exponential);
        if (sim->parsed()) return cmd_simulate(ctx, rep_csv);
        if (sweep->parsed()) return cmd_sweep(ctx, swept, values, engines);
        if (validate->parsed()) return cmd_validate(ctx, only);
    } catch (const std::domain_error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
