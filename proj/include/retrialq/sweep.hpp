#pragma once

#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "retrialq/analytic.hpp"
#include "retrialq/channel.hpp"
#include "retrialq/simulator.hpp"
#include "retrialq/timedist.hpp"

namespace retrialq {

// One experiment family: a base configuration plus one swept variable.
// The natural abscissa is the mean arrival interval 1/lambda, the default.
struct SweepSpec {
    QueueParams params;
    ChannelModel channel;
    Semantics semantics = Semantics::Occupancy;
    std::string swept = "inv_lambda";  // inv_lambda | alpha | B | N
    std::vector<double> values;
    std::string engines = "both";  // theory | sim | both
    double horizon = 1e5;
    double warmup = 1e4;
    int replications = 30;
    std::uint64_t seed = 1;
    GridOptions grid{};
    int threads = 0;

    void validate() const {
        params.validate();
        channel.validate();
        if (values.empty()) throw std::domain_error("SweepSpec: empty value list");
        for (std::size_t i = 1; i < values.size(); ++i)
            if (!(values[i] > values[i - 1]))
                throw std::domain_error("SweepSpec: values must be strictly increasing");
        if (swept != "inv_lambda" && swept != "alpha" && swept != "B" && swept != "N")
            throw std::domain_error("SweepSpec: unknown swept variable '" + swept + "'");
        if (engines != "theory" && engines != "sim" && engines != "both")
            throw std::domain_error("SweepSpec: engines must be theory|sim|both");
    }
};

struct SweepRow {
    std::string case_;
    int K = 0;
    double inv_lambda = 0, gamma = 0, mu = 0, timeout = 0, alpha = 0, B = 0, N = 0;
    std::string semantics, engine, metric;
    std::optional<double> value;
    std::optional<double> ci_low, ci_high;
    std::optional<std::uint64_t> seed;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    bool ok = true;
};

namespace detail {

inline std::string fmt_double(double v) {
    std::ostringstream oss;
    oss << std::setprecision(12) << v;
    return oss.str();
}

struct DistKey {
    CapacityMode mode;
    double alpha, N, B, mu, timeout;
    Semantics semantics;
    bool operator==(const DistKey&) const = default;
};

}  // namespace detail

inline SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    SweepResult out;
    std::optional<detail::DistKey> cached_key;
    std::optional<HoldingTime> cached_holding;

    for (std::size_t pt = 0; pt < spec.values.size(); ++pt) {
        QueueParams qp = spec.params;
        ChannelModel ch = spec.channel;
        const double v = spec.values[pt];
        if (spec.swept == "inv_lambda") {
            if (!(v > 0.0)) throw std::domain_error("run_sweep: inv_lambda must be > 0");
            qp.lambda = 1.0 / v;
        } else if (spec.swept == "alpha") {
            ch.alpha = v;
        } else if (spec.swept == "B") {
            ch.bandwidth = v;
        } else {
            ch.noise_power = v;
        }

        SweepRow proto;
        proto.case_ = to_string(ch.mode);
        proto.K = qp.K;
        proto.inv_lambda = 1.0 / qp.lambda;
        proto.gamma = qp.gamma;
        proto.mu = qp.mu;
        proto.timeout = qp.timeout;
        proto.alpha = ch.alpha;
        proto.B = ch.bandwidth;
        proto.N = ch.noise_power;
        proto.semantics =
            spec.semantics == Semantics::Occupancy ? "occupancy" : "defective-renormalized";

        if (spec.engines == "theory" || spec.engines == "both") {
            SweepRow row = proto;
            row.engine = "theory";
            try {
                const detail::DistKey key{ch.mode, ch.alpha,   ch.noise_power, ch.bandwidth,
                                          qp.mu,   qp.timeout, spec.semantics};
                if (!cached_key || !(key == *cached_key)) {
                    MixedDistribution dist =
                        spec.semantics == Semantics::Occupancy
                            ? total_time_distribution(ch, qp.mu, qp.timeout,
                                                      Semantics::Occupancy, spec.grid)
                            : normalized(total_time_distribution(
                                  ch, qp.mu, qp.timeout, Semantics::Defective, spec.grid));
                    cached_holding = make_holding(dist);
                    cached_key = key;
                }
                const PerformanceReport r = performance_metrics(qp, *cached_holding);
                for (const auto& [name, val] :
                     std::vector<std::pair<std::string, double>>{{"p1", r.p1},
                                                                 {"L", r.L},
                                                                 {"W", r.W},
                                                                 {"LS", r.LS},
                                                                 {"WS", r.WS},
                                                                 {"E_BP", r.e_bp}}) {
                    row.metric = name;
                    row.value = val;
                    out.rows.push_back(row);
                }
            } catch (const std::exception& e) {
                row.metric = std::string("error: ") + e.what();
                out.rows.push_back(row);
                out.ok = false;
            }
        }

        if (spec.engines == "sim" || spec.engines == "both") {
            SweepRow row = proto;
            row.engine = "sim";
            row.seed = derive_seed(spec.seed, pt);
            try {
                SimConfig cfg;
                cfg.params = qp;
                cfg.channel = ch;
                cfg.horizon = spec.horizon;
                cfg.warmup = spec.warmup;
                cfg.replications = spec.replications;
                cfg.master_seed = *row.seed;
                cfg.threads = spec.threads;
                const SimEstimates est = run_experiment(cfg);
                for (const char* name : {"p1", "L", "W", "LS", "WS", "E_BP", "discard_rate"}) {
                    row.metric = name;
                    const Estimate& e = est.metrics.at(name);
                    if (e.n > 0) {
                        row.value = e.mean;
                        row.ci_low = e.ci_low;
                        row.ci_high = e.ci_high;
                    } else {
                        row.value.reset();
                        row.ci_low.reset();
                        row.ci_high.reset();
                    }
                    out.rows.push_back(row);
                }
            } catch (const std::exception& e) {
                row.metric = std::string("error: ") + e.what();
                out.rows.push_back(row);
                out.ok = false;
            }
        }
    }
    return out;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
    os << "case,K,inv_lambda,gamma,mu,T,alpha,B,N,semantics,engine,metric,value,ci_low,ci_high,"
          "seed\n";
    for (const SweepRow& r : rows) {
        os << r.case_ << ',' << r.K << ',' << detail::fmt_double(r.inv_lambda) << ','
           << detail::fmt_double(r.gamma) << ',' << detail::fmt_double(r.mu) << ','
           << detail::fmt_double(r.timeout) << ',' << detail::fmt_double(r.alpha) << ','
           << detail::fmt_double(r.B) << ',' << detail::fmt_double(r.N) << ',' << r.semantics
           << ',' << r.engine << ',' << r.metric << ',';
        if (r.value) os << detail::fmt_double(*r.value);
        os << ',';
        if (r.ci_low) os << detail::fmt_double(*r.ci_low);
        os << ',';
        if (r.ci_high) os << detail::fmt_double(*r.ci_high);
        os << ',';
        if (r.seed) os << *r.seed;
        os << '\n';
    }
}

inline std::string sweep_csv(const SweepSpec& spec) {
    const SweepResult res = run_sweep(spec);
    std::ostringstream oss;
    write_sweep_csv(res.rows, oss);
    return oss.str();
}

}  // namespace retrialq
