#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "retrialq/analytic.hpp"
#include "retrialq/channel.hpp"
#include "retrialq/rng.hpp"
#include "retrialq/stats.hpp"

namespace retrialq {

struct SimConfig {
    QueueParams params;
    ChannelModel channel;
    double horizon = 1e5;
    double warmup = 1e4;
    int replications = 30;
    std::uint64_t master_seed = 1;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const {
        params.validate();
        channel.validate();
        if (!(horizon > 0.0) || warmup < 0.0 || warmup > horizon)
            throw std::domain_error("SimConfig: need 0 <= warmup <= horizon");
        if (replications < 1) throw std::domain_error("SimConfig: replications must be >= 1");
    }
};

// post-warmup results of a single replication
struct RawStats {
    double duration = 0.0;
    double p1 = 0.0;               // locked-time fraction
    double L = 0.0;                // time-average orbit size
    double LS = 0.0;               // time-average number in system
    double W_all = 0.0;            // mean orbit wait over all seizures
    double WS_all = 0.0;           // mean staying time over all released transactions
    double W_completed = 0.0;      // same, successful transactions only
    double WS_completed = 0.0;
    double mean_occupancy = 0.0;   // mean server-holding time per seizure
    double bp_mean = 0.0;          // mean completed busy-period length
    long long bp_count = 0;
    long long seizures = 0;
    long long releases = 0;
    long long completions = 0;
    long long discards_up = 0;
    long long discards_down = 0;
    double discard_rate = 0.0;     // discarded / released
    double locked_integral = 0.0;
    double orbit_integral = 0.0;
    double occupancy_clipped_sum = 0.0;  // per-seizure holding clipped to the window
};

struct SimEstimates {
    std::map<std::string, Estimate> metrics;
    int replications = 0;
    std::uint64_t master_seed = 0;
};

namespace detail {

enum class EvType : int { Arrival = 0, Retrial = 1, Release = 2 };

struct Event {
    double t;
    std::uint64_t seq;
    EvType type;
    int client;
};

struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
        if (a.t != b.t) return a.t > b.t;
        return a.seq > b.seq;
    }
};

enum class ClientState : int { Free = 0, Orbit = 1, Pipeline = 2 };

}  // namespace detail

inline RawStats run_replication(const SimConfig& config, int rep_index) {
    config.validate();
    const QueueParams& qp = config.params;
    const int K = qp.K;
    const double T = qp.timeout;
    Rng rng(derive_seed(config.master_seed, static_cast<std::uint64_t>(rep_index)));

    std::priority_queue<detail::Event, std::vector<detail::Event>, detail::EventLater> heap;
    std::uint64_t seq = 0;
    std::vector<detail::ClientState> state(static_cast<std::size_t>(K),
                                           detail::ClientState::Free);
    std::vector<double> gen_time(static_cast<std::size_t>(K), 0.0);

    bool locked = false;
    int pipeline_client = -1;
    enum class Outcome { Success, DiscardUp, DiscardDown };
    Outcome pipeline_outcome = Outcome::Success;
    int orbit = 0;

    double clock = 0.0;
    const double warmup = config.warmup, horizon = config.horizon;

    // accumulators
    double locked_int = 0.0, orbit_int = 0.0, system_int = 0.0;
    double wait_sum_all = 0.0, stay_sum_all = 0.0, wait_sum_ok = 0.0, stay_sum_ok = 0.0;
    double occupancy_sum = 0.0, occ_clipped = 0.0;
    long long seizures = 0, releases = 0, completions = 0, d_up = 0, d_down = 0;
    long long ok_released = 0;
    double pipeline_wait = 0.0, pipeline_gen = 0.0;
    double bp_sum = 0.0;
    long long bp_count = 0;
    double bp_start = -1.0;
    bool busy_system = false;

    auto advance_time = [&](double to) {
        const double a = std::max(clock, warmup);
        const double b = std::min(to, horizon);
        if (b > a) {
            const double dt = b - a;
            if (locked) locked_int += dt;
            orbit_int += orbit * dt;
            system_int += (orbit + (locked ? 1 : 0)) * dt;
        }
        clock = to;
    };

    auto update_busy = [&]() {
        const bool now = locked || orbit > 0;
        if (now && !busy_system) {
            bp_start = (clock >= warmup) ? clock : -1.0;
        } else if (!now && busy_system) {
            if (bp_start >= 0.0 && clock <= horizon) {
                bp_sum += clock - bp_start;
                ++bp_count;
            }
            bp_start = -1.0;
        }
        busy_system = now;
    };

    auto push = [&](double t, detail::EvType ty, int c) {
        heap.push({t, seq++, ty, c});
    };

    auto seize = [&](int c) {
        state[static_cast<std::size_t>(c)] = detail::ClientState::Pipeline;
        locked = true;
        pipeline_client = c;
        pipeline_gen = gen_time[static_cast<std::size_t>(c)];
        pipeline_wait = clock - pipeline_gen;
        const double up = sample_com_time(config.channel, rng.uniform01());
        double hold;
        if (up > T) {
            pipeline_outcome = Outcome::DiscardUp;
            hold = T;
        } else {
            const double serve = rng.exponential(qp.mu);
            const double down = sample_com_time(config.channel, rng.uniform01());
            if (down > T) {
                pipeline_outcome = Outcome::DiscardDown;
                hold = up + serve + T;
            } else {
                pipeline_outcome = Outcome::Success;
                hold = up + serve + down;
            }
        }
        if (clock >= warmup && clock <= horizon) {
            ++seizures;
            wait_sum_all += pipeline_wait;
            occupancy_sum += hold;
        }
        occ_clipped += std::max(0.0, std::min(clock + hold, horizon) - std::max(clock, warmup));
        push(clock + hold, detail::EvType::Release, c);
    };

    // initially all clients are free
    for (int c = 0; c < K; ++c) push(rng.exponential(qp.lambda), detail::EvType::Arrival, c);

    while (!heap.empty() && heap.top().t <= horizon) {
        const detail::Event ev = heap.top();
        heap.pop();
        advance_time(ev.t);
        const int c = ev.client;
        switch (ev.type) {
            case detail::EvType::Arrival: {
                assert(state[static_cast<std::size_t>(c)] == detail::ClientState::Free);
                gen_time[static_cast<std::size_t>(c)] = clock;
                if (!locked) {
                    seize(c);
                } else {
                    state[static_cast<std::size_t>(c)] = detail::ClientState::Orbit;
                    ++orbit;
                    push(clock + rng.exponential(qp.gamma), detail::EvType::Retrial, c);
                }
                break;
            }
            case detail::EvType::Retrial: {
                assert(state[static_cast<std::size_t>(c)] == detail::ClientState::Orbit);
                if (!locked) {
                    --orbit;
                    seize(c);
                } else {
                    push(clock + rng.exponential(qp.gamma), detail::EvType::Retrial, c);
                }
                break;
            }
            case detail::EvType::Release: {
                assert(locked && pipeline_client == c);
                locked = false;
                pipeline_client = -1;
                state[static_cast<std::size_t>(c)] = detail::ClientState::Free;
                if (clock >= warmup && clock <= horizon) {
                    ++releases;
                    const double stay = clock - pipeline_gen;
                    stay_sum_all += stay;
                    switch (pipeline_outcome) {
                        case Outcome::Success:
                            ++completions;
                            ++ok_released;
                            wait_sum_ok += pipeline_wait;
                            stay_sum_ok += stay;
                            break;
                        case Outcome::DiscardUp:
                            ++d_up;
                            break;
                        case Outcome::DiscardDown:
                            ++d_down;
                            break;
                    }
                }
                push(clock + rng.exponential(qp.lambda), detail::EvType::Arrival, c);
                break;
            }
        }
#ifndef NDEBUG
        {
            int n_free = 0, n_orbit = 0, n_pipe = 0;
            for (auto s : state) {
                n_free += s == detail::ClientState::Free;
                n_orbit += s == detail::ClientState::Orbit;
                n_pipe += s == detail::ClientState::Pipeline;
            }
            assert(n_free + n_orbit + n_pipe == K);
            assert(n_orbit == orbit);
            assert((n_pipe == 1) == locked);
        }
#endif
        update_busy();
    }
    advance_time(horizon);

    RawStats r;
    r.duration = horizon - warmup;
    if (r.duration > 0.0) {
        r.p1 = locked_int / r.duration;
        r.L = orbit_int / r.duration;
        r.LS = system_int / r.duration;
    }
    r.locked_integral = locked_int;
    r.orbit_integral = orbit_int;
    r.occupancy_clipped_sum = occ_clipped;
    r.seizures = seizures;
    r.releases = releases;
    r.completions = completions;
    r.discards_up = d_up;
    r.discards_down = d_down;
    r.W_all = seizures > 0 ? wait_sum_all / seizures : 0.0;
    r.mean_occupancy = seizures > 0 ? occupancy_sum / seizures : 0.0;
    r.WS_all = releases > 0 ? stay_sum_all / releases : 0.0;
    r.W_completed = ok_released > 0 ? wait_sum_ok / ok_released : 0.0;
    r.WS_completed = ok_released > 0 ? stay_sum_ok / ok_released : 0.0;
    r.discard_rate = releases > 0 ? static_cast<double>(d_up + d_down) / releases : 0.0;
    r.bp_count = bp_count;
    r.bp_mean = bp_count > 0 ? bp_sum / bp_count : 0.0;
    return r;
}

// all replications, indexed by rep_index; order-independent of thread count
inline std::vector<RawStats> run_replications(const SimConfig& config) {
    config.validate();
    const int R = config.replications;
    std::vector<RawStats> reps(static_cast<std::size_t>(R));
    int nthreads = config.threads > 0
                       ? config.threads
                       : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    nthreads = std::min(nthreads, R);
    if (nthreads <= 1) {
        for (int i = 0; i < R; ++i) reps[static_cast<std::size_t>(i)] = run_replication(config, i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int w = 0; w < nthreads; ++w) {
            pool.emplace_back([&, w]() {
                for (int i = w; i < R; i += nthreads)
                    reps[static_cast<std::size_t>(i)] = run_replication(config, i);
            });
        }
        for (auto& th : pool) th.join();
    }
    return reps;
}

inline SimEstimates aggregate_estimates(const SimConfig& config,
                                        const std::vector<RawStats>& reps) {
    SimEstimates est;
    est.replications = static_cast<int>(reps.size());
    est.master_seed = config.master_seed;
    auto collect = [&](const std::string& name, auto getter, auto filter) {
        std::vector<double> xs;
        xs.reserve(reps.size());
        for (const RawStats& r : reps)
            if (filter(r)) xs.push_back(getter(r));
        est.metrics[name] = mean_ci(xs);
    };
    auto always = [](const RawStats&) { return true; };
    collect("p1", [](const RawStats& r) { return r.p1; }, always);
    collect("L", [](const RawStats& r) { return r.L; }, always);
    collect("LS", [](const RawStats& r) { return r.LS; }, always);
    collect("W", [](const RawStats& r) { return r.W_all; }, always);
    collect("WS", [](const RawStats& r) { return r.WS_all; }, always);
    collect("W_completed", [](const RawStats& r) { return r.W_completed; },
            [](const RawStats& r) { return r.completions > 0; });
    collect("WS_completed", [](const RawStats& r) { return r.WS_completed; },
            [](const RawStats& r) { return r.completions > 0; });
    collect("mean_occupancy", [](const RawStats& r) { return r.mean_occupancy; },
            [](const RawStats& r) { return r.seizures > 0; });
    collect("discard_rate", [](const RawStats& r) { return r.discard_rate; },
            [](const RawStats& r) { return r.releases > 0; });
    collect("E_BP", [](const RawStats& r) { return r.bp_mean; },
            [](const RawStats& r) { return r.bp_count > 0; });
    collect("bp_count", [](const RawStats& r) { return static_cast<double>(r.bp_count); }, always);
    return est;
}

inline SimEstimates run_experiment(const SimConfig& config) {
    return aggregate_estimates(config, run_replications(config));
}

}  // namespace retrialq
