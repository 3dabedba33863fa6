#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "retrialq/mixed_distribution.hpp"

namespace retrialq {

// Finite-source retrial system: K clients, each free client starts a
// transaction at rate lambda, each orbiting client retries at rate gamma,
// the database serves at rate mu, transmissions time out after `timeout`.
struct QueueParams {
    int K = 2;
    double lambda = 1.0;
    double gamma = 1.0;
    double mu = 1.0;
    double timeout = 1.0;

    void validate() const {
        if (K < 2) throw std::domain_error("QueueParams: K must be >= 2");
        if (!(lambda > 0.0 && gamma > 0.0 && mu > 0.0 && timeout > 0.0))
            throw std::domain_error("QueueParams: rates and timeout must be > 0");
    }
};

struct PerformanceReport {
    double v = 0.0;    // 1 / beta_1
    double p1 = 0.0;   // server utilization
    double L = 0.0;    // mean orbit size
    double W = 0.0;    // mean orbit wait per transaction
    double LS = 0.0;   // mean number in system
    double WS = 0.0;   // mean staying time
    double e_bp = 0.0; // mean busy period
    std::vector<double> q, C, p0;
};

// server-holding time as seen by the solver: its LST and mean
struct HoldingTime {
    std::function<double(double)> lst;
    double mean = 0.0;
};

inline HoldingTime exponential_holding(double nu) {
    if (!(nu > 0.0)) throw std::domain_error("exponential_holding: nu must be > 0");
    return {[nu](double s) { return nu / (nu + s); }, 1.0 / nu};
}

inline HoldingTime make_holding(const MixedDistribution& dist) {
    if (std::abs(dist.total_mass() - 1.0) > 1e-6)
        throw std::invalid_argument(
            "make_holding: distribution must be proper (occupancy semantics or renormalized)");
    auto d = std::make_shared<MixedDistribution>(dist);
    return {[d](double s) { return d->lst(s); }, d->moment(1)};
}

inline double binom_coeff(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

namespace detail {

struct Eq5Coeffs {
    double u, v, w;
};

inline Eq5Coeffs eq5_coeffs(const QueueParams& p, double beta_mlam, int m) {
    const double one_minus = 1.0 - beta_mlam;
    return {((p.K - m - 1) * p.gamma + (m + 1) * p.lambda) * one_minus +
                m * p.gamma * beta_mlam,
            (m + 1) * (p.lambda - p.gamma) * one_minus,
            (p.K - m) * p.gamma * beta_mlam};
}

}  // namespace detail

// Downward recursion for the transformed idle-state quantities under the
// boundary normalization q_{0,K-1} = 1: returns C_m with C_{K-1} = 1.
inline std::vector<double> solve_coefficients(const QueueParams& params,
                                              const std::function<double(double)>& beta) {
    params.validate();
    const int K = params.K;
    std::vector<double> C(static_cast<std::size_t>(K) + 1, 0.0);  // sentinel C[K] = 0
    C[K - 1] = 1.0;
    for (int m = K - 1; m >= 1; --m) {
        const auto c = detail::eq5_coeffs(params, beta(m * params.lambda), m);
        if (!(c.w > 0.0)) throw std::runtime_error("solve_coefficients: vanishing pivot");
        C[m - 1] = (c.u * C[m] + c.v * C[m + 1]) / c.w;
    }
    C.resize(static_cast<std::size_t>(K));
    return C;
}

inline std::vector<double> stationary_q(const QueueParams& params, const HoldingTime& holding) {
    const int K = params.K;
    const double v = 1.0 / holding.mean;
    std::vector<double> q = solve_coefficients(params, holding.lst);
    const double denom =
        (v + params.lambda + (K - 1) * params.gamma) * q[0] + (params.lambda - params.gamma) * q[1];
    const double qK1 = v / denom;
    for (double& x : q) x *= qK1;
    for (std::size_t m = 0; m < q.size(); ++m) {
        if (!(q[m] > 0.0) || !std::isfinite(q[m])) {
            std::ostringstream oss;
            oss << "stationary_q: nonpositive q[" << m << "] = " << q[m] << " (K=" << K
                << ", lambda=" << params.lambda << ", gamma=" << params.gamma << ")";
            throw std::runtime_error(oss.str());
        }
    }
    return q;
}

// invert the discrete transformation: p_n = sum_m (-1)^m C(K-1-n+m, m) q_{K-1-n+m}
inline std::vector<double> recover_p0(const std::vector<double>& q) {
    const int K = static_cast<int>(q.size());
    std::vector<double> p0(q.size(), 0.0);
    for (int n = 0; n < K; ++n) {
        long double acc = 0.0L, comp = 0.0L;
        for (int m = 0; m <= n; ++m) {
            const long double term = (m % 2 == 0 ? 1.0L : -1.0L) *
                                     static_cast<long double>(binom_coeff(K - 1 - n + m, m)) *
                                     static_cast<long double>(q[K - 1 - n + m]);
            const long double y = term - comp;
            const long double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
        double pn = static_cast<double>(acc);
        if (pn < -1e-9) {
            std::ostringstream oss;
            oss << "recover_p0: negative probability p[" << n << "] = " << pn;
            throw std::runtime_error(oss.str());
        }
        p0[n] = std::max(0.0, pn);
    }
    return p0;
}

// max residual of the three-term balance relation over m = 1..K-1, relative
// to the largest participating term
inline double eq5_max_residual(const QueueParams& params, const std::function<double(double)>& beta,
                               const std::vector<double>& q) {
    const int K = params.K;
    double worst = 0.0;
    for (int m = 1; m <= K - 1; ++m) {
        const auto c = detail::eq5_coeffs(params, beta(m * params.lambda), m);
        const double qm1 = (m + 1 < K) ? q[m + 1] : 0.0;
        const double r = c.u * q[m] - c.w * q[m - 1] + c.v * qm1;
        const double scale =
            std::max({std::abs(c.u * q[m]), std::abs(c.w * q[m - 1]), std::abs(c.v * qm1), 1e-300});
        worst = std::max(worst, std::abs(r) / scale);
    }
    return worst;
}

// Workspace of the mean-busy-period recursion. A and B solve the same
// three-term relation as the stationary transform, with inhomogeneous terms
// -C(K-1,m) and +C(K-1,m) beta(m lambda); boundary values at K-1 and K-2.
struct BusyPeriodWorkspace {
    std::vector<double> A, B;
    double e_bp = 0.0;
};

inline BusyPeriodWorkspace busy_period_workspace(const QueueParams& params,
                                                 const HoldingTime& holding) {
    params.validate();
    const int K = params.K;
    const double beta1 = holding.mean;
    std::vector<double> A(static_cast<std::size_t>(K) + 1, 0.0);
    std::vector<double> B(static_cast<std::size_t>(K) + 1, 0.0);
    A[K - 2] = 1.0 / (params.gamma * holding.lst((K - 1) * params.lambda));
    B[K - 2] = -1.0 / params.gamma;
    for (int m = K - 2; m >= 1; --m) {
        const double b = holding.lst(m * params.lambda);
        const auto c = detail::eq5_coeffs(params, b, m);
        if (!(c.w > 0.0)) throw std::runtime_error("busy_period: vanishing pivot");
        const double bc = binom_coeff(K - 1, m);
        A[m - 1] = (bc + c.u * A[m] + c.v * A[m + 1]) / c.w;
        B[m - 1] = (-bc * b + c.u * B[m] + c.v * B[m + 1]) / c.w;
    }
    BusyPeriodWorkspace ws;
    ws.e_bp = beta1 +
              (1.0 + beta1 * ((K - 1) * params.gamma + params.lambda)) * (A[0] + B[0]) +
              (params.lambda - params.gamma) * beta1 * (A[1] + B[1]);
    A.resize(static_cast<std::size_t>(K));
    B.resize(static_cast<std::size_t>(K));
    ws.A = std::move(A);
    ws.B = std::move(B);
    return ws;
}

inline double busy_period(const QueueParams& params, const HoldingTime& holding) {
    return busy_period_workspace(params, holding).e_bp;
}

inline PerformanceReport performance_metrics(const QueueParams& params,
                                             const HoldingTime& holding) {
    params.validate();
    const int K = params.K;
    PerformanceReport r;
    r.v = 1.0 / holding.mean;
    r.C = solve_coefficients(params, holding.lst);
    r.q = stationary_q(params, holding);
    r.p0 = recover_p0(r.q);
    r.p1 = 1.0 - r.q[0];
    r.L = K - (params.lambda + r.v) / params.lambda * r.p1;
    r.W = K / (r.v * r.p1) - 1.0 / params.lambda - 1.0 / r.v;
    r.LS = r.L + r.p1;
    r.WS = r.W + 1.0 / r.v;
    r.e_bp = busy_period(params, holding);
    return r;
}

inline PerformanceReport performance_metrics(const QueueParams& params,
                                             const MixedDistribution& dist) {
    return performance_metrics(params, make_holding(dist));
}

}  // namespace retrialq
