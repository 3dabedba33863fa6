#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "retrialq/analytic.hpp"
#include "retrialq/mixed_distribution.hpp"

namespace retrialq {

// Degenerate all-exponential case: instantaneous channel, holding time
// Exp(nu). State space {(c, n): c in {0,1}, 0 <= n <= K-1}, of size 2K.
struct CtmcSpec {
    int K = 2;
    double lambda = 1.0;
    double gamma = 1.0;
    double nu = 1.0;

    void validate() const {
        if (K < 2) throw std::domain_error("CtmcSpec: K must be >= 2");
        if (!(lambda > 0.0 && gamma > 0.0 && nu > 0.0))
            throw std::domain_error("CtmcSpec: rates must be > 0");
    }
};

namespace detail {

// Grassmann-Taksar-Heyman state elimination: stationary vector of a CTMC
// given as an off-diagonal rate matrix. Subtraction-free, entrywise accurate
// even when probabilities span many orders of magnitude.
inline std::vector<double> gth_stationary(std::vector<std::vector<double>> R) {
    const std::size_t n = R.size();
    for (std::size_t k = n - 1; k >= 1; --k) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += R[k][j];
        if (!(s > 0.0)) throw std::runtime_error("gth: reducible chain");
        for (std::size_t i = 0; i < k; ++i) {
            const double f = R[i][k] / s;
            for (std::size_t j = 0; j < k; ++j) R[i][j] += f * R[k][j];
        }
    }
    std::vector<double> pi(n, 0.0);
    pi[0] = 1.0;
    for (std::size_t k = 1; k < n; ++k) {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            num += pi[j] * R[j][k];
            den += R[k][j];
        }
        pi[k] = num / den;
    }
    double total = 0.0;
    for (double x : pi) total += x;
    for (double& x : pi) x /= total;
    return pi;
}

// dense linear solve with partial pivoting in extended precision
inline std::vector<long double> lu_solve(std::vector<std::vector<long double>> M,
                                         std::vector<long double> b) {
    const std::size_t n = M.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(M[i][k]) > std::abs(M[piv][k])) piv = i;
        if (M[piv][k] == 0.0L) throw std::runtime_error("lu_solve: singular system");
        std::swap(M[k], M[piv]);
        std::swap(b[k], b[piv]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const long double f = M[i][k] / M[k][k];
            if (f == 0.0L) continue;
            for (std::size_t j = k; j < n; ++j) M[i][j] -= f * M[k][j];
            b[i] -= f * b[k];
        }
    }
    std::vector<long double> x(n, 0.0L);
    for (std::size_t i = n; i-- > 0;) {
        long double acc = b[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= M[i][j] * x[j];
        x[i] = acc / M[i][i];
    }
    return x;
}

}  // namespace detail

// Exact metrics of the all-exponential special case. pi is computed by GTH
// elimination; the mean busy period is the expected first-passage time
// (1,0) -> (0,0), solved densely and cross-checked against the regenerative
// identity (which is the accurate route when the passage time is extreme).
inline PerformanceReport ctmc_metrics(const CtmcSpec& spec) {
    spec.validate();
    const int K = spec.K;
    const std::size_t n = static_cast<std::size_t>(2 * K);
    auto idx = [K](int c, int m) { return static_cast<std::size_t>(c * K + m); };

    std::vector<std::vector<double>> R(n, std::vector<double>(n, 0.0));
    for (int m = 0; m < K; ++m) {
        R[idx(0, m)][idx(1, m)] += (K - m) * spec.lambda;
        if (m > 0) R[idx(0, m)][idx(1, m - 1)] += m * spec.gamma;
        if (K - 1 - m > 0) R[idx(1, m)][idx(1, m + 1)] += (K - 1 - m) * spec.lambda;
        R[idx(1, m)][idx(0, m)] += spec.nu;
    }
    const std::vector<double> pi = detail::gth_stationary(R);

    PerformanceReport r;
    r.v = spec.nu;
    r.p0.resize(static_cast<std::size_t>(K));
    double p1 = 0.0, L = 0.0;
    for (int m = 0; m < K; ++m) {
        r.p0[m] = pi[idx(0, m)];
        p1 += pi[idx(1, m)];
        L += m * (pi[idx(0, m)] + pi[idx(1, m)]);
    }
    r.p1 = p1;
    r.L = L;
    r.W = L / (spec.nu * p1);
    r.LS = L + p1;
    r.WS = r.W + 1.0 / spec.nu;

    // first passage (1,0) -> (0,0): solve (-Q_tt) h = 1 over transient states
    const std::size_t nt = n - 1;  // all states except (0,0)
    auto tidx = [&](std::size_t full) { return full - 1; };
    std::vector<std::vector<long double>> M(nt, std::vector<long double>(nt, 0.0L));
    std::vector<long double> rhs(nt, 1.0L);
    for (std::size_t i = 1; i < n; ++i) {
        long double out = 0.0L;
        for (std::size_t j = 0; j < n; ++j) out += R[i][j];
        M[tidx(i)][tidx(i)] = out;
        for (std::size_t j = 1; j < n; ++j)
            if (j != i) M[tidx(i)][tidx(j)] -= R[i][j];
    }
    const double pi00 = pi[idx(0, 0)];
    const double e_bp_reg = (1.0 / (K * spec.lambda)) * (1.0 - pi00) / pi00;
    double e_bp = e_bp_reg;
    try {
        const auto h = detail::lu_solve(std::move(M), std::move(rhs));
        const double e_bp_lu = static_cast<double>(h[tidx(idx(1, 0))]);
        if (std::isfinite(e_bp_lu) && std::abs(e_bp_lu - e_bp_reg) <= 1e-12 * e_bp_reg)
            e_bp = e_bp_lu;
    } catch (const std::runtime_error&) {
        // keep the regenerative value
    }
    r.e_bp = e_bp;
    return r;
}

// sup distance between the model cdf and the sample ecdf; atoms handled via
// left/right limits at every candidate point
inline double ks_distance(const MixedDistribution& d, std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("ks_distance: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    auto count_leq = [&](double x) {
        return static_cast<double>(std::upper_bound(samples.begin(), samples.end(), x) -
                                   samples.begin());
    };
    auto count_lt = [&](double x) {
        return static_cast<double>(std::lower_bound(samples.begin(), samples.end(), x) -
                                   samples.begin());
    };
    double worst = 0.0;
    auto probe = [&](double x) {
        worst = std::max(worst, std::abs(count_leq(x) / n - d.cdf(x)));
        worst = std::max(worst, std::abs(count_lt(x) / n - d.cdf_left(x)));
    };
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i == 0 || samples[i] != samples[i - 1]) probe(samples[i]);
    }
    for (const Atom& a : d.atoms()) probe(a.t);
    probe(std::max(samples.back(), d.hi()));
    return worst;
}

}  // namespace retrialq
