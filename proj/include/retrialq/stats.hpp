#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace retrialq {

struct Estimate {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double ci_low = std::numeric_limits<double>::quiet_NaN();
    double ci_high = std::numeric_limits<double>::quiet_NaN();
    int n = 0;

    bool has_ci() const { return n >= 2 && std::isfinite(ci_low) && std::isfinite(ci_high); }
    bool covers(double x) const { return has_ci() && ci_low <= x && x <= ci_high; }
};

// t-distribution confidence interval over independent replication means
inline Estimate mean_ci(const std::vector<double>& xs, double confidence = 0.95) {
    Estimate e;
    e.n = static_cast<int>(xs.size());
    if (xs.empty()) return e;
    double sum = 0.0;
    for (double x : xs) sum += x;
    e.mean = sum / e.n;
    if (e.n < 2) {
        e.ci_low = e.ci_high = e.mean;
        return e;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    const double sd = std::sqrt(ss / (e.n - 1));
    const boost::math::students_t dist(e.n - 1);
    const double tq = boost::math::quantile(dist, 0.5 + confidence / 2.0);
    const double half = tq * sd / std::sqrt(static_cast<double>(e.n));
    e.ci_low = e.mean - half;
    e.ci_high = e.mean + half;
    return e;
}

}  // namespace retrialq
