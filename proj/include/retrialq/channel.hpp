#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace retrialq {

// Capacity law of the radio link. Signal power S is exponential with decay
// rate alpha (Rayleigh envelope, alpha = 1/(2 sigma^2)); a packet is one
// normalized unit, so the one-way communication time is 1/C(S).
enum class CapacityMode { Linear, Nonlinear };

struct ChannelModel {
    CapacityMode mode = CapacityMode::Nonlinear;
    double alpha = 1.0;        // power-decay rate of the signal-power law
    double noise_power = 1.0;  // N
    double bandwidth = 1.0;    // B, used by the nonlinear law only

    void validate() const {
        if (!(alpha > 0.0)) throw std::domain_error("channel: alpha must be > 0");
        if (!(noise_power > 0.0)) throw std::domain_error("channel: noise_power must be > 0");
        if (mode == CapacityMode::Nonlinear && !(bandwidth > 0.0))
            throw std::domain_error("channel: bandwidth must be > 0 in nonlinear mode");
    }
};

// P{S <= s} = 1 - exp(-alpha s)
inline double signal_power_cdf(const ChannelModel& m, double s) {
    m.validate();
    if (s < 0.0) throw std::domain_error("signal_power_cdf: s must be >= 0");
    return -std::expm1(-m.alpha * s);
}

inline double capacity(const ChannelModel& m, double s) {
    m.validate();
    if (s < 0.0) throw std::domain_error("capacity: s must be >= 0");
    if (m.mode == CapacityMode::Nonlinear)
        return m.bandwidth * std::log2(1.0 + s / m.noise_power);
    return s / (m.noise_power * M_LN2);
}

// CDF of the one-way communication time 1/C(S), untruncated.
//   linear:    exp(-alpha N ln2 / t)
//   nonlinear: exp(-alpha N (2^{1/(B t)} - 1))
inline double com_time_cdf(const ChannelModel& m, double t) {
    m.validate();
    if (!(t > 0.0)) throw std::domain_error("com_time_cdf: t must be > 0");
    const double aN = m.alpha * m.noise_power;
    if (m.mode == CapacityMode::Linear) {
        return std::exp(-aN * M_LN2 / t);
    }
    const double b = 1.0 / (m.bandwidth * t);
    if (b > 1000.0) return 0.0;  // exp2 would overflow; mass is zero anyway
    return std::exp(-aN * (std::exp2(b) - 1.0));
}

inline double com_time_pdf(const ChannelModel& m, double t) {
    m.validate();
    if (!(t > 0.0)) throw std::domain_error("com_time_pdf: t must be > 0");
    const double aN = m.alpha * m.noise_power;
    if (m.mode == CapacityMode::Linear) {
        const double e = aN * M_LN2 / t;
        if (e > 700.0) return 0.0;
        return std::exp(-e) * e / t;
    }
    const double b = 1.0 / (m.bandwidth * t);
    if (b > 1000.0) return 0.0;
    const double p2 = std::exp2(b);
    const double e = aN * (p2 - 1.0);
    if (e - std::log(p2) > 700.0) return 0.0;
    return std::exp(-e) * aN * M_LN2 * p2 / (m.bandwidth * t * t);
}

// probability that one one-way transmission finishes within the timeout
inline double success_probability(const ChannelModel& m, double timeout) {
    if (!(timeout > 0.0)) throw std::domain_error("success_probability: timeout must be > 0");
    return com_time_cdf(m, timeout);
}

// t solving com_time_cdf(t) = u; exact inverse of the laws above.
// u near 1 maps to arbitrarily large times (zero received power never
// finishes); callers truncate against the timeout.
inline double com_time_quantile(const ChannelModel& m, double u) {
    m.validate();
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("com_time_quantile: u must be in (0,1)");
    const double aN = m.alpha * m.noise_power;
    if (m.mode == CapacityMode::Linear) {
        return aN * M_LN2 / (-std::log(u));
    }
    return 1.0 / (m.bandwidth * std::log2(1.0 - std::log(u) / aN));
}

inline double sample_com_time(const ChannelModel& m, double u) { return com_time_quantile(m, u); }

inline std::string to_string(CapacityMode mode) {
    return mode == CapacityMode::Linear ? "linear" : "nonlinear";
}

}  // namespace retrialq
