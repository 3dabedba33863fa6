#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "retrialq/channel.hpp"
#include "retrialq/mixed_distribution.hpp"
#include "retrialq/rng.hpp"

namespace retrialq {

// Defective keeps only the transmissions that beat the timeout (total mass
// < 1); Occupancy is the server-holding law, where a timed-out phase holds
// the server for exactly T (point mass at the timeout, total mass 1).
enum class Semantics { Defective, Occupancy };

inline std::string to_string(Semantics s) {
    return s == Semantics::Defective ? "defective" : "occupancy";
}

struct GridOptions {
    std::size_t total_cells = std::size_t{1} << 14;
    std::size_t oneway_cells = std::size_t{1} << 12;
    double tail_eps = 1e-10;
    double fine_pad = 3.0;  // fine-zone extension beyond the timeout structure

    GridOptions refined(std::size_t factor) const {
        GridOptions g = *this;
        g.total_cells *= factor;
        g.oneway_cells *= factor;
        return g;
    }
};

// Exp(mu) truncated at its (1 - tail_eps) quantile; not renormalized, so the
// stored mass is 1 - tail_eps. The density is calibrated so the stored PL
// integral equals that mass exactly.
inline MixedDistribution exponential_dist(double mu, double tail_eps = 1e-10,
                                          std::size_t cells = std::size_t{1} << 14) {
    if (!(mu > 0.0)) throw std::domain_error("exponential_dist: mu must be > 0");
    if (!(tail_eps > 0.0 && tail_eps <= 1e-6))
        throw std::domain_error("exponential_dist: tail_eps must be in (0, 1e-6]");
    const double tmax = -std::log(tail_eps) / mu;
    std::vector<double> grid = make_uniform_grid(0.0, tmax, cells);
    std::vector<double> dens(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) dens[i] = mu * std::exp(-mu * grid[i]);
    MixedDistribution d(std::move(grid), std::move(dens));
    d.scale_density((1.0 - tail_eps) / d.density_mass());
    return d;
}

namespace detail {

// {0} + geometric nodes up to timeout/100 + uniform nodes up to timeout;
// the geometric head resolves the onset when the com-time law concentrates
// near zero
inline std::vector<double> oneway_grid(double timeout, std::size_t cells) {
    const std::size_t geo = std::max<std::size_t>(cells / 4, 8);
    const std::size_t uni = std::max<std::size_t>(cells - geo, 8);
    const double t_lo = timeout * 1e-8, t_knee = timeout / 100.0;
    std::vector<double> g;
    g.reserve(geo + uni + 2);
    g.push_back(0.0);
    const double ratio = std::pow(t_knee / t_lo, 1.0 / static_cast<double>(geo - 1));
    double x = t_lo;
    for (std::size_t i = 0; i < geo; ++i, x *= ratio) g.push_back(x);
    g.back() = t_knee;
    for (std::size_t i = 1; i <= uni; ++i)
        g.push_back(t_knee + (timeout - t_knee) * static_cast<double>(i) / static_cast<double>(uni));
    g.back() = timeout;
    return g;
}

}  // namespace detail

// One-way transmission time truncated at the timeout. Defective: density on
// (0, T] with mass = success probability. Occupancy: the same density plus
// the point mass (T, 1 - success probability) for terminated transmissions.
inline MixedDistribution oneway_com_dist(const ChannelModel& channel, double timeout,
                                         Semantics mode,
                                         std::size_t cells = std::size_t{1} << 12) {
    channel.validate();
    if (!(timeout > 0.0)) throw std::domain_error("oneway_com_dist: timeout must be > 0");
    std::vector<double> grid = detail::oneway_grid(timeout, cells);
    std::vector<double> dens(grid.size(), 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i) dens[i] = com_time_pdf(channel, grid[i]);
    const double p = success_probability(channel, timeout);
    std::vector<Atom> atoms;
    if (mode == Semantics::Occupancy && 1.0 - p > 0.0) atoms.push_back({timeout, 1.0 - p});
    MixedDistribution d(std::move(grid), std::move(dens), std::move(atoms));
    if (d.density_mass() > 0.0 && p > 0.0) d.scale_density(p / d.density_mass());
    return d;
}

// uplink (x) service (x) downlink. Defective: every phase must beat the
// timeout, total mass = success_probability^2. Occupancy: server-holding time
// Z' = T 1{uplink late} + 1{uplink ok} (T_up + T_serv + min(T_down, T)),
// a proper distribution.
inline MixedDistribution total_time_distribution(const ChannelModel& channel, double mu,
                                                 double timeout, Semantics mode,
                                                 const GridOptions& opt = {}) {
    if (!(mu > 0.0)) throw std::domain_error("total_time_distribution: mu must be > 0");
    const MixedDistribution up =
        oneway_com_dist(channel, timeout, Semantics::Defective, opt.oneway_cells);
    const MixedDistribution serv = exponential_dist(mu, opt.tail_eps, opt.total_cells);
    const MixedDistribution down = oneway_com_dist(channel, timeout, mode, opt.oneway_cells);

    const double y_hi = up.hi() + serv.hi();
    const std::size_t half = opt.total_cells / 2;
    const MixedDistribution y = convolve(
        up, serv, make_zoned_grid(y_hi, std::min(y_hi, timeout + opt.fine_pad), half, half));
    const double z_hi = y.hi() + down.hi();
    MixedDistribution z = convolve(
        y, down,
        make_zoned_grid(z_hi, std::min(z_hi, 2.0 * timeout + opt.fine_pad), half, half));

    if (mode == Semantics::Occupancy) {
        const double p = success_probability(channel, timeout);
        if (1.0 - p > 0.0) {
            std::vector<Atom> atoms = z.atoms();
            atoms.push_back({timeout, 1.0 - p});
            z = MixedDistribution(z.grid(), z.density(), std::move(atoms));
        }
    }
    return z;
}

// One protocol draw of the total time. Occupancy: always returns the server
// holding time. Defective: returns the end-to-end time of a transaction whose
// both transmissions beat the timeout, NaN when it was discarded.
inline double sample_total_time(const ChannelModel& channel, double mu, double timeout,
                                Semantics mode, Rng& rng) {
    const double up = sample_com_time(channel, rng.uniform01());
    if (up > timeout)
        return mode == Semantics::Occupancy ? timeout
                                            : std::numeric_limits<double>::quiet_NaN();
    const double serve = rng.exponential(mu);
    const double down = sample_com_time(channel, rng.uniform01());
    if (down > timeout)
        return mode == Semantics::Occupancy ? up + serve + timeout
                                            : std::numeric_limits<double>::quiet_NaN();
    return up + serve + down;
}

// condition a defective distribution on "finished" (divide out the mass)
inline MixedDistribution normalized(const MixedDistribution& d) {
    const double m = d.total_mass();
    if (!(m > 0.0)) throw std::domain_error("normalized: zero total mass");
    std::vector<double> dens = d.density();
    for (double& v : dens) v /= m;
    std::vector<Atom> atoms = d.atoms();
    for (Atom& a : atoms) a.mass /= m;
    return MixedDistribution(d.grid(), std::move(dens), std::move(atoms));
}

// ---------------------------------------------------------------------------
// Independent quadrature evaluations of the same laws, used to cross-check
// the grid convolutions. Deliberately a different numerical method.
// ---------------------------------------------------------------------------

// density of Y = T_up + T_serv for the linear capacity law:
//   f_Y(y) = c mu e^{-mu y} Int_{1/min(y,T)}^{inf} e^{-c r + mu / r} dr,
// with c = alpha N ln 2
inline double fy_linear_by_quadrature(double y, const ChannelModel& channel, double mu,
                                      double timeout) {
    channel.validate();
    if (channel.mode != CapacityMode::Linear)
        throw std::domain_error("fy_linear_by_quadrature: linear mode only");
    if (!(y > 0.0)) return 0.0;
    const double c = channel.alpha * channel.noise_power * M_LN2;
    const double a = 1.0 / std::min(y, timeout);
    if (c * a - mu / a + mu * y > 700.0) return 0.0;
    const double R = a + (55.0 + mu / a) / c;
    auto g = [&](double r) { return std::exp(-c * r + mu / r); };
    const double inner = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        g, a, R, 12, 1e-12);
    return c * mu * std::exp(-mu * y) * inner;
}

namespace detail {

// J(w) = Int_0^w e^{mu s - aN (2^{1/(B s)} - 1)} ds  (nonlinear inner integral,
// exponent kept shifted by aN for stability)
inline double nonlinear_inner_integral(double w, double aN, double Bw, double mu) {
    auto g = [&](double s) {
        if (s <= 0.0) return 0.0;
        const double b = 1.0 / (Bw * s);
        if (b > 1000.0) return 0.0;
        const double e = aN * (std::exp2(b) - 1.0) - mu * s;
        if (e > 700.0) return 0.0;
        return std::exp(-e);
    };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, w, 12, 1e-12);
}

}  // namespace detail

// cdf of X = T_up + T_serv for the nonlinear law (defective in the uplink):
// F_X(x) = mu e^{-mu x} J(min(x,T)) + 1{x > T} p (1 - e^{-mu (x-T)})
inline double fx_nonlinear_cdf_by_quadrature(double x, const ChannelModel& channel, double mu,
                                             double timeout) {
    channel.validate();
    if (channel.mode != CapacityMode::Nonlinear)
        throw std::domain_error("fx_nonlinear_cdf_by_quadrature: nonlinear mode only");
    if (!(x > 0.0)) return 0.0;
    const double aN = channel.alpha * channel.noise_power;
    const double w = std::min(x, timeout);
    const double head =
        mu * std::exp(-mu * x) * detail::nonlinear_inner_integral(w, aN, channel.bandwidth, mu);
    if (x <= timeout) return head;
    const double p = success_probability(channel, timeout);
    return p * (-std::expm1(-mu * (x - timeout))) + head;
}

// cdf of T_all = T_up + T_serv + T_down for the nonlinear law, defective,
// via the piecewise outer convolution with the downlink density
inline double total_cdf_nonlinear_by_quadrature(double t, const ChannelModel& channel, double mu,
                                                double timeout) {
    channel.validate();
    if (channel.mode != CapacityMode::Nonlinear)
        throw std::domain_error("total_cdf_nonlinear_by_quadrature: nonlinear mode only");
    if (!(t > 0.0)) return 0.0;
    auto outer = [&](double lo, double hi) {
        if (!(hi > lo)) return 0.0;
        auto g = [&](double x) {
            return com_time_pdf(channel, x) * fx_nonlinear_cdf_by_quadrature(t - x, channel, mu, timeout);
        };
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, lo, hi, 10, 1e-10);
    };
    if (t <= timeout) return outer(0.0, t);
    if (t <= 2.0 * timeout) return outer(0.0, t - timeout) + outer(t - timeout, timeout);
    return outer(0.0, timeout);
}

}  // namespace retrialq
