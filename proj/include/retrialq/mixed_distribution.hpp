#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "retrialq/rng.hpp"

namespace retrialq {

struct Atom {
    double t;
    double mass;
};

// Signals that a convolution output grid was too coarse for the requested
// mass bookkeeping; callers should retry with a larger grid.
struct GridResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A possibly defective distribution on [0, inf): a piecewise-linear density
// on a strictly increasing grid plus a list of point masses. Immutable after
// construction; all queries are const.
class MixedDistribution {
public:
    MixedDistribution(std::vector<double> grid, std::vector<double> density,
                      std::vector<Atom> atoms = {})
        : grid_(std::move(grid)), density_(std::move(density)), atoms_(std::move(atoms)) {
        if (grid_.size() < 2 || grid_.size() != density_.size())
            throw std::invalid_argument("MixedDistribution: grid/density size mismatch");
        double dmax = 0.0;
        for (double d : density_) dmax = std::max(dmax, std::abs(d));
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            if (i + 1 < grid_.size() && !(grid_[i] < grid_[i + 1]))
                throw std::invalid_argument("MixedDistribution: grid not strictly increasing");
            if (density_[i] < 0.0) {
                if (density_[i] < -1e-12 * std::max(dmax, 1.0))
                    throw std::invalid_argument("MixedDistribution: negative density");
                density_[i] = 0.0;
            }
        }
        std::sort(atoms_.begin(), atoms_.end(),
                  [](const Atom& a, const Atom& b) { return a.t < b.t; });
        std::vector<Atom> merged;
        for (const Atom& a : atoms_) {
            if (!(a.mass > 0.0)) throw std::invalid_argument("MixedDistribution: atom mass <= 0");
            if (!merged.empty() && merged.back().t == a.t)
                merged.back().mass += a.mass;
            else
                merged.push_back(a);
        }
        atoms_ = std::move(merged);
        rebuild_cumulative();
    }

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& density() const { return density_; }
    const std::vector<Atom>& atoms() const { return atoms_; }

    double lo() const { return grid_.front(); }
    double hi() const { return grid_.back(); }
    double total_mass() const { return density_mass_ + atom_mass_; }
    double density_mass() const { return density_mass_; }
    double atom_mass() const { return atom_mass_; }

    // piecewise-linear density; zero outside [lo, hi]
    double density_at(double t) const {
        if (t < grid_.front() || t > grid_.back()) return 0.0;
        const std::size_t i = segment_index(t);
        const double w = grid_[i + 1] - grid_[i];
        const double f = (t - grid_[i]) / w;
        return density_[i] + (density_[i + 1] - density_[i]) * f;
    }

    double cdf(double t) const { return cdf_impl(t, /*include_atom_at_t=*/true); }
    double cdf_left(double t) const { return cdf_impl(t, /*include_atom_at_t=*/false); }

    // n-th raw moment including atoms; Gauss-Legendre(3) per segment is exact
    // for t^n against a linear density up to n = 4
    double moment(int n) const {
        if (n < 0 || n > 4) throw std::domain_error("moment: n must be in [0,4]");
        if (n == 0) return total_mass();
        static constexpr double r = 0.7745966692414834;  // sqrt(3/5)
        static constexpr double w0 = 5.0 / 9.0, w1 = 8.0 / 9.0;
        double acc = 0.0, comp = 0.0;
        auto add = [&](double x) {  // Kahan
            const double y = x - comp;
            const double t2 = acc + y;
            comp = (t2 - acc) - y;
            acc = t2;
        };
        for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
            const double a = grid_[i], b = grid_[i + 1];
            const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
            const double fa = density_[i], fb = density_[i + 1];
            auto f = [&](double x) { return fa + (fb - fa) * (x - a) / (b - a); };
            auto g = [&](double x) { return std::pow(x, n) * f(x); };
            add(half * (w0 * g(mid - half * r) + w1 * g(mid) + w0 * g(mid + half * r)));
        }
        for (const Atom& at : atoms_) add(at.mass * std::pow(at.t, n));
        return acc;
    }

    // Laplace-Stieltjes transform: exact integral of the stored PL density
    // plus atom terms. lst(0) equals total_mass.
    double lst(double s) const {
        if (s < 0.0) throw std::domain_error("lst: s must be >= 0");
        if (s == 0.0) return total_mass();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
            const double u = grid_[i], d = grid_[i + 1] - u;
            const double eu = std::exp(-s * u);
            if (eu < 1e-320) break;
            const double fu = density_[i];
            const double slope = (density_[i + 1] - fu) / d;
            const double x = s * d;
            double phi0, phi1;
            if (x < 1e-5) {
                phi0 = d * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0);
                phi1 = d * d * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0);
            } else {
                const double em = std::exp(-x);
                phi0 = (1.0 - em) / s;
                phi1 = (1.0 - (1.0 + x) * em) / (s * s);
            }
            acc += eu * (fu * phi0 + slope * phi1);
        }
        for (const Atom& at : atoms_) acc += at.mass * std::exp(-s * at.t);
        return acc;
    }

    // level u in (0, total_mass]: generalized inverse of the mixed cdf
    double quantile(double u) const {
        if (!(u > 0.0 && u <= total_mass() * (1.0 + 1e-12)))
            throw std::domain_error("quantile: level outside (0, total_mass]");
        u = std::min(u, total_mass());
        double cum = 0.0;
        std::size_t ai = 0;
        for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
            // atoms at or before the start of this segment
            while (ai < atoms_.size() && atoms_[ai].t <= grid_[i]) {
                cum += atoms_[ai].mass;
                if (cum >= u) return atoms_[ai].t;
                ++ai;
            }
            const double a = grid_[i], b = grid_[i + 1];
            // mass of the whole segment, then atoms strictly inside it
            const double seg_mass = seg_mass_[i];
            double inner_atoms = 0.0;
            std::size_t aj = ai;
            while (aj < atoms_.size() && atoms_[aj].t <= b) {
                inner_atoms += atoms_[aj].mass;
                ++aj;
            }
            if (cum + seg_mass + inner_atoms < u) {
                cum += seg_mass + inner_atoms;
                ai = aj;
                continue;
            }
            // target lies within this segment: walk its pieces in time order
            double x0 = a;
            while (true) {
                const double piece_end = (ai < atoms_.size() && atoms_[ai].t <= b)
                                             ? atoms_[ai].t
                                             : b;
                const double pm = pl_mass_between(i, x0, piece_end);
                if (cum + pm >= u) return invert_segment(i, x0, u - cum);
                cum += pm;
                if (ai < atoms_.size() && atoms_[ai].t <= b) {
                    cum += atoms_[ai].mass;
                    if (cum >= u) return atoms_[ai].t;
                    x0 = atoms_[ai].t;
                    ++ai;
                } else {
                    break;
                }
            }
        }
        while (ai < atoms_.size()) {
            cum += atoms_[ai].mass;
            if (cum >= u) return atoms_[ai].t;
            ++ai;
        }
        return grid_.back();
    }

    // draw from the mixed measure (density part by inverse transform,
    // atoms by their masses)
    double sample(Rng& rng) const {
        const double u = rng.uniform01() * total_mass();
        if (u <= density_mass_ || atoms_.empty()) {
            const double v = std::min(u, density_mass_ * (1.0 - 1e-16));
            return invert_density_only(v);
        }
        double rest = u - density_mass_;
        for (const Atom& at : atoms_) {
            if (rest <= at.mass) return at.t;
            rest -= at.mass;
        }
        return atoms_.back().t;
    }

    // scale the continuous part only; used for mass calibration by builders
    MixedDistribution& scale_density(double factor) {
        if (!(factor > 0.0)) throw std::domain_error("scale_density: factor must be > 0");
        for (double& d : density_) d *= factor;
        rebuild_cumulative();
        return *this;
    }

private:
    std::vector<double> grid_, density_;
    std::vector<Atom> atoms_;
    std::vector<double> seg_mass_, seg_cum_;  // per-segment trapezoid masses, prefix sums
    double density_mass_ = 0.0, atom_mass_ = 0.0;

    void rebuild_cumulative() {
        const std::size_t n = grid_.size();
        seg_mass_.assign(n - 1, 0.0);
        seg_cum_.assign(n, 0.0);
        double acc = 0.0, comp = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            seg_mass_[i] = 0.5 * (density_[i] + density_[i + 1]) * (grid_[i + 1] - grid_[i]);
            const double y = seg_mass_[i] - comp;
            const double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            seg_cum_[i + 1] = acc;
        }
        density_mass_ = acc;
        atom_mass_ = 0.0;
        for (const Atom& a : atoms_) atom_mass_ += a.mass;
    }

    std::size_t segment_index(double t) const {
        const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
        std::size_t i = static_cast<std::size_t>(it - grid_.begin());
        if (i == 0) return 0;
        if (i >= grid_.size()) return grid_.size() - 2;
        return i - 1;
    }

    // integral of the PL density over [x0, x1] within segment i
    double pl_mass_between(std::size_t i, double x0, double x1) const {
        const double a = grid_[i], b = grid_[i + 1];
        const double slope = (density_[i + 1] - density_[i]) / (b - a);
        auto F = [&](double x) {
            const double dx = x - a;
            return density_[i] * dx + 0.5 * slope * dx * dx;
        };
        return F(x1) - F(x0);
    }

    // solve for x in segment i with integral over [x0, x] equal to m
    double invert_segment(std::size_t i, double x0, double m) const {
        const double a = grid_[i], b = grid_[i + 1];
        const double slope = (density_[i + 1] - density_[i]) / (b - a);
        const double f0 = density_[i] + slope * (x0 - a);
        // 0.5 slope dx^2 + f0 dx - m = 0
        if (std::abs(slope) < 1e-300) {
            if (f0 <= 0.0) return b;
            return std::min(b, x0 + m / f0);
        }
        const double disc = f0 * f0 + 2.0 * slope * m;
        const double root = (disc > 0.0) ? std::sqrt(disc) : 0.0;
        double dx;
        if (slope > 0.0)
            dx = (-f0 + root) / slope;
        else
            dx = (2.0 * m) / (f0 + root);  // stable branch
        if (!(dx >= 0.0)) dx = 0.0;
        return std::min(b, x0 + dx);
    }

    double invert_density_only(double m) const {
        if (density_mass_ <= 0.0) return grid_.front();
        const auto it = std::upper_bound(seg_cum_.begin(), seg_cum_.end(), m);
        std::size_t i = static_cast<std::size_t>(it - seg_cum_.begin());
        i = (i == 0) ? 0 : i - 1;
        if (i >= seg_mass_.size()) i = seg_mass_.size() - 1;
        return invert_segment(i, grid_[i], m - seg_cum_[i]);
    }

    double cdf_impl(double t, bool include_atom_at_t) const {
        double acc = 0.0;
        if (t >= grid_.back()) {
            acc = density_mass_;
        } else if (t > grid_.front()) {
            const std::size_t i = segment_index(t);
            acc = seg_cum_[i] + pl_mass_between(i, grid_[i], t);
        }
        for (const Atom& a : atoms_) {
            if (a.t < t || (include_atom_at_t && a.t == t))
                acc += a.mass;
            else if (a.t > t)
                break;
        }
        return acc;
    }
};

inline MixedDistribution make_atom_dist(double t, double mass) {
    const double hi = std::max(1.0, t);
    return MixedDistribution({0.0, hi}, {0.0, 0.0}, {{t, mass}});
}

inline std::vector<double> make_uniform_grid(double lo, double hi, std::size_t cells) {
    if (!(hi > lo) || cells < 1) throw std::invalid_argument("make_uniform_grid: bad range");
    std::vector<double> g(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cells);
    g.back() = hi;
    return g;
}

// fine cells on [0, fine_to], coarse cells on (fine_to, hi]
inline std::vector<double> make_zoned_grid(double hi, double fine_to, std::size_t fine_cells,
                                           std::size_t coarse_cells) {
    if (fine_to >= hi) return make_uniform_grid(0.0, hi, fine_cells + coarse_cells);
    std::vector<double> g = make_uniform_grid(0.0, fine_to, fine_cells);
    const std::vector<double> tail = make_uniform_grid(fine_to, hi, coarse_cells);
    g.insert(g.end(), tail.begin() + 1, tail.end());
    return g;
}

namespace detail {

// exact integral of f_a(x) f_b(t - x) dx for piecewise-linear f_a, f_b:
// Simpson on each subinterval between merged breakpoints (the integrand is
// quadratic there)
inline double pl_conv_at(const std::vector<double>& ga, const std::vector<double>& da,
                         const std::vector<double>& gb, const std::vector<double>& db, double t) {
    const double xlo = std::max(ga.front(), t - gb.back());
    const double xhi = std::min(ga.back(), t - gb.front());
    if (!(xhi > xlo)) return 0.0;

    // segment for an increasing traversal: ga[i] <= x < ga[i+1]
    auto seg_of = [](const std::vector<double>& g, double x) -> std::size_t {
        const auto it = std::upper_bound(g.begin(), g.end(), x);
        std::size_t i = static_cast<std::size_t>(it - g.begin());
        if (i == 0) return 0;
        if (i >= g.size()) return g.size() - 2;
        return i - 1;
    };
    // segment for the decreasing y = t - x traversal: gb[j] < y <= gb[j+1],
    // so a start exactly on a node falls into the segment below it
    auto seg_below = [](const std::vector<double>& g, double y) -> std::size_t {
        const auto it = std::lower_bound(g.begin(), g.end(), y);
        std::size_t i = static_cast<std::size_t>(it - g.begin());
        if (i <= 1) return 0;
        if (i >= g.size()) return g.size() - 2;
        return i - 1;
    };

    std::size_t ia = seg_of(ga, xlo);
    std::size_t jb = seg_below(gb, t - xlo);
    double acc = 0.0;
    double cur = xlo;
    while (cur < xhi) {
        const double next_a = ga[ia + 1];
        const double next_b = t - gb[jb];  // where t - x falls to gb[jb]
        double nxt = std::min(xhi, next_a);
        if (next_b > cur && next_b < nxt) nxt = next_b;
        if (!(nxt > cur)) {  // degenerate; step indices to guarantee progress
            if (next_a <= cur && ia + 2 < ga.size()) {
                ++ia;
                continue;
            }
            if (next_b <= cur && jb > 0) {
                --jb;
                continue;
            }
            break;
        }
        const double mid = 0.5 * (cur + nxt);
        const double wa0 = ga[ia + 1] - ga[ia];
        const double sa = (da[ia + 1] - da[ia]) / wa0;
        auto fa = [&](double x) { return da[ia] + sa * (x - ga[ia]); };
        const double wb0 = gb[jb + 1] - gb[jb];
        const double sb = (db[jb + 1] - db[jb]) / wb0;
        auto fb = [&](double y) { return db[jb] + sb * (y - gb[jb]); };
        const double p0 = fa(cur) * fb(t - cur);
        const double pm = fa(mid) * fb(t - mid);
        const double p1 = fa(nxt) * fb(t - nxt);
        acc += (nxt - cur) / 6.0 * (p0 + 4.0 * pm + p1);
        cur = nxt;
        if (cur >= next_a && ia + 2 < ga.size()) ++ia;
        if (cur >= next_b && jb > 0) --jb;
    }
    return acc;
}

}  // namespace detail

inline constexpr std::size_t kDefaultConvCells = std::size_t{1} << 14;

// Distribution of the independent sum. The continuous part is the exact
// convolution of the stored PL representations evaluated at the output nodes;
// its mass is then calibrated to the exactly known product so that
// mass(a (*) b) = mass(a) * mass(b) holds to rounding.
inline MixedDistribution convolve(const MixedDistribution& a, const MixedDistribution& b,
                                  std::vector<double> out_grid = {}) {
    if (out_grid.empty())
        out_grid = make_uniform_grid(a.lo() + b.lo(), a.hi() + b.hi(), kDefaultConvCells);

    const std::size_t n = out_grid.size();
    std::vector<double> dens(n, 0.0);
    const bool a_has_density = a.density_mass() > 0.0;
    const bool b_has_density = b.density_mass() > 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = out_grid[k];
        double v = 0.0;
        if (a_has_density && b_has_density)
            v = detail::pl_conv_at(a.grid(), a.density(), b.grid(), b.density(), t);
        for (const Atom& at : a.atoms()) v += at.mass * b.density_at(t - at.t);
        for (const Atom& at : b.atoms()) v += at.mass * a.density_at(t - at.t);
        dens[k] = std::max(0.0, v);
    }

    std::vector<Atom> atoms;
    double atom_product_mass = 0.0;
    for (const Atom& x : a.atoms())
        for (const Atom& y : b.atoms()) {
            atoms.push_back({x.t + y.t, x.mass * y.mass});
            atom_product_mass += x.mass * y.mass;
        }

    MixedDistribution out(std::move(out_grid), std::move(dens), std::move(atoms));
    const double want = a.total_mass() * b.total_mass() - atom_product_mass;
    const double got = out.density_mass();
    if (want > 0.0) {
        if (got <= 0.0) throw GridResolutionError("convolve: density lost on output grid");
        const double scale = want / got;
        if (std::abs(scale - 1.0) > 1e-3)
            throw GridResolutionError("convolve: output grid too coarse for mass bookkeeping");
        out.scale_density(scale);
    }
    return out;
}

}  // namespace retrialq
