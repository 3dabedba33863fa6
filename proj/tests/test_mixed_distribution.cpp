#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "retrialq/ctmc.hpp"
#include "retrialq/mixed_distribution.hpp"
#include "retrialq/rng.hpp"
#include "retrialq/timedist.hpp"

using namespace retrialq;

TEST_CASE("exponential builder") {
    const auto d = exponential_dist(0.1);
    CHECK_THAT(d.moment(1), Catch::Matchers::WithinRel(10.0, 1e-5));
    CHECK_THAT(d.total_mass(), Catch::Matchers::WithinAbs(1.0, 1e-9));
    CHECK_THAT(d.cdf(10.0), Catch::Matchers::WithinAbs(1.0 - std::exp(-1.0), 1e-6));

    const auto d1 = exponential_dist(1.0);
    CHECK_THAT(d1.moment(2), Catch::Matchers::WithinRel(2.0, 1e-5));
    CHECK_THAT(d1.moment(0), Catch::Matchers::WithinAbs(1.0, 1e-9));
    CHECK_THAT(d1.lst(1.0), Catch::Matchers::WithinAbs(0.5, 1e-6));
    CHECK_THAT(d1.lst(0.0), Catch::Matchers::WithinAbs(d1.total_mass(), 1e-15));

    CHECK_THROWS_AS(exponential_dist(0.0), std::domain_error);
    CHECK_THROWS_AS(exponential_dist(1.0, 1e-3), std::domain_error);
}

TEST_CASE("convolution of exponentials reproduces the Erlang law") {
    const auto e = exponential_dist(1.0, 1e-10, 1 << 12);
    const auto c = convolve(e, e, make_uniform_grid(0.0, 2.0 * e.hi(), 1 << 13));
    CHECK_THAT(c.cdf(2.0), Catch::Matchers::WithinAbs(1.0 - 3.0 * std::exp(-2.0), 1e-5));
    CHECK_THAT(c.total_mass(), Catch::Matchers::WithinAbs(e.total_mass() * e.total_mass(), 1e-8));
    CHECK_THAT(c.moment(1), Catch::Matchers::WithinRel(2.0, 1e-5));
    // density against the Erlang-2 pdf t e^{-t}; the bound is the PL
    // interpolation error of the 2^12-cell inputs
    for (double t : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        CHECK_THAT(c.density_at(t), Catch::Matchers::WithinAbs(t * std::exp(-t), 1e-5));
    }
}

TEST_CASE("atom algebra under convolution") {
    const auto a = make_atom_dist(2.0, 1.0);
    const auto b = make_atom_dist(3.0, 0.5);
    const auto c = convolve(a, b);
    REQUIRE(c.atoms().size() == 1);
    CHECK(c.atoms()[0].t == 5.0);
    CHECK(c.atoms()[0].mass == 0.5);
    CHECK(c.density_mass() == 0.0);

    // atom (x) density: a pure shift; the jump of the exponential at its
    // origin lands between output nodes and smears over one cell, so the
    // mean is O(grid step) accurate here
    const auto e = exponential_dist(1.0, 1e-10, 1 << 12);
    const auto shifted = convolve(make_atom_dist(2.0, 0.5), e);
    CHECK_THAT(shifted.total_mass(), Catch::Matchers::WithinAbs(0.5 * e.total_mass(), 1e-12));
    CHECK_THAT(shifted.density_at(3.0), Catch::Matchers::WithinRel(0.5 * std::exp(-1.0), 5e-4));
    CHECK(shifted.density_at(1.9) == 0.0);
    CHECK_THAT(shifted.moment(1), Catch::Matchers::WithinRel(0.5 * (2.0 + 1.0), 5e-4));
}

TEST_CASE("mass conservation under convolution of defective parts") {
    auto half = exponential_dist(1.0, 1e-10, 1 << 12);
    half.scale_density(0.5 / half.density_mass());
    const auto c = convolve(half, half);
    CHECK_THAT(c.total_mass(), Catch::Matchers::WithinAbs(0.25, 1e-8));
}

TEST_CASE("mean additivity for proper distributions") {
    const auto a = exponential_dist(0.5, 1e-10, 1 << 12);
    const auto b = exponential_dist(2.0, 1e-10, 1 << 12);
    // front-zoned output: the summed density has its curvature near zero
    const auto c = convolve(a, b, make_zoned_grid(a.hi() + b.hi(), 8.0, 1 << 14, 1 << 14));
    CHECK_THAT(c.moment(1), Catch::Matchers::WithinRel(a.moment(1) + b.moment(1), 1e-6));
}

TEST_CASE("lst is completely monotone-ish: nonincreasing and log-convex") {
    const auto d = convolve(exponential_dist(0.5, 1e-10, 1 << 12),
                            exponential_dist(1.5, 1e-10, 1 << 12));
    std::vector<double> s, ls;
    for (double x = 0.0; x <= 4.0; x += 0.125) {
        s.push_back(x);
        ls.push_back(d.lst(x));
    }
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(ls[i] <= ls[i - 1] + 1e-15);
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        const double lc = std::log(ls[i - 1]) + std::log(ls[i + 1]) - 2.0 * std::log(ls[i]);
        CHECK(lc >= -1e-10);
    }
}

TEST_CASE("cdf, quantile and sampling agree") {
    // mixed distribution: defective density plus two atoms
    auto dens = exponential_dist(1.0, 1e-10, 1 << 12);
    dens.scale_density(0.6 / dens.density_mass());
    MixedDistribution d(dens.grid(), dens.density(), {{0.5, 0.25}, {2.5, 0.15}});
    CHECK_THAT(d.total_mass(), Catch::Matchers::WithinAbs(1.0, 1e-12));

    // cdf jumps across the atoms
    CHECK_THAT(d.cdf(0.5) - d.cdf_left(0.5), Catch::Matchers::WithinAbs(0.25, 1e-12));
    CHECK_THAT(d.cdf(2.5) - d.cdf_left(2.5), Catch::Matchers::WithinAbs(0.15, 1e-12));

    // quantile is a generalized inverse
    for (double u = 0.02; u < 1.0; u += 0.02) {
        const double t = d.quantile(u);
        CHECK(d.cdf(t) >= u - 1e-9);
        CHECK(d.cdf_left(t) <= u + 1e-9);
    }

    // ecdf of samples vs cdf
    Rng rng(77);
    std::vector<double> xs(200000);
    for (double& x : xs) x = d.sample(rng);
    CHECK(ks_distance(d, xs) <= 0.005);
}

TEST_CASE("validation errors") {
    CHECK_THROWS_AS(MixedDistribution({0.0, 1.0, 0.5}, {0.0, 1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(MixedDistribution({0.0, 1.0}, {0.0, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(MixedDistribution({0.0, 1.0}, {0.0, 0.0}, {{0.5, -0.1}}),
                    std::invalid_argument);
}

TEST_CASE("an output grid too coarse to hold the mass is rejected") {
    const auto a = exponential_dist(4.0, 1e-10, 1 << 12);
    const auto b = exponential_dist(4.0, 1e-10, 1 << 12);
    CHECK_THROWS_AS(convolve(a, b, make_uniform_grid(0.0, a.hi() + b.hi(), 4)),
                    GridResolutionError);
}
