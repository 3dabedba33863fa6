#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "retrialq/ctmc.hpp"
#include "retrialq/rng.hpp"
#include "retrialq/timedist.hpp"

using namespace retrialq;

namespace {
const ChannelModel kLin3{CapacityMode::Linear, 3.0, 1.0, 0.0};       // success prob 1/2 at T=3
const ChannelModel kNon1{CapacityMode::Nonlinear, 1.0, 1.0, 1.0};    // success prob e^-1 at T=1
const ChannelModel kNonPaper{CapacityMode::Nonlinear, 3.0, 2.0, 1.0};
}  // namespace

TEST_CASE("one-way distribution, defective and occupancy") {
    const auto def = oneway_com_dist(kLin3, 3.0, Semantics::Defective);
    CHECK_THAT(def.total_mass(), Catch::Matchers::WithinAbs(0.5, 1e-9));
    CHECK(def.atoms().empty());

    const auto occ = oneway_com_dist(kLin3, 3.0, Semantics::Occupancy);
    CHECK_THAT(occ.total_mass(), Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE(occ.atoms().size() == 1);
    CHECK(occ.atoms()[0].t == 3.0);
    CHECK_THAT(occ.atoms()[0].mass, Catch::Matchers::WithinAbs(0.5, 1e-12));

    const auto non = oneway_com_dist(kNon1, 1.0, Semantics::Defective);
    CHECK_THAT(non.total_mass(), Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-9));

    // cdf agrees with the closed channel law on the truncated range
    for (double t : {0.3, 0.8, 1.5, 2.9}) {
        CHECK_THAT(def.cdf(t), Catch::Matchers::WithinAbs(com_time_cdf(kLin3, t), 2e-7));
    }
}

TEST_CASE("total time distribution masses") {
    const auto def = total_time_distribution(kLin3, 0.1, 3.0, Semantics::Defective);
    CHECK_THAT(def.total_mass(), Catch::Matchers::WithinAbs(0.25, 1e-6));
    CHECK(def.cdf(0.0) == 0.0);
    CHECK(def.cdf(-1.0) == 0.0);

    const auto occ = total_time_distribution(kLin3, 0.1, 3.0, Semantics::Occupancy);
    CHECK_THAT(occ.total_mass(), Catch::Matchers::WithinAbs(1.0, 1e-8));
    REQUIRE_FALSE(occ.atoms().empty());
    CHECK(occ.atoms().back().t == 3.0);
    CHECK_THAT(occ.atoms().back().mass, Catch::Matchers::WithinAbs(0.5, 1e-9));
}

TEST_CASE("occupancy lst matches protocol Monte Carlo") {
    const auto occ = total_time_distribution(kLin3, 0.1, 3.0, Semantics::Occupancy);
    Rng rng(4242);
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0, mean_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = sample_total_time(kLin3, 0.1, 3.0, Semantics::Occupancy, rng);
        const double e = std::exp(-z);
        sum += e;
        sum2 += e * e;
        mean_sum += z;
    }
    const double mc = sum / n;
    const double se = std::sqrt((sum2 / n - mc * mc) / n);
    CHECK(std::abs(occ.lst(1.0) - mc) <= 3.0 * se);

    const double mc_mean = mean_sum / n;
    CHECK_THAT(occ.moment(1), Catch::Matchers::WithinRel(mc_mean, 5e-3));
}

TEST_CASE("protocol ecdf vs constructed cdfs") {
    const double mu = 0.1, T = 3.0;
    const auto occ = total_time_distribution(kNonPaper, mu, T, Semantics::Occupancy);
    const auto cond = normalized(total_time_distribution(kNonPaper, mu, T, Semantics::Defective));
    Rng rng(99);
    std::vector<double> zs, ts;
    // conditioning keeps only ~p^2 of the defective draws; sample until the
    // accepted count is large enough for the KS bound
    while (ts.size() < 200000) {
        zs.push_back(sample_total_time(kNonPaper, mu, T, Semantics::Occupancy, rng));
        const double t = sample_total_time(kNonPaper, mu, T, Semantics::Defective, rng);
        if (!std::isnan(t)) ts.push_back(t);
    }
    CHECK(ks_distance(occ, zs) <= 0.005);
    CHECK(ks_distance(cond, ts) <= 0.005);
}

TEST_CASE("linear-case density of Y agrees with the quadrature law") {
    const double mu = 0.1, T = 3.0;
    const auto up = oneway_com_dist(kLin3, T, Semantics::Defective);
    const auto serv = exponential_dist(mu);
    const double hi = up.hi() + serv.hi();
    const auto y = convolve(up, serv, make_zoned_grid(hi, T + 3.0, 1 << 13, 1 << 13));
    for (int i = 1; i <= 20; ++i) {
        const double t = 2.0 * T * i / 20.0;
        CHECK_THAT(y.density_at(t),
                   Catch::Matchers::WithinAbs(fy_linear_by_quadrature(t, kLin3, mu, T), 1e-4));
    }
    CHECK(fy_linear_by_quadrature(1e-9, kLin3, mu, T) == 0.0);

    // total defective mass of Y equals the one-way success probability
    const double p = success_probability(kLin3, T);
    CHECK_THAT(y.total_mass(), Catch::Matchers::WithinAbs(p * serv.total_mass(), 1e-8));
}

TEST_CASE("nonlinear-case total cdf agrees with the quadrature law") {
    const double mu = 0.1, T = 3.0;
    const auto def = total_time_distribution(kNonPaper, mu, T, Semantics::Defective);
    for (int i = 1; i <= 20; ++i) {
        const double t = 2.0 * T * i / 20.0;
        CHECK_THAT(def.cdf(t), Catch::Matchers::WithinAbs(
                                   total_cdf_nonlinear_by_quadrature(t, kNonPaper, mu, T), 1e-4));
    }
    CHECK(total_cdf_nonlinear_by_quadrature(0.0, kNonPaper, mu, T) == 0.0);
    const double p = success_probability(kNonPaper, T);
    CHECK_THAT(total_cdf_nonlinear_by_quadrature(400.0, kNonPaper, mu, T),
               Catch::Matchers::WithinAbs(p * p, 1e-6));
}

TEST_CASE("grid refinement stability") {
    const double mu = 0.1, T = 3.0;
    const GridOptions base;
    const GridOptions fine = base.refined(2);
    const auto a = total_time_distribution(kLin3, mu, T, Semantics::Occupancy, base);
    const auto b = total_time_distribution(kLin3, mu, T, Semantics::Occupancy, fine);
    CHECK_THAT(a.moment(1), Catch::Matchers::WithinRel(b.moment(1), 1e-6));
    for (double s : {0.1, 1.0, 10.0}) {
        const double va = a.lst(s), vb = b.lst(s);
        const double tol = std::max(1e-6 * std::abs(vb), 1e-9 * b.total_mass());
        CHECK(std::abs(va - vb) <= tol);
    }
}

TEST_CASE("normalized conditioning") {
    const auto def = total_time_distribution(kLin3, 0.1, 3.0, Semantics::Defective);
    const auto cond = normalized(def);
    CHECK_THAT(cond.total_mass(), Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(cond.cdf(5.0) * def.total_mass(), Catch::Matchers::WithinAbs(def.cdf(5.0), 1e-12));
}
