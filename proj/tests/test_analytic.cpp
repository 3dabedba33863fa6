#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "retrialq/analytic.hpp"
#include "retrialq/ctmc.hpp"
#include "retrialq/timedist.hpp"

using namespace retrialq;

namespace {

QueueParams params(int K, double lam, double gam) {
    return {K, lam, gam, 1.0, 1.0};
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("hand-solved K=2 anchor") {
    const auto r = performance_metrics(params(2, 1.0, 1.0), exponential_holding(1.0));
    CHECK_THAT(r.p1, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
    CHECK_THAT(r.L, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
    CHECK_THAT(r.W, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(r.LS, Catch::Matchers::WithinAbs(4.0 / 3.0, 1e-12));
    CHECK_THAT(r.WS, Catch::Matchers::WithinAbs(2.0, 1e-12));
    CHECK_THAT(r.e_bp, Catch::Matchers::WithinAbs(4.0, 1e-12));
    REQUIRE(r.C.size() == 2);
    CHECK_THAT(r.C[0], Catch::Matchers::WithinAbs(3.0, 1e-12));
    CHECK_THAT(r.C[1], Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE(r.q.size() == 2);
    CHECK_THAT(r.q[0], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
    CHECK_THAT(r.q[1], Catch::Matchers::WithinAbs(1.0 / 9.0, 1e-12));
    REQUIRE(r.p0.size() == 2);
    CHECK_THAT(r.p0[0], Catch::Matchers::WithinAbs(1.0 / 9.0, 1e-12));
    CHECK_THAT(r.p0[1], Catch::Matchers::WithinAbs(2.0 / 9.0, 1e-12));

    const auto ws = busy_period_workspace(params(2, 1.0, 1.0), exponential_holding(1.0));
    CHECK_THAT(ws.A[0], Catch::Matchers::WithinAbs(2.0, 1e-12));
    CHECK_THAT(ws.B[0], Catch::Matchers::WithinAbs(-1.0, 1e-12));
    CHECK(ws.A[1] == 0.0);
    CHECK(ws.B[1] == 0.0);

    // balance-relation residual at m=1: (3/2)(1/9) - (1/2)(1/3) = 0
    CHECK(eq5_max_residual(params(2, 1.0, 1.0), exponential_holding(1.0).lst, r.q) <= 1e-12);
}

TEST_CASE("identities hold on every solve") {
    std::mt19937_64 gen(1234);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int trial = 0; trial < 60; ++trial) {
        const int K = 2 + static_cast<int>(gen() % 12);
        const auto h = exponential_holding(u(gen));
        const auto p = params(K, u(gen), u(gen));
        const auto r = performance_metrics(p, h);
        CHECK(std::abs(r.L - r.v * r.p1 * r.W) <= 1e-9 * std::max(1.0, std::abs(r.L)));
        CHECK(r.LS == r.L + r.p1);
        CHECK(r.WS == r.W + 1.0 / r.v);
        CHECK((r.p1 > 0.0 && r.p1 < 1.0));
        CHECK((r.L >= 0.0 && r.L <= K));
        CHECK(r.W >= 0.0);
        CHECK(r.e_bp > h.mean);
        // q00 is the total idle probability
        double p0sum = 0.0;
        for (double x : r.p0) p0sum += x;
        CHECK_THAT(p0sum, Catch::Matchers::WithinRel(r.q[0], 1e-9));
        CHECK(eq5_max_residual(p, h.lst, r.q) <= 1e-10);
        // regenerative identity ties the busy period to p0[0]
        const double idle = 1.0 / (K * p.lambda);
        CHECK(rel(r.p0[0], idle / (idle + r.e_bp)) <= 1e-6);
    }
}

TEST_CASE("exponential case matches the exact chain") {
    std::mt19937_64 gen(987);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int K = 2; K <= 15; ++K) {
        for (int trial = 0; trial < 8; ++trial) {
            const double lam = u(gen), gam = u(gen), nu = u(gen);
            const auto a = performance_metrics(params(K, lam, gam), exponential_holding(nu));
            const auto c = ctmc_metrics({K, lam, gam, nu});
            CHECK(rel(a.p1, c.p1) <= 1e-6);
            CHECK(rel(a.L, c.L) <= 1e-6);
            CHECK(rel(a.W, c.W) <= 1e-6);
            CHECK(rel(a.LS, c.LS) <= 1e-6);
            CHECK(rel(a.WS, c.WS) <= 1e-6);
            CHECK(rel(a.e_bp, c.e_bp) <= 1e-6);
            for (int n = 0; n < K; ++n)
                CHECK(std::abs(a.p0[static_cast<std::size_t>(n)] -
                               c.p0[static_cast<std::size_t>(n)]) <= 1e-9);
        }
    }
    // lambda == gamma makes the q_{0,m+1} coupling vanish; still exact
    const auto a = performance_metrics(params(6, 1.3, 1.3), exponential_holding(0.7));
    const auto c = ctmc_metrics({6, 1.3, 1.3, 0.7});
    CHECK(rel(a.e_bp, c.e_bp) <= 1e-8);
}

TEST_CASE("alternating-sum recovery stays stable up to K=20") {
    std::mt19937_64 gen(555);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int K : {16, 18, 20}) {
        const double lam = u(gen), gam = u(gen), nu = u(gen);
        const auto a = performance_metrics(params(K, lam, gam), exponential_holding(nu));
        const auto c = ctmc_metrics({K, lam, gam, nu});
        for (int n = 0; n < K; ++n)
            CHECK(std::abs(a.p0[static_cast<std::size_t>(n)] - c.p0[static_cast<std::size_t>(n)]) <=
                  1e-8);
    }
}

TEST_CASE("a sign mutation in the recovery is caught by the chain oracle") {
    // deliberately drop the (-1)^m alternation: the CTMC comparison must fail
    const auto p = params(5, 1.1, 0.8);
    const auto h = exponential_holding(0.9);
    const auto q = stationary_q(p, h);
    std::vector<double> bad(q.size(), 0.0);
    const int K = 5;
    for (int n = 0; n < K; ++n) {
        double acc = 0.0;
        for (int m = 0; m <= n; ++m)
            acc += binom_coeff(K - 1 - n + m, m) * q[static_cast<std::size_t>(K - 1 - n + m)];
        bad[static_cast<std::size_t>(n)] = acc;
    }
    const auto c = ctmc_metrics({5, 1.1, 0.8, 0.9});
    double worst = 0.0;
    for (int n = 0; n < K; ++n)
        worst = std::max(worst, std::abs(bad[static_cast<std::size_t>(n)] -
                                         c.p0[static_cast<std::size_t>(n)]));
    CHECK(worst > 1e-3);
}

TEST_CASE("monotonicity probes with a fixed holding law") {
    const auto h = exponential_holding(0.8);
    // W nonincreasing in gamma
    double prev = std::numeric_limits<double>::infinity();
    for (double gam = 0.2; gam <= 3.0; gam += 0.2) {
        const double w = performance_metrics(params(8, 1.0, gam), h).W;
        CHECK(w <= prev + 1e-12);
        prev = w;
    }
    // W nondecreasing in lambda
    prev = 0.0;
    for (double lam = 0.2; lam <= 3.0; lam += 0.2) {
        const double w = performance_metrics(params(8, lam, 1.0), h).W;
        CHECK(w >= prev - 1e-12);
        prev = w;
    }
}

TEST_CASE("grid-backed holding time agrees with the closed form") {
    const double nu = 0.4;
    const auto grid = make_holding(exponential_dist(nu));
    const auto exact = exponential_holding(nu);
    const auto p = params(6, 0.9, 0.7);
    const auto a = performance_metrics(p, grid);
    const auto b = performance_metrics(p, exact);
    CHECK(rel(a.p1, b.p1) <= 1e-5);
    CHECK(rel(a.L, b.L) <= 1e-5);
    CHECK(rel(a.W, b.W) <= 1e-4);
    CHECK(rel(a.e_bp, b.e_bp) <= 1e-4);
}

TEST_CASE("error paths") {
    const auto defective = total_time_distribution({CapacityMode::Linear, 3.0, 1.0, 0.0}, 0.1, 3.0,
                                                   Semantics::Defective);
    CHECK_THROWS_AS(make_holding(defective), std::invalid_argument);
    CHECK_THROWS_AS(performance_metrics(params(1, 1.0, 1.0), exponential_holding(1.0)),
                    std::domain_error);
    CHECK_THROWS_AS(exponential_holding(0.0), std::domain_error);
}
