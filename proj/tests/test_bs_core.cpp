#include "oracles.hpp"

#include "smilecal/bs_core.hpp"
#include "smilecal/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace smilecal;

TEST_SUITE("bs_core") {

TEST_CASE("normal cdf values") {
    CHECK(std_normal_cdf(0.0) == 0.5);
    // Frozen from oracle::normal_cdf_quadrature (adaptive Simpson, tol 1e-16).
    const double n196 = oracle::normal_cdf_quadrature(1.96);
    CHECK(std::abs(n196 - 0.9750021048517795) < 1e-13);
    CHECK(std::abs(std_normal_cdf(1.96) - n196) < 1e-12);
    CHECK(std_normal_cdf(-8.0) < 1e-15);
    CHECK(std_normal_cdf(-8.0) > 0.0);
}

TEST_CASE("normal cdf symmetry, monotonicity and accuracy") {
    double prev = 0.0;
    for (double z = -10.0; z <= 10.0; z += 0.0625) {
        const double p = std_normal_cdf(z);
        CHECK(p >= prev);
        CHECK(std::abs(p + std_normal_cdf(-z) - 1.0) <= 1e-15);
        prev = p;
    }
    for (double z : {-5.5, -3.0, -1.0, -0.25, 0.4, 1.7, 2.5, 4.0}) {
        CHECK(std::abs(std_normal_cdf(z) - oracle::normal_cdf_quadrature(z)) < 1e-12);
    }
}

TEST_CASE("inverse cdf") {
    CHECK(std::abs(std_normal_inv_cdf(0.5)) < 1e-15);
    // Oracle: bisection of std_normal_cdf(z) = p.
    const double p = 0.9750021048517795;
    const double root = oracle::bisect([&](double z) { return oracle::normal_cdf_quadrature(z) - p; }, 0.0, 5.0);
    CHECK(std::abs(root - 1.96) < 1e-9);
    CHECK(std::abs(std_normal_inv_cdf(p) - root) < 1e-9);
    CHECK(std::abs(std_normal_inv_cdf(0.975) - 1.9599639845400542) < 1e-12);

    // Above zero the round trip is limited by the spacing of doubles near 1.
    for (double z = -6.0; z <= 6.0; z += 0.05) {
        const double tol = 1e-9 + (z > 0.0 ? 2.2e-16 / std_normal_pdf(z) : 0.0);
        CHECK(std::abs(std_normal_inv_cdf(std_normal_cdf(z)) - z) < tol);
    }
    for (double q : {1e-300, 1e-12, 0.01, 0.3, 0.7, 0.99, 1.0 - 1e-12}) {
        CHECK(std::abs(std_normal_cdf(std_normal_inv_cdf(q)) - q) <= 1e-10 * std::max(q, 1e-10));
    }
    CHECK_THROWS_AS(std_normal_inv_cdf(0.0), DomainError);
    CHECK_THROWS_AS(std_normal_inv_cdf(1.0), DomainError);
    CHECK_THROWS_AS(std_normal_inv_cdf(-0.1), DomainError);
}

TEST_CASE("call price: limits and quadrature oracle") {
    const MarketEnv env{100.0, 0.0, 1.0};
    CHECK(bs_call_price(env, 80.0, 0.0) == doctest::Approx(20.0));
    CHECK(bs_call_price(env, 120.0, 0.0) == 0.0);

    const double frozen = 7.965567455405796;  // mpmath, 30 digits
    const double quad = oracle::call_by_quadrature(100.0, 100.0, 0.0, 0.2, 1.0);
    CHECK(std::abs(quad - frozen) < 1e-8);
    CHECK(std::abs(bs_call_price(env, 100.0, 0.2) - quad) < 1e-8);

    const MarketEnv env2{100.0, 0.03, 0.7};
    for (double k : {60.0, 95.0, 130.0}) {
        CHECK(std::abs(bs_call_price(env2, k, 0.35) - oracle::call_by_quadrature(100.0, k, 0.03, 0.35, 0.7)) < 1e-8);
    }
    CHECK(std::abs(bs_call_price(env, 1e-12, 0.2) - 100.0) < 1e-9);

    CHECK_THROWS_AS(bs_call_price(env, 0.0, 0.2), DomainError);
    CHECK_THROWS_AS(bs_call_price(env, -5.0, 0.2), DomainError);
    CHECK_THROWS_AS(bs_call_price(MarketEnv{100.0, 0.0, 0.0}, 100.0, 0.2), DomainError);
    CHECK_THROWS_AS(MarketEnv::make(100.0, 0.0, -1.0), DomainError);
    CHECK_THROWS_AS(MarketEnv::make(0.0, 0.0, 1.0), DomainError);
}

TEST_CASE("call price bounds, monotonicity in vol, convexity in strike") {
    for (double rate : {-0.01, 0.0, 0.05}) {
        for (double t : {0.01, 0.5, 3.0}) {
            const MarketEnv env{100.0, rate, t};
            std::vector<double> ks;
            std::vector<double> cs;
            for (double k = 40.0; k <= 200.0; k += 2.0) {
                ks.push_back(k);
                cs.push_back(bs_call_price(env, k, 0.3));
                const double lower = std::max(100.0 - k * env.discount(), 0.0);
                CHECK(cs.back() >= lower);
                CHECK(cs.back() <= 100.0);
                double prev = -1.0;
                for (double vol = 0.05; vol <= 2.0; vol += 0.15) {
                    const double c = bs_call_price(env, k, vol);
                    CHECK(c >= prev);
                    prev = c;
                }
            }
            for (std::size_t i = 1; i + 1 < cs.size(); ++i) {
                CHECK(cs[i] <= cs[i - 1]);
                CHECK(cs[i - 1] - 2.0 * cs[i] + cs[i + 1] >= -1e-12 * 100.0);
            }
        }
    }
}

TEST_CASE("delta against finite differences in spot") {
    auto fd_delta = [](double spot, double rate, double t, double k, double vol) {
        const double h = 1e-4 * spot;
        return (bs_call_price({spot + h, rate, t}, k, vol) - bs_call_price({spot - h, rate, t}, k, vol)) / (2.0 * h);
    };
    const MarketEnv atm{100.0, 0.0, 1.0};
    CHECK(std::abs(bs_delta(atm, 100.0, 0.2) - 0.539827837277029) < 1e-12);
    CHECK(std::abs(bs_delta(atm, 100.0, 0.2) - fd_delta(100.0, 0.0, 1.0, 100.0, 0.2)) < 1e-6);
    CHECK(bs_delta(atm, 1e-6, 0.2) == doctest::Approx(1.0));
    // d1 = 0 when ln(S/K) = -(r + vol^2/2) T
    const double k0 = 100.0 * std::exp(0.02);
    CHECK(bs_delta(atm, k0, 0.2) == doctest::Approx(0.5).epsilon(1e-14));

    for (double k : {70.0, 100.0, 140.0}) {
        for (double vol : {0.1, 0.4, 0.9}) {
            for (double t : {0.1, 1.0, 2.5}) {
                const MarketEnv env{100.0, 0.02, t};
                CHECK(std::abs(bs_delta(env, k, vol) - fd_delta(100.0, 0.02, t, k, vol)) < 1e-6);
            }
        }
    }
    CHECK_THROWS_AS(bs_delta(atm, 100.0, 0.0), DomainError);
}

TEST_CASE("implied vol round trip") {
    const MarketEnv env{100.0, 0.01, 0.75};
    const double c = bs_call_price(env, 110.0, 0.25);
    CHECK(std::abs(implied_vol(env, 110.0, c) - 0.25) < 1e-8);

    for (double k : {50.0, 90.0, 100.0, 125.0, 180.0}) {
        for (double vol = 0.01; vol <= 2.0; vol *= 1.6) {
            const double price = bs_call_price(env, k, vol);
            const double lower = std::max(env.spot - k * env.discount(), 0.0);
            if (!(price > lower && price < env.spot)) continue;
            const double iv = implied_vol(env, k, price);
            CHECK(std::abs(bs_call_price(env, k, iv) - price) <= 1e-10 * env.spot);
            // Vol error is the price tolerance divided by vega.
            CHECK(std::abs(iv - vol) <= 2e-12 * env.spot / bs_vega(env, k, vol) + 1e-12);
        }
    }

    const double lower = 100.0 - 95.0 * env.discount();
    const double tiny = implied_vol(env, 95.0, lower + 1e-9);
    CHECK(tiny < 0.05);
    CHECK(std::abs(bs_call_price(env, 95.0, tiny) - (lower + 1e-9)) < 1e-10 * env.spot);
    CHECK_THROWS_AS(implied_vol(env, 95.0, 100.0), ArbitrageError);
    CHECK_THROWS_AS(implied_vol(env, 95.0, lower), ArbitrageError);
    CHECK_THROWS_AS(implied_vol(env, 95.0, 150.0), ArbitrageError);
}

TEST_CASE("delta to x") {
    CHECK(delta_to_x(0.5, 0.2, 2.0) == doctest::Approx(0.04).epsilon(1e-15));
    CHECK(std::abs(delta_to_x(0.975, 0.1, 1.0) - (-0.19099639845400542)) < 1e-12);
    CHECK(delta_to_x(1.0 - 1e-15, 0.2, 1.0) < delta_to_x(0.99, 0.2, 1.0));
    CHECK(delta_to_x(1.0 - 1e-15, 0.2, 1.0) < -1.5);
    CHECK_THROWS_AS(delta_to_x(0.0, 0.2, 1.0), DomainError);
    CHECK_THROWS_AS(delta_to_x(1.0, 0.2, 1.0), DomainError);

    // x from delta reproduces the strike whose N(d1) is that delta.
    const MarketEnv env{100.0, 0.0, 0.5};
    const double x = delta_to_x(0.25, 0.15, 0.5);
    CHECK(std::abs(bs_delta(env, x_to_strike(env, x), 0.15) - 0.25) < 1e-12);
}

TEST_CASE("strike and log-return coordinates") {
    const MarketEnv env{100.0, 0.02, 0.5};
    CHECK(std::abs(strike_to_x(env, 110.0) - 0.08531017980432486) < 1e-14);
    CHECK(std::abs(strike_to_x(env, env.forward())) < 1e-15);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> logk(std::log(1e-3), std::log(1e5));
    for (int i = 0; i < 500; ++i) {
        const double k = std::exp(logk(rng));
        CHECK(std::abs(x_to_strike(env, strike_to_x(env, k)) / k - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(strike_to_x(env, 0.0), DomainError);
}

}
