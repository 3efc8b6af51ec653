#pragma once

#include <cmath>

namespace smilecal {

/// Pricing context: spot S0, continuously compounded rate r and maturity T (years).
struct MarketEnv {
    double spot = 100.0;
    double rate = 0.0;
    double maturity = 1.0;

    /// Throws DomainError unless spot > 0 and maturity > 0.
    static MarketEnv make(double spot, double rate, double maturity);

    double discount() const { return std::exp(-rate * maturity); }
    double forward() const { return spot * std::exp(rate * maturity); }
};

// Standard normal utilities.
double std_normal_pdf(double z);
double std_normal_cdf(double z);
/// Inverse of std_normal_cdf; throws DomainError for p outside (0, 1).
double std_normal_inv_cdf(double p);

/// European call value. vol == 0 returns the discounted deterministic payoff.
double bs_call_price(const MarketEnv& env, double strike, double vol);

/// Spot delta N(d1) of a European call.
double bs_delta(const MarketEnv& env, double strike, double vol);

double bs_vega(const MarketEnv& env, double strike, double vol);

/// Implied volatility of a call price. Throws ArbitrageError when the price is
/// not strictly inside (max(S0 - K e^{-rT}, 0), S0).
double implied_vol(const MarketEnv& env, double strike, double price);

/// Log-return coordinate of a delta-quoted point: x = vol^2 T / 2 - vol sqrt(T) N^{-1}(delta).
double delta_to_x(double delta, double vol, double maturity);

/// x = ln(K / S0) - r T.
double strike_to_x(const MarketEnv& env, double strike);
double x_to_strike(const MarketEnv& env, double x);

}  // namespace smilecal
