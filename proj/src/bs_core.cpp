#include "smilecal/bs_core.hpp"
#include "smilecal/errors.hpp"

#include <algorithm>
#include <cmath>

namespace smilecal {

MarketEnv MarketEnv::make(double spot, double rate, double maturity) {
    if (!(spot > 0.0) || !std::isfinite(spot)) {
        throw DomainError("MarketEnv: spot must be positive");
    }
    if (!(maturity > 0.0) || !std::isfinite(maturity)) {
        throw DomainError("MarketEnv: maturity must be positive");
    }
    if (!std::isfinite(rate)) {
        throw DomainError("MarketEnv: rate must be finite");
    }
    return MarketEnv{spot, rate, maturity};
}

namespace {

void check_env(const MarketEnv& env) {
    if (!(env.spot > 0.0) || !(env.maturity > 0.0)) {
        throw DomainError("invalid market environment (spot and maturity must be positive)");
    }
}

void check_strike(double strike) {
    if (!(strike > 0.0) || !std::isfinite(strike)) {
        throw DomainError("strike must be positive");
    }
}

struct D12 {
    double d1;
    double d2;
};

D12 d_terms(const MarketEnv& env, double strike, double vol) {
    const double sd = vol * std::sqrt(env.maturity);
    const double d1 = (std::log(env.spot / strike) + (env.rate + 0.5 * vol * vol) * env.maturity) / sd;
    return {d1, d1 - sd};
}

}  // namespace

double bs_call_price(const MarketEnv& env, double strike, double vol) {
    check_env(env);
    check_strike(strike);
    if (vol < 0.0 || std::isnan(vol)) {
        throw DomainError("bs_call_price: volatility must be non-negative");
    }
    const double df = env.discount();
    if (vol == 0.0) {
        return std::max(env.spot - strike * df, 0.0);
    }
    const auto [d1, d2] = d_terms(env, strike, vol);
    const double price = env.spot * std_normal_cdf(d1) - strike * df * std_normal_cdf(d2);
    return std::clamp(price, std::max(env.spot - strike * df, 0.0), env.spot);
}

double bs_delta(const MarketEnv& env, double strike, double vol) {
    check_env(env);
    check_strike(strike);
    if (!(vol > 0.0)) {
        throw DomainError("bs_delta: volatility must be positive");
    }
    return std_normal_cdf(d_terms(env, strike, vol).d1);
}

double bs_vega(const MarketEnv& env, double strike, double vol) {
    check_env(env);
    check_strike(strike);
    if (!(vol > 0.0)) {
        return 0.0;
    }
    return env.spot * std::sqrt(env.maturity) * std_normal_pdf(d_terms(env, strike, vol).d1);
}

double implied_vol(const MarketEnv& env, double strike, double price) {
    check_env(env);
    check_strike(strike);
    const double lower = std::max(env.spot - strike * env.discount(), 0.0);
    if (!(price > lower && price < env.spot)) {
        throw ArbitrageError("implied_vol: price outside the no-arbitrage interval");
    }

    double lo = 1e-6;
    double hi = 5.0;
    // The nominal bracket is widened only for prices outside its image.
    while (bs_call_price(env, strike, lo) > price && lo > 1e-300) {
        lo *= 1e-3;
    }
    while (bs_call_price(env, strike, hi) < price && hi < 1e6) {
        hi *= 2.0;
    }

    const double tol = 1e-12 * env.spot;
    double vol = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double diff = bs_call_price(env, strike, vol) - price;
        if (std::abs(diff) <= tol) {
            return vol;
        }
        if (diff > 0.0) {
            hi = vol;
        } else {
            lo = vol;
        }
        const double vega = bs_vega(env, strike, vol);
        double next = vega > 0.0 ? vol - diff / vega : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        vol = next;
        if (hi - lo <= 1e-15 * hi) {
            break;
        }
    }
    return vol;
}

double delta_to_x(double delta, double vol, double maturity) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw DomainError("delta_to_x: delta must lie in (0, 1)");
    }
    if (!(vol > 0.0) || !(maturity > 0.0)) {
        throw DomainError("delta_to_x: vol and maturity must be positive");
    }
    return 0.5 * vol * vol * maturity - vol * std::sqrt(maturity) * std_normal_inv_cdf(delta);
}

double strike_to_x(const MarketEnv& env, double strike) {
    check_strike(strike);
    return std::log(strike / env.spot) - env.rate * env.maturity;
}

double x_to_strike(const MarketEnv& env, double x) {
    return env.spot * std::exp(x + env.rate * env.maturity);
}

}  // namespace smilecal
