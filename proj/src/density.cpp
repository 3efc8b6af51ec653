#include "smilecal/density.hpp"
#include "smilecal/detail/density_math.hpp"
#include "smilecal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace smilecal {

double gaussian_return_density(double vol, double maturity, double x) {
    return detail::gaussian_point(vol * vol * maturity, x);
}

double perturbation_factor(double sigma, double sigma_d1, double sigma_d2, double x, double maturity) {
    return detail::perturbation_point(sigma, sigma_d1, sigma_d2, x, maturity);
}

double return_density(const SmileParams& params, double x) {
    return detail::smile_density_point(params.g, params.chi, params.n, params.maturity, x);
}

double price_density(const MarketEnv& env, const SmileParams& params, double s_t) {
    if (!(s_t > 0.0)) throw DomainError("price_density: terminal price must be positive");
    const double t = params.maturity;
    const double log_ratio = std::log(s_t / env.spot);
    const double x = log_ratio - env.rate * t;
    const SmileValue s = sigma_derivatives(params, x);
    // Strike-space derivatives of sigma(x(K)).
    const double dk = s.d1 / s_t;
    const double dkk = (s.d2 - s.d1) / (s_t * s_t);
    const double lin = 1.0 + s_t * dk / s.sigma * (env.rate * t - log_ratio);
    const double cross = dk * s.sigma * t * s_t;
    const double factor = lin * lin - 0.25 * cross * cross + cross + s_t * s_t * s.sigma * dkk * t;
    const double variance = s.sigma * s.sigma * t;
    const double z = log_ratio - (env.rate * t - 0.5 * variance);
    return factor / (std::sqrt(2.0 * std::numbers::pi * variance) * s_t) * std::exp(-z * z / (2.0 * variance));
}

StrikeVolFunction smile_in_strike(const MarketEnv& env, const SmileParams& params) {
    return [env, params](double strike) { return sigma_of_x(params, strike_to_x(env, strike)); };
}

OracleResult bl_density_oracle(const MarketEnv& env, const StrikeVolFunction& vol_fn, double strike, double step,
                               const OracleOptions& options) {
    if (!(step > 0.0) || !(strike - step > 0.0)) {
        throw DomainError("bl_density_oracle: step must satisfy 0 < h < K");
    }
    const double growth = std::exp(env.rate * env.maturity);
    auto call = [&](double k) { return bs_call_price(env, k, vol_fn(k)); };
    auto second_difference = [&](double h) {
        return growth * (call(strike - h) - 2.0 * call(strike) + call(strike + h)) / (h * h);
    };

    OracleResult out;
    out.plain = second_difference(step);
    out.half_step = second_difference(0.5 * step);
    const double extrapolated = (4.0 * out.half_step - out.plain) / 3.0;
    out.density = options.richardson ? extrapolated : out.plain;
    const double scale = std::max(std::abs(extrapolated), std::numeric_limits<double>::min());
    out.disagreement = std::abs(out.plain - out.half_step) / scale;
    out.flagged = out.disagreement > options.flag_tolerance;
    return out;
}

double default_oracle_step(const MarketEnv& env, double strike, double vol) {
    return 0.02 * strike * vol * std::sqrt(env.maturity);
}

OracleResult bl_return_density_oracle(const MarketEnv& env, const SmileParams& params, double x,
                                      const OracleOptions& options) {
    const double strike = x_to_strike(env, x);
    const double step = default_oracle_step(env, strike, sigma_of_x(params, x));
    OracleResult r = bl_density_oracle(env, smile_in_strike(env, params), strike, step, options);
    r.density *= strike;
    r.plain *= strike;
    r.half_step *= strike;
    return r;
}

DensityCurve return_density_curve(const SmileParams& params, const GridOptions& options) {
    params.validate();
    if (options.points < 2 || !(options.span > 0.0)) {
        throw DomainError("return_density_curve: need at least two points and a positive span");
    }
    const double scale = params.g * params.chi * std::sqrt(params.maturity);
    const double half = options.span * scale;
    DensityCurve curve;
    curve.meta.lo = params.x_min() - half;
    curve.meta.hi = params.x_min() + half;
    curve.meta.spacing = 2.0 * half / static_cast<double>(options.points - 1);
    curve.meta.vol_scale = scale;
    const kernels::UniformGrid grid{curve.meta.lo, curve.meta.spacing};
    curve.xs.resize(options.points);
    curve.ps.resize(options.points);
    for (std::size_t i = 0; i < options.points; ++i) curve.xs[i] = grid.at(i);
    kernels::smile_density(params, grid, curve.ps, options.isa);
    curve.mass = trapezoid(curve.xs, curve.ps);
    return curve;
}

double trapezoid(std::span<const double> xs, std::span<const double> ys) {
    double sum = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        sum += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
    }
    return sum;
}

DensityReport analyze(const DensityCurve& curve, double mode_exclusion_radius) {
    const auto& xs = curve.xs;
    const auto& ps = curve.ps;
    if (xs.size() != ps.size()) throw DomainError("analyze: xs and ps differ in length");
    if (xs.size() < 101) throw DomainError("analyze: density curve needs at least 101 points");
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1])) throw DomainError("analyze: grid must be strictly increasing");
    }
    if (curve.meta.vol_scale > 0.0) {
        const double spacing = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
        if (spacing > curve.meta.vol_scale / 10.0) throw DomainError("analyze: grid too coarse");
        if (xs.back() - xs.front() < 8.0 * curve.meta.vol_scale) {
            throw DomainError("analyze: grid does not cover the density core");
        }
    }

    DensityReport report;
    report.total_mass = trapezoid(xs, ps);
    std::vector<double> weighted(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) weighted[i] = std::exp(xs[i]) * ps[i];
    report.martingale_gap = std::abs(trapezoid(xs, weighted) - 1.0);

    const auto peak_it = std::max_element(ps.begin(), ps.end());
    const double peak = *peak_it;
    const double mode_x = xs[static_cast<std::size_t>(peak_it - ps.begin())];

    // Sign of the discrete derivative on each interval; zero runs are bridged.
    int last_sign = 0;
    std::size_t run_start = 0;  // first point after the last nonzero-sign interval
    for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
        const double d = ps[i + 1] - ps[i];
        const int sign = (d > 0.0) - (d < 0.0);
        if (sign == 0) continue;
        if (last_sign != 0) {
            // Turning point sits at the middle of the flat run [run_start, i].
            const std::size_t at = (run_start + i) / 2;
            const StationaryPoint sp{xs[at], StationaryKind::maximum, ps[at]};
            if (last_sign > 0 && sign < 0) {
                report.maxima.push_back(sp);
            } else if (last_sign < 0 && sign > 0) {
                if (std::abs(sp.x - mode_x) >= mode_exclusion_radius || mode_exclusion_radius <= 0.0) {
                    report.minima.push_back({sp.x, StationaryKind::minimum, sp.p});
                }
            } else if (i > run_start) {
                report.plateaus.push_back({sp.x, StationaryKind::plateau, sp.p});
            }
        }
        last_sign = sign;
        run_start = i + 1;
    }

    const double threshold = -kNegativeThreshold * std::abs(peak);
    for (std::size_t i = 0; i < ps.size();) {
        if (ps[i] < threshold) {
            std::size_t j = i;
            while (j + 1 < ps.size() && ps[j + 1] < threshold) ++j;
            report.negative_regions.push_back({xs[i], xs[j]});
            i = j + 1;
        } else {
            ++i;
        }
    }
    report.unimodal = report.minima.empty() && report.negative_regions.empty();
    return report;
}

bool is_unimodal(const SmileParams& params, const GridOptions& options) {
    return analyze(return_density_curve(params, options)).unimodal;
}

}  // namespace smilecal
