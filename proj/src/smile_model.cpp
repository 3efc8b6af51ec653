#include "smilecal/smile_model.hpp"
#include "smilecal/errors.hpp"
#include "smilecal/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace smilecal {

void SmileParams::validate() const {
    if (!(g > 0.0) || !std::isfinite(g)) throw DomainError("SmileParams: g must be positive");
    if (!(chi >= 1.0) || !std::isfinite(chi)) throw DomainError("SmileParams: chi must be >= 1");
    if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("SmileParams: n must be positive");
    if (!(maturity > 0.0) || !std::isfinite(maturity)) throw DomainError("SmileParams: maturity must be positive");
}

double sigma_of_x(const SmileParams& p, double x) {
    const double u = x + 0.5 * p.g * p.g * p.maturity;
    const double u2 = u * u;
    return p.g * (1.0 + (p.chi - 1.0) * u2 / (u2 + p.n));
}

SmileValue sigma_derivatives(const SmileParams& p, double x) {
    const double u = x + 0.5 * p.g * p.g * p.maturity;
    const double u2 = u * u;
    const double q = u2 + p.n;
    const double amp = p.g * (p.chi - 1.0);
    return {p.g * (1.0 + (p.chi - 1.0) * u2 / q),
            2.0 * amp * u * p.n / (q * q),
            2.0 * amp * p.n * (p.n - 3.0 * u2) / (q * q * q)};
}

std::vector<SmilePoint> quotes_to_points(std::span<const VolQuote> quotes, double maturity,
                                         const std::optional<MarketEnv>& env) {
    if (!(maturity > 0.0)) throw DomainError("quotes_to_points: maturity must be positive");
    std::vector<SmilePoint> points;
    points.reserve(quotes.size());
    for (const auto& q : quotes) {
        if (!(q.vol > 0.0) || !std::isfinite(q.vol)) throw DomainError("quote vol must be positive");
        switch (q.coordinate) {
        case QuoteCoordinate::delta:
            points.push_back({delta_to_x(q.value, q.vol, maturity), q.vol});
            break;
        case QuoteCoordinate::log_return:
            points.push_back({q.value, q.vol});
            break;
        case QuoteCoordinate::strike:
            if (!env) throw DomainError("strike-quoted smile needs spot and rate");
            points.push_back({strike_to_x(*env, q.value), q.vol});
            break;
        }
    }
    std::sort(points.begin(), points.end(), [](const SmilePoint& a, const SmilePoint& b) { return a.x < b.x; });
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!(points[i].x > points[i - 1].x)) {
            throw DomainError("quote coordinates are not distinct after conversion to log-return");
        }
    }
    return points;
}

SmileParams default_initial_guess(std::span<const SmilePoint> points, double maturity) {
    if (points.empty()) throw InsufficientDataError("no smile points");
    const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                              [](const SmilePoint& a, const SmilePoint& b) { return a.vol < b.vol; });
    const double range = points.back().x - points.front().x;
    SmileParams p;
    p.g = lo->vol;
    p.chi = hi->vol / lo->vol;
    p.n = range > 0.0 ? 0.0625 * range * range : 1e-4;
    p.maturity = maturity;
    return p;
}

namespace {

constexpr double kChiGuard = 1e-12;

double rms(std::span<const SmilePoint> points, const SmileParams& p) {
    double sse = 0.0;
    for (const auto& pt : points) {
        const double r = sigma_of_x(p, pt.x) - pt.vol;
        sse += r * r;
    }
    return std::sqrt(sse / static_cast<double>(points.size()));
}

bool is_flat(std::span<const SmilePoint> points) {
    const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                              [](const SmilePoint& a, const SmilePoint& b) { return a.vol < b.vol; });
    return hi->vol - lo->vol <= 1e-14 * hi->vol;
}

// Partial derivatives of sigma with respect to (g, chi, n) at fixed x.
struct SigmaGradient {
    double sigma, dg, dchi, dn;
};

SigmaGradient sigma_gradient(const SmileParams& p, double x) {
    const double u = x + 0.5 * p.g * p.g * p.maturity;
    const double u2 = u * u;
    const double q = u2 + p.n;
    const double shape = u2 / q;
    const double sigma = p.g * (1.0 + (p.chi - 1.0) * shape);
    const double slope = 2.0 * p.g * (p.chi - 1.0) * u * p.n / (q * q);
    // g enters both as the scale and through the shift of u.
    return {sigma, sigma / p.g + slope * p.g * p.maturity, p.g * shape, -p.g * (p.chi - 1.0) * u2 / (q * q)};
}

void require_points(std::span<const SmilePoint> points, double maturity) {
    if (points.size() < 4) throw InsufficientDataError("smile fit needs at least four quotes");
    if (!(maturity > 0.0)) throw DomainError("smile fit: maturity must be positive");
}

SmileFitResult flat_fit(std::span<const SmilePoint> points, double maturity, double n_hint) {
    double mean = 0.0;
    for (const auto& pt : points) mean += pt.vol;
    mean /= static_cast<double>(points.size());
    SmileFitResult out;
    out.params = {mean, 1.0, n_hint, maturity};
    out.residual_rms = rms(points, out.params);
    out.converged = true;
    return out;
}

SmileFitResult fit_free(std::span<const SmilePoint> points, const SmileParams& init, const FitOptions& options) {
    const double maturity = init.maturity;
    auto unpack = [maturity](const Eigen::VectorXd& t) {
        return SmileParams{std::exp(t[0]), std::max(1.0, 1.0 - kChiGuard + std::exp(t[1])), std::exp(t[2]), maturity};
    };
    const ResidualFunction fn = [&](const Eigen::VectorXd& t, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const SmileParams p = unpack(t);
        const double chi_arg = p.chi - 1.0 + kChiGuard;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto idx = static_cast<Eigen::Index>(i);
            const SigmaGradient s = sigma_gradient(p, points[i].x);
            r[idx] = s.sigma - points[i].vol;
            if (jac) {
                (*jac)(idx, 0) = s.dg * p.g;
                (*jac)(idx, 1) = s.dchi * chi_arg;
                (*jac)(idx, 2) = s.dn * p.n;
            }
        }
    };
    Eigen::VectorXd start(3);
    start << std::log(init.g), std::log(std::max(init.chi - 1.0, 0.0) + kChiGuard), std::log(init.n);
    LmOptions lm;
    lm.max_iterations = options.max_iterations;
    lm.relative_tolerance = options.relative_tolerance;
    const LmResult res = levenberg_marquardt(fn, start, points.size(), lm);

    SmileFitResult out;
    out.params = unpack(res.params);
    out.residual_rms = std::sqrt(res.sse / static_cast<double>(points.size()));
    out.converged = res.converged;
    out.iterations = res.iterations;
    return out;
}

SmileFitResult fit_fixed_chi(std::span<const SmilePoint> points, const SmileParams& init, double chi,
                             const FitOptions& options) {
    const double maturity = init.maturity;
    auto unpack = [maturity, chi](const Eigen::VectorXd& t) {
        return SmileParams{std::exp(t[0]), chi, std::exp(t[1]), maturity};
    };
    const ResidualFunction fn = [&](const Eigen::VectorXd& t, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const SmileParams p = unpack(t);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto idx = static_cast<Eigen::Index>(i);
            const SigmaGradient s = sigma_gradient(p, points[i].x);
            r[idx] = s.sigma - points[i].vol;
            if (jac) {
                (*jac)(idx, 0) = s.dg * p.g;
                (*jac)(idx, 1) = s.dn * p.n;
            }
        }
    };
    Eigen::VectorXd start(2);
    start << std::log(init.g), std::log(init.n);
    LmOptions lm;
    lm.max_iterations = options.max_iterations;
    lm.relative_tolerance = options.relative_tolerance;
    const LmResult res = levenberg_marquardt(fn, start, points.size(), lm);

    SmileFitResult out;
    out.params = unpack(res.params);
    out.residual_rms = std::sqrt(res.sse / static_cast<double>(points.size()));
    out.converged = res.converged;
    out.iterations = res.iterations;
    out.constrained = true;
    return out;
}

}  // namespace

SmileFitResult fit_smile(std::span<const SmilePoint> points, double maturity, const std::optional<SmileParams>& init,
                         const FitOptions& options) {
    require_points(points, maturity);
    SmileParams start = init ? *init : default_initial_guess(points, maturity);
    start.maturity = maturity;
    start.validate();
    if (is_flat(points)) {
        return flat_fit(points, maturity, start.n);
    }
    return fit_free(points, start, options);
}

SmileFitResult fit_smile(std::span<const VolQuote> quotes, double maturity, const std::optional<SmileParams>& init,
                         const std::optional<MarketEnv>& env) {
    const auto points = quotes_to_points(quotes, maturity, env);
    return fit_smile(points, maturity, init);
}

SmileFitResult constrained_fit_smile(std::span<const SmilePoint> points, double maturity, double chi_max,
                                     const std::optional<SmileParams>& init, const FitOptions& options) {
    if (!(chi_max >= 1.0)) throw DomainError("constrained_fit_smile: chi_max must be >= 1");
    SmileFitResult free = fit_smile(points, maturity, init, options);
    if (free.params.chi <= chi_max) {
        return free;
    }
    if (chi_max == 1.0) {
        SmileFitResult out = flat_fit(points, maturity, free.params.n);
        out.constrained = true;
        return out;
    }
    return fit_fixed_chi(points, free.params, chi_max, options);
}

SmileFitResult constrained_fit_smile(std::span<const VolQuote> quotes, double maturity, double chi_max,
                                     const std::optional<MarketEnv>& env) {
    const auto points = quotes_to_points(quotes, maturity, env);
    return constrained_fit_smile(points, maturity, chi_max);
}

ScalingFitResult scaling_fit(std::span<const SmileParams> smiles) {
    if (smiles.size() < 3) throw InsufficientDataError("scaling_fit needs at least three smiles");
    std::vector<double> offsets;
    offsets.reserve(smiles.size());
    for (const auto& s : smiles) {
        if (!(s.g > 0.0 && s.n > 0.0 && s.maturity > 0.0)) {
            throw DomainError("scaling_fit: g, n and T must be positive");
        }
        offsets.push_back(std::log(s.g * s.g * s.maturity) - std::log(s.n));
    }
    const double count = static_cast<double>(offsets.size());
    const double c = std::accumulate(offsets.begin(), offsets.end(), 0.0) / count;
    double ss = 0.0;
    for (double o : offsets) ss += (o - c) * (o - c);
    return {c, std::sqrt(ss / (count - 1.0) / count), offsets.size()};
}

}  // namespace smilecal
