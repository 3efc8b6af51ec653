#pragma once

#include "smilecal/bs_core.hpp"

#include <optional>
#include <span>
#include <vector>

namespace smilecal {

/// Symmetric three-parameter smile
///   sigma(x) = g [1 + (chi - 1) u^2 / (u^2 + n)],  u = x + g^2 T / 2.
/// g is the floor, g*chi the wing plateau and sqrt(n) the half width at half height.
struct SmileParams {
    double g = 0.1;
    double chi = 1.0;
    double n = 0.01;
    double maturity = 1.0;

    /// Throws DomainError unless g > 0, chi >= 1, n > 0 and maturity > 0.
    void validate() const;

    /// Location of the smile minimum, -g^2 T / 2.
    double x_min() const { return -0.5 * g * g * maturity; }
    double rho() const { return n / (g * g * maturity); }
};

struct SmileValue {
    double sigma;
    double d1;  // d sigma / dx
    double d2;  // d^2 sigma / dx^2
};

double sigma_of_x(const SmileParams& p, double x);
SmileValue sigma_derivatives(const SmileParams& p, double x);

enum class QuoteCoordinate { delta, log_return, strike };

/// One market smile point.
struct VolQuote {
    QuoteCoordinate coordinate = QuoteCoordinate::log_return;
    double value = 0.0;
    double vol = 0.0;
};

struct SmileFitResult {
    SmileParams params;
    double residual_rms = 0.0;
    bool converged = false;
    bool constrained = false;
    int iterations = 0;
};

struct FitOptions {
    int max_iterations = 200;
    double relative_tolerance = 1e-10;
};

/// Converts quotes to (x, vol) pairs sorted by x. Delta quotes use their own vol;
/// strike quotes need an environment. Throws DomainError on duplicate coordinates.
struct SmilePoint {
    double x;
    double vol;
};
std::vector<SmilePoint> quotes_to_points(std::span<const VolQuote> quotes, double maturity,
                                         const std::optional<MarketEnv>& env = std::nullopt);

/// Moment-style starting point from the smile landmarks.
SmileParams default_initial_guess(std::span<const SmilePoint> points, double maturity);

/// Unweighted least squares in vol space. Requires at least four points.
SmileFitResult fit_smile(std::span<const SmilePoint> points, double maturity,
                         const std::optional<SmileParams>& init = std::nullopt, const FitOptions& options = {});
SmileFitResult fit_smile(std::span<const VolQuote> quotes, double maturity,
                         const std::optional<SmileParams>& init = std::nullopt,
                         const std::optional<MarketEnv>& env = std::nullopt);

/// Fit subject to chi <= chi_max. An active bound fixes chi and refits (g, n).
SmileFitResult constrained_fit_smile(std::span<const SmilePoint> points, double maturity, double chi_max,
                                     const std::optional<SmileParams>& init = std::nullopt,
                                     const FitOptions& options = {});
SmileFitResult constrained_fit_smile(std::span<const VolQuote> quotes, double maturity, double chi_max,
                                     const std::optional<MarketEnv>& env = std::nullopt);

/// Intercept of ln(g^2 T) = ln(n) + c across several fitted smiles.
struct ScalingFitResult {
    double c = 0.0;
    double c_stderr = 0.0;
    std::size_t count = 0;
};

ScalingFitResult scaling_fit(std::span<const SmileParams> smiles);

}  // namespace smilecal
