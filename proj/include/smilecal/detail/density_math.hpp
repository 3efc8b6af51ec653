#pragma once

// Pointwise density formulas shared by the scalar kernels and the
// scalar API so both produce bit-identical values.

#include <cmath>

namespace smilecal::detail {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

/// Centered-drift Gaussian of log-returns with total variance v = sigma^2 T.
inline double gaussian_point(double variance, double x) {
    const double z = x + 0.5 * variance;
    return std::exp(-(z * z) / (2.0 * variance)) * kInvSqrt2Pi / std::sqrt(variance);
}

/// Multiplier on the Gaussian induced by a strike-dependent vol.
inline double perturbation_point(double sigma, double d1, double d2, double x, double maturity) {
    const double lin = 1.0 - (d1 / sigma) * x;
    const double cross = d1 * sigma * maturity;
    return lin * lin - 0.25 * (cross * cross) + sigma * d2 * maturity;
}

inline double smile_density_point(double g, double chi, double n, double maturity, double x) {
    const double u = x + 0.5 * g * g * maturity;
    const double u2 = u * u;
    const double q = u2 + n;
    const double amp = g * (chi - 1.0);
    const double sigma = g * (1.0 + (chi - 1.0) * u2 / q);
    const double d1 = 2.0 * amp * u * n / (q * q);
    const double d2 = 2.0 * amp * n * (n - 3.0 * u2) / (q * q * q);
    return gaussian_point(sigma * sigma * maturity, x) * perturbation_point(sigma, d1, d2, x, maturity);
}

}  // namespace smilecal::detail
