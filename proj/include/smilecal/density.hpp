#pragma once

#include "smilecal/bs_core.hpp"
#include "smilecal/kernels.hpp"
#include "smilecal/smile_model.hpp"

#include <functional>
#include <vector>

namespace smilecal {

/// Lognormal-model density of log-returns: mean -vol^2 T / 2, variance vol^2 T.
double gaussian_return_density(double vol, double maturity, double x);

/// F = (1 - x sigma'/sigma)^2 - (sigma' sigma T)^2 / 4 + sigma sigma'' T.
double perturbation_factor(double sigma, double sigma_d1, double sigma_d2, double x, double maturity);

/// Risk-neutral density of x implied by pricing every strike with the smile vol.
/// Can be negative; values are never clamped.
double return_density(const SmileParams& params, double x);

/// Same density in terms of the terminal price S_T, evaluated with the
/// strike-space derivatives of the smile.
double price_density(const MarketEnv& env, const SmileParams& params, double s_t);

/// Smile in strike coordinates, as consumed by the finite-difference oracle.
using StrikeVolFunction = std::function<double(double strike)>;

StrikeVolFunction smile_in_strike(const MarketEnv& env, const SmileParams& params);

struct OracleOptions {
    bool richardson = true;
    // Relative disagreement between the step-h and step-h/2 estimates that flags a point.
    double flag_tolerance = 1e-3;
};

struct OracleResult {
    double density = 0.0;     // Richardson estimate when enabled, else the plain difference
    double plain = 0.0;       // e^{rT} [C(K-h) - 2C(K) + C(K+h)] / h^2
    double half_step = 0.0;   // same with h/2
    double disagreement = 0.0;
    bool flagged = false;
};

/// Price-space density e^{rT} d^2C/dK^2 by central differences of bs_call_price.
/// Throws DomainError unless 0 < step < strike.
OracleResult bl_density_oracle(const MarketEnv& env, const StrikeVolFunction& vol_fn, double strike, double step,
                               const OracleOptions& options = {});

/// Step used by default for the oracle: a fixed fraction of the local
/// standard deviation sigma(K) sqrt(T) in strike units.
double default_oracle_step(const MarketEnv& env, double strike, double vol);

/// Oracle density converted to log-return space (multiplied by the strike).
OracleResult bl_return_density_oracle(const MarketEnv& env, const SmileParams& params, double x,
                                      const OracleOptions& options = {});

struct GridMeta {
    double lo = 0.0;
    double hi = 0.0;
    double spacing = 0.0;
    // Widest core scale g chi sqrt(T) the grid was built for; 0 when unknown.
    double vol_scale = 0.0;
};

struct DensityCurve {
    std::vector<double> xs;
    std::vector<double> ps;
    GridMeta meta;
    double mass = 0.0;
};

struct GridOptions {
    std::size_t points = 4001;
    // Half-width of the grid in units of g chi sqrt(T).
    double span = 10.0;
    kernels::Isa isa = kernels::Isa::automatic;
};

/// Uniform grid centered on the smile minimum with half-width span * g chi sqrt(T).
DensityCurve return_density_curve(const SmileParams& params, const GridOptions& options = {});

double trapezoid(std::span<const double> xs, std::span<const double> ys);

enum class StationaryKind { maximum, minimum, plateau };

struct StationaryPoint {
    double x = 0.0;
    StationaryKind kind = StationaryKind::maximum;
    double p = 0.0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct DensityReport {
    double total_mass = 0.0;
    // |E[S_T] - S0 e^{rT}| / (S0 e^{rT}), i.e. |int e^x P(x) dx - 1|.
    double martingale_gap = 0.0;
    std::vector<StationaryPoint> maxima;
    std::vector<StationaryPoint> minima;
    std::vector<StationaryPoint> plateaus;
    std::vector<Interval> negative_regions;
    bool unimodal = true;
};

/// Relative threshold (times the peak) below which a density value counts as negative.
inline constexpr double kNegativeThreshold = 1e-12;

/// Classifies stationary points by sign changes of the discrete derivative.
/// Minima closer than mode_exclusion_radius to the global maximum are ignored.
DensityReport analyze(const DensityCurve& curve, double mode_exclusion_radius = 0.0);

/// Shortcut used by the critical-chi search: builds the standard curve and
/// reports whether it is free of interior minima and negative values.
bool is_unimodal(const SmileParams& params, const GridOptions& options = {});

}  // namespace smilecal
