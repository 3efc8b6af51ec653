#pragma once

#include "smilecal/density.hpp"
#include "smilecal/smile_model.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace smilecal {

/// Two-level caricature of a smile: sigma1 inside |x| < x1, sigma2 outside.
struct SquareWellSmile {
    double sigma1 = 0.1;
    double sigma2 = 0.2;
    double x1 = 0.1;

    void validate() const;
    double chi() const { return sigma2 / sigma1; }
};

/// Positive abscissa where the zero-mean Gaussians of variance sigma1^2 T and
/// (chi sigma1)^2 T cross:  sigma1 sqrt(T) sqrt(2 chi^2 ln chi / (chi^2 - 1)).
/// chi == 1 returns the limit sigma1 sqrt(T); chi < 1 throws DomainError.
double square_well_critical_x(double sigma1, double chi, double maturity);

/// Constants of the closed-form boundary
///   chi_c = alpha rho^beta + gamma sqrt(T) g rho^delta,  rho = n / (g^2 T).
/// gamma is stored with its fitted (negative) sign.
struct CriticalFitParams {
    double alpha = 1.4373;
    double beta = 0.2787;
    double gamma = -0.1738;
    double delta = 0.4683;
};

double chi_critical_formula(double g, double n, double maturity, const CriticalFitParams& fit = {});

struct CriticalSearchOptions {
    GridOptions grid;
    double scan_start = 1.01;
    double scan_step = 0.05;
    double tolerance = 1e-4;
    double chi_max = 20.0;
};

struct CriticalSearchResult {
    double chi_c = 0.0;        // smallest chi found non-unimodal
    double chi_unimodal = 0.0; // largest chi verified unimodal, chi_c - chi_unimodal <= tolerance
    int evaluations = 0;
};

/// Raised when the unimodality predicate is not monotone in chi on the bracket.
class MonotonicityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Coarse upward scan in chi followed by bisection on the unimodality predicate.
/// Throws OutOfRangeError when no transition exists below options.chi_max.
CriticalSearchResult chi_critical_search(double g, double n, double maturity, const CriticalSearchOptions& options = {});
double chi_critical_numeric(double g, double n, double maturity, const CriticalSearchOptions& options = {});

struct SweepAxis {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 1;

    /// Log-spaced lattice values.
    std::vector<double> values() const;
};

struct SweepRanges {
    SweepAxis g{0.03, 0.5, 6};
    SweepAxis rho{2.5, 10.0, 6};
    SweepAxis maturity{1.0 / 365.0, 4.0, 6};
};

struct SweepRow {
    double g = 0.0;
    double maturity = 0.0;
    double n = 0.0;
    double rho = 0.0;
    double chi_c = 0.0;
    std::string status = "pending";

    bool ok() const { return status == "ok"; }
};

/// Lattice points in (g, rho, T) order with chi_c unset.
std::vector<SweepRow> sweep_lattice(const SweepRanges& ranges);

/// Fills chi_c/status for every row whose status is not "ok". Rows are
/// distributed across `threads` workers (0 = hardware concurrency); order is kept.
void run_sweep(std::vector<SweepRow>& rows, const CriticalSearchOptions& options = {}, unsigned threads = 0);

std::vector<SweepRow> sweep(const SweepRanges& ranges, const CriticalSearchOptions& options = {},
                            unsigned threads = 0);

struct CalibrationResult {
    CriticalFitParams params;
    CriticalFitParams standard_error;
    double mse = 0.0;
    std::size_t rows = 0;
    bool converged = false;
};

/// Least-squares fit of the closed-form boundary to successful sweep rows.
/// Throws RankDeficiencyError when rho or g sqrt(T) do not vary.
CalibrationResult calibrate_critical_fit(std::span<const SweepRow> rows,
                                         const CriticalFitParams& init = CriticalFitParams{});

enum class CriticalMode { formula, numeric };

struct AdiabaticVerdict {
    double chi_opt = 1.0;
    double chi_c = 0.0;
    bool adiabatic = true;
    CriticalMode source = CriticalMode::formula;
};

AdiabaticVerdict adiabatic_check(const SmileParams& params, const CriticalFitParams& fit = {},
                                 CriticalMode mode = CriticalMode::formula,
                                 const CriticalSearchOptions& options = {});

}  // namespace smilecal
