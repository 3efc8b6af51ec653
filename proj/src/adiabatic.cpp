#include "smilecal/adiabatic.hpp"
#include "smilecal/errors.hpp"
#include "smilecal/least_squares.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

namespace smilecal {

void SquareWellSmile::validate() const {
    if (!(sigma1 > 0.0) || !(sigma2 > sigma1)) throw DomainError("SquareWellSmile: need sigma2 > sigma1 > 0");
    if (!(x1 > 0.0)) throw DomainError("SquareWellSmile: x1 must be positive");
}

double square_well_critical_x(double sigma1, double chi, double maturity) {
    if (!(sigma1 > 0.0) || !(maturity > 0.0)) {
        throw DomainError("square_well_critical_x: sigma1 and T must be positive");
    }
    if (!(chi >= 1.0)) throw DomainError("square_well_critical_x: chi must be >= 1");
    const double scale = sigma1 * std::sqrt(maturity);
    if (chi == 1.0) return scale;
    const double excess = chi - 1.0;
    const double ratio = 2.0 * chi * chi * std::log1p(excess) / (excess * (chi + 1.0));
    return scale * std::sqrt(ratio);
}

double chi_critical_formula(double g, double n, double maturity, const CriticalFitParams& fit) {
    if (!(g > 0.0 && n > 0.0 && maturity > 0.0)) {
        throw DomainError("chi_critical_formula: g, n and T must be positive");
    }
    const double rho = n / (g * g * maturity);
    return fit.alpha * std::pow(rho, fit.beta) + fit.gamma * std::sqrt(maturity) * g * std::pow(rho, fit.delta);
}

CriticalSearchResult chi_critical_search(double g, double n, double maturity, const CriticalSearchOptions& options) {
    SmileParams params{g, 1.0, n, maturity};
    params.validate();
    if (!(options.scan_step > 0.0 && options.tolerance > 0.0 && options.scan_start > 1.0 &&
          options.chi_max > options.scan_start)) {
        throw DomainError("chi_critical_search: invalid search options");
    }

    CriticalSearchResult result;
    auto broken = [&](double chi) {
        ++result.evaluations;
        params.chi = chi;
        return !is_unimodal(params, options.grid);
    };

    double lo = 1.0;
    double hi = options.scan_start;
    if (!broken(hi)) {
        lo = hi;
        for (;;) {
            hi = std::min(lo + options.scan_step, options.chi_max);
            if (broken(hi)) break;
            if (hi >= options.chi_max) {
                throw OutOfRangeError("no loss of unimodality for chi in (1, " + std::to_string(options.chi_max) +
                                      "]");
            }
            lo = hi;
        }
    }
    while (hi - lo > options.tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (broken(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Once broken the density must stay broken above the bracket.
    const double probe = std::min(hi + options.scan_step, options.chi_max);
    if (probe > hi && !broken(probe)) {
        throw MonotonicityError("unimodality predicate is not monotone in chi near " + std::to_string(hi));
    }
    result.chi_c = hi;
    result.chi_unimodal = lo;
    return result;
}

double chi_critical_numeric(double g, double n, double maturity, const CriticalSearchOptions& options) {
    return chi_critical_search(g, n, maturity, options).chi_c;
}

std::vector<double> SweepAxis::values() const {
    if (count == 0 || !(lo > 0.0) || !(hi >= lo)) throw DomainError("SweepAxis: need 0 < lo <= hi and count >= 1");
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        out[i] = lo * std::pow(hi / lo, f);
    }
    return out;
}

std::vector<SweepRow> sweep_lattice(const SweepRanges& ranges) {
    std::vector<SweepRow> rows;
    for (double g : ranges.g.values()) {
        for (double rho : ranges.rho.values()) {
            for (double t : ranges.maturity.values()) {
                SweepRow row;
                row.g = g;
                row.rho = rho;
                row.maturity = t;
                row.n = rho * g * g * t;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

void run_sweep(std::vector<SweepRow>& rows, const CriticalSearchOptions& options, unsigned threads) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            SweepRow& row = rows[i];
            if (row.ok()) continue;
            try {
                row.chi_c = chi_critical_numeric(row.g, row.n, row.maturity, options);
                row.status = "ok";
            } catch (const OutOfRangeError&) {
                row.chi_c = NAN;
                row.status = "out_of_range";
            } catch (const MonotonicityError&) {
                row.chi_c = NAN;
                row.status = "non_monotone";
            } catch (const std::exception&) {
                row.chi_c = NAN;
                row.status = "error";
            }
        }
    };
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
}

std::vector<SweepRow> sweep(const SweepRanges& ranges, const CriticalSearchOptions& options, unsigned threads) {
    auto rows = sweep_lattice(ranges);
    run_sweep(rows, options, threads);
    return rows;
}

namespace {

std::size_t distinct_count(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::size_t count = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i == 0 || values[i] - values[i - 1] > 1e-9 * std::abs(values[i])) ++count;
    }
    return count;
}

}  // namespace

CalibrationResult calibrate_critical_fit(std::span<const SweepRow> rows, const CriticalFitParams& init) {
    std::vector<SweepRow> good;
    for (const auto& r : rows) {
        if (r.ok() && std::isfinite(r.chi_c)) good.push_back(r);
    }
    std::vector<double> rhos;
    std::vector<double> scales;
    for (const auto& r : good) {
        rhos.push_back(r.rho);
        scales.push_back(r.g * std::sqrt(r.maturity));
    }
    if (good.size() < 5 || distinct_count(rhos) < 2 || distinct_count(scales) < 2) {
        throw RankDeficiencyError("calibration needs at least five rows varying in both rho and g sqrt(T)");
    }

    const ResidualFunction fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& res, Eigen::MatrixXd* jac) {
        for (std::size_t i = 0; i < good.size(); ++i) {
            const auto idx = static_cast<Eigen::Index>(i);
            const double rho = good[i].rho;
            const double scale = good[i].g * std::sqrt(good[i].maturity);
            const double lead = std::pow(rho, p[1]);
            const double corr = std::pow(rho, p[3]);
            res[idx] = p[0] * lead + p[2] * scale * corr - good[i].chi_c;
            if (jac) {
                (*jac)(idx, 0) = lead;
                (*jac)(idx, 1) = p[0] * lead * std::log(rho);
                (*jac)(idx, 2) = scale * corr;
                (*jac)(idx, 3) = p[2] * scale * corr * std::log(rho);
            }
        }
    };
    Eigen::VectorXd start(4);
    start << init.alpha, init.beta, init.gamma, init.delta;
    LmOptions lm;
    lm.max_iterations = 500;
    lm.relative_tolerance = 1e-14;
    const LmResult res = levenberg_marquardt(fn, start, good.size(), lm);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(res.jacobian);
    qr.setThreshold(1e-10);
    if (qr.rank() < 4) throw RankDeficiencyError("calibration Jacobian is rank deficient");

    CalibrationResult out;
    out.params = {res.params[0], res.params[1], res.params[2], res.params[3]};
    out.rows = good.size();
    out.mse = res.sse / static_cast<double>(good.size());
    out.converged = res.converged;
    const double dof = static_cast<double>(good.size()) - 4.0;
    const Eigen::MatrixXd cov = (res.jacobian.transpose() * res.jacobian).inverse() * (dof > 0.0 ? res.sse / dof : 0.0);
    out.standard_error = {std::sqrt(cov(0, 0)), std::sqrt(cov(1, 1)), std::sqrt(cov(2, 2)), std::sqrt(cov(3, 3))};
    return out;
}

AdiabaticVerdict adiabatic_check(const SmileParams& params, const CriticalFitParams& fit, CriticalMode mode,
                                 const CriticalSearchOptions& options) {
    params.validate();
    AdiabaticVerdict v;
    v.chi_opt = params.chi;
    v.source = mode;
    v.chi_c = mode == CriticalMode::formula ? chi_critical_formula(params.g, params.n, params.maturity, fit)
                                            : chi_critical_numeric(params.g, params.n, params.maturity, options);
    // A flat smile reproduces the lognormal density whatever the boundary says.
    v.adiabatic = params.chi == 1.0 || params.chi < v.chi_c;
    return v;
}

}  // namespace smilecal
