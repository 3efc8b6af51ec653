#include "smilecal/cli.hpp"
#include "smilecal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace smilecal::cli {

void RunConfig::validate() const {
    if (grid_points < 101) throw DomainError("grid must have at least 101 points");
    if (!(span > 0.0 && oracle_step > 0.0 && chi_scan_step > 0.0 && chi_tolerance > 0.0)) {
        throw DomainError("numeric settings must be positive");
    }
    if (!(chi_scan_start > 1.0 && chi_search_max > chi_scan_start)) {
        throw DomainError("chi search bounds must satisfy 1 < start < max");
    }
}

GridOptions RunConfig::grid() const { return {grid_points, span, isa}; }

CriticalSearchOptions RunConfig::search() const {
    return {grid(), chi_scan_start, chi_scan_step, chi_tolerance, chi_search_max};
}

RunConfig default_config() {
    RunConfig config;
    if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') {
        config.out_dir = dir;
    }
    return config;
}

void apply_config(RunConfig& config, const io::KeyValues& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "grid") {
            config.grid_points = static_cast<std::size_t>(io::parse_double(value, 0));
        } else if (key == "span") {
            config.span = io::parse_double(value, 0);
        } else if (key == "oracle_step") {
            config.oracle_step = io::parse_double(value, 0);
        } else if (key == "chi_scan_start") {
            config.chi_scan_start = io::parse_double(value, 0);
        } else if (key == "chi_scan_step") {
            config.chi_scan_step = io::parse_double(value, 0);
        } else if (key == "chi_tolerance") {
            config.chi_tolerance = io::parse_double(value, 0);
        } else if (key == "chi_max") {
            config.chi_search_max = io::parse_double(value, 0);
        } else if (key == "out") {
            config.out_dir = value;
        } else if (key == "svg") {
            config.svg = value == "true" || value == "1";
        } else if (key == "isa") {
            config.isa = kernels::parse_isa(value);
        } else if (key == "threads") {
            config.threads = static_cast<unsigned>(io::parse_double(value, 0));
        } else {
            throw ParseError(0, "unknown config key '" + key + "'");
        }
    }
}

SweepAxis parse_axis(std::string_view text) {
    const auto a = text.find(':');
    const auto b = a == std::string_view::npos ? a : text.find(':', a + 1);
    if (b == std::string_view::npos) throw ParseError(0, "axis must be lo:hi:count");
    SweepAxis axis;
    axis.lo = io::parse_double(text.substr(0, a), 0);
    axis.hi = io::parse_double(text.substr(a + 1, b - a - 1), 0);
    const double count = io::parse_double(text.substr(b + 1), 0);
    if (!(count >= 1.0) || count != std::floor(count)) throw ParseError(0, "axis count must be a positive integer");
    axis.count = static_cast<std::size_t>(count);
    axis.values();
    return axis;
}

namespace {

template <class Body>
int guarded(std::ostream& err, Body body) {
    try {
        return body();
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kParseError;
    } catch (const InsufficientDataError& e) {
        err << "input error: " << e.what() << '\n';
        return kParseError;
    } catch (const DomainError& e) {
        err << "input error: " << e.what() << '\n';
        return kParseError;
    } catch (const RankDeficiencyError& e) {
        err << "rank deficiency: " << e.what() << '\n';
        return kConvergenceFailure;
    } catch (const OutOfRangeError& e) {
        err << "search failed: " << e.what() << '\n';
        return kConvergenceFailure;
    } catch (const MonotonicityError& e) {
        err << "search failed: " << e.what() << '\n';
        return kConvergenceFailure;
    }
}

std::ofstream open_output(const RunConfig& config, const std::string& name) {
    std::filesystem::create_directories(config.out_dir);
    const auto path = config.out_dir / name;
    std::ofstream out(path);
    if (!out) throw DomainError("cannot write " + path.string());
    return out;
}

double resolve_maturity(const MarketOverrides& m, const std::optional<double>& from_file) {
    if (m.maturity) return *m.maturity;
    if (from_file) return *from_file;
    throw ParseError(0, "maturity not given (use --maturity or a 'maturity' row)");
}

MarketEnv resolve_env(const MarketOverrides& m, const io::QuoteFile* file, double maturity) {
    const double spot = m.spot ? *m.spot : (file && file->spot ? *file->spot : 100.0);
    const double rate = m.rate ? *m.rate : (file && file->rate ? *file->rate : 0.0);
    return MarketEnv::make(spot, rate, maturity);
}

struct LoadedQuotes {
    io::QuoteFile file;
    MarketEnv env;
    std::vector<SmilePoint> points;
};

LoadedQuotes load_quotes(const std::filesystem::path& path, const MarketOverrides& market) {
    LoadedQuotes q{io::read_quote_file(path), {}, {}};
    const double maturity = resolve_maturity(market, q.file.maturity);
    q.env = resolve_env(market, &q.file, maturity);
    q.points = quotes_to_points(q.file.quotes, maturity, q.env);
    return q;
}

std::vector<std::pair<std::string, std::string>> prefixed(const std::string& prefix,
                                                          std::vector<std::pair<std::string, std::string>> items) {
    for (auto& kv : items) kv.first = prefix + kv.first;
    return items;
}

void write_report(std::ostream& out, const RunConfig& config, const std::string& file,
                  const std::vector<std::pair<std::string, std::string>>& items) {
    io::write_key_values(out, items);
    auto f = open_output(config, file);
    io::write_key_values(f, items);
}

void write_fit_csv(const RunConfig& config, const std::string& name, std::span<const SmilePoint> points,
                   const SmileParams& params) {
    auto f = open_output(config, name);
    f << "x,vol,model,residual\n";
    for (const auto& pt : points) {
        const double model = sigma_of_x(params, pt.x);
        io::write_csv_row(f, {io::format_double(pt.x), io::format_double(pt.vol), io::format_double(model),
                              io::format_double(model - pt.vol)});
    }
}

std::vector<double> smile_curve(const SmileParams& p, std::span<const double> xs) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(sigma_of_x(p, x));
    return out;
}

struct ResolvedParams {
    SmileParams params;
    MarketEnv env;
};

ResolvedParams resolve_params(const ParamSource& src, const RunConfig& config, std::ostream& err) {
    if (src.g || src.chi || src.n) {
        if (!(src.g && src.chi && src.n)) throw ParseError(0, "--g, --chi and --n must be given together");
        const double maturity = resolve_maturity(src.market, std::nullopt);
        SmileParams p{*src.g, *src.chi, *src.n, maturity};
        p.validate();
        return {p, resolve_env(src.market, nullptr, maturity)};
    }
    if (src.params_file) {
        const auto kv = io::read_key_values(*src.params_file);
        SmileParams p = io::params_from_key_values(kv);
        if (src.market.maturity) p.maturity = *src.market.maturity;
        return {p, resolve_env(src.market, nullptr, p.maturity)};
    }
    if (src.quotes) {
        const auto q = load_quotes(*src.quotes, src.market);
        const auto fit = fit_smile(q.points, q.env.maturity);
        if (!fit.converged) err << "warning: smile fit did not converge\n";
        (void)config;
        return {fit.params, q.env};
    }
    throw ParseError(0, "no smile parameters: pass --g/--chi/--n, --params or a quote file");
}

std::string join_x(const std::vector<StationaryPoint>& pts) {
    std::string s;
    for (const auto& p : pts) {
        if (!s.empty()) s += ';';
        s += io::format_double(p.x);
    }
    return s;
}

std::vector<std::pair<std::string, std::string>> report_items(const DensityReport& r) {
    std::string neg;
    for (const auto& iv : r.negative_regions) {
        if (!neg.empty()) neg += ';';
        neg += io::format_double(iv.lo) + ":" + io::format_double(iv.hi);
    }
    return {{"total_mass", io::format_double(r.total_mass)},
            {"martingale_gap", io::format_double(r.martingale_gap)},
            {"unimodal", r.unimodal ? "true" : "false"},
            {"minima", std::to_string(r.minima.size())},
            {"minima_x", join_x(r.minima)},
            {"negative_regions", std::to_string(r.negative_regions.size())},
            {"negative_x", neg}};
}

double critical_chi(const SmileParams& p, CriticalMode mode, const CriticalFitParams& fit, const RunConfig& config) {
    if (mode == CriticalMode::formula) return chi_critical_formula(p.g, p.n, p.maturity, fit);
    return chi_critical_search(p.g, p.n, p.maturity, config.search()).chi_unimodal;
}

}  // namespace

int cmd_fit(const FitArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        config.validate();
        const auto q = load_quotes(args.quotes, args.market);
        const SmileFitResult fit = fit_smile(q.points, q.env.maturity);
        write_report(out, config, "fit.txt", io::fit_result_items(fit));
        write_fit_csv(config, "fit.csv", q.points, fit.params);
        if (config.svg) {
            std::vector<double> xs;
            const double lo = q.points.front().x;
            const double hi = q.points.back().x;
            for (int i = 0; i <= 200; ++i) xs.push_back(lo + (hi - lo) * i / 200.0);
            io::SvgSeries data{"quotes", {}, {}, true};
            for (const auto& pt : q.points) {
                data.xs.push_back(pt.x);
                data.ys.push_back(pt.vol);
            }
            auto f = open_output(config, "smile.svg");
            io::write_svg_plot(f, "Smile fit", "x", "implied vol",
                               {data, {"fit", xs, smile_curve(fit.params, xs), false}});
        }
        if (!fit.converged) {
            err << "smile fit did not converge after " << fit.iterations << " iterations\n";
            return static_cast<int>(kConvergenceFailure);
        }
        return static_cast<int>(kOk);
    });
}

int cmd_check(const CheckArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        config.validate();
        const auto [params, env] = resolve_params(args.source, config, err);
        const AdiabaticVerdict verdict = adiabatic_check(params, args.fit, args.mode, config.search());
        const DensityCurve curve = return_density_curve(params, config.grid());
        const DensityReport report = analyze(curve);

        int code = kOk;
        std::string label = "adiabatic";
        if (!report.negative_regions.empty()) {
            code = kNegativeDensity;
            label = "negative-density";
        } else if (!report.unimodal || !verdict.adiabatic) {
            code = kNonAdiabatic;
            label = "non-adiabatic";
        }
        std::vector<std::pair<std::string, std::string>> items = {
            {"g", io::format_double(params.g)},
            {"n", io::format_double(params.n)},
            {"maturity", io::format_double(params.maturity)},
            {"chi_opt", io::format_double(verdict.chi_opt)},
            {"chi_c", io::format_double(verdict.chi_c)},
            {"mode", verdict.source == CriticalMode::formula ? "formula" : "numeric"},
            {"adiabatic", verdict.adiabatic ? "true" : "false"}};
        for (auto& kv : report_items(report)) items.push_back(std::move(kv));
        items.emplace_back("verdict", label);
        write_report(out, config, "check.txt", items);
        {
            auto f = open_output(config, "density.csv");
            io::write_density_csv(f, params, curve);
        }
        if (config.svg) {
            auto f = open_output(config, "density.svg");
            io::write_svg_plot(f, "Return density", "x", "P(x)", {{"density", curve.xs, curve.ps, false}});
        }
        (void)env;
        return code;
    });
}

int cmd_refit(const RefitArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        config.validate();
        const auto q = load_quotes(args.quotes, args.market);
        const double maturity = q.env.maturity;
        const SmileFitResult fit = fit_smile(q.points, maturity);
        if (!fit.converged) {
            err << "smile fit did not converge\n";
            return static_cast<int>(kConvergenceFailure);
        }

        SmileFitResult final_fit = fit;
        double final_chi_c = critical_chi(fit.params, args.mode, args.fit, config);
        CriticalMode used_mode = args.mode;
        const bool fit_ok = (fit.params.chi == 1.0 || fit.params.chi < final_chi_c) && is_unimodal(fit.params, config.grid());

        if (!fit_ok) {
            std::vector<CriticalMode> modes{args.mode};
            if (args.mode == CriticalMode::formula) modes.push_back(CriticalMode::numeric);
            bool solved = false;
            for (CriticalMode mode : modes) {
                double bound = std::max(1.0, critical_chi(fit.params, mode, args.fit, config));
                for (int pass = 0; pass < 6 && !solved; ++pass) {
                    const SmileFitResult c = constrained_fit_smile(q.points, maturity, bound, fit.params);
                    const double chi_c = c.params.chi == 1.0 ? INFINITY : critical_chi(c.params, mode, args.fit, config);
                    if (c.params.chi <= chi_c && is_unimodal(c.params, config.grid())) {
                        final_fit = c;
                        final_chi_c = chi_c;
                        used_mode = mode;
                        solved = true;
                        break;
                    }
                    // (g, n) moved with the constraint; tighten to the boundary at the new point.
                    const double next = std::max(1.0, std::min(bound, chi_c) * (1.0 - 1e-6));
                    if (!(next < bound)) break;
                    bound = next;
                }
                if (solved) break;
                err << "constrained fit still non-unimodal in "
                    << (mode == CriticalMode::formula ? "formula" : "numeric") << " mode\n";
            }
            if (!solved) return static_cast<int>(kRefitFailure);
        }

        auto items = io::fit_result_items(final_fit);
        items.emplace_back("chi_c", io::format_double(final_chi_c));
        items.emplace_back("mode", used_mode == CriticalMode::formula ? "formula" : "numeric");
        for (auto& kv : prefixed("unconstrained_", io::fit_result_items(fit))) items.push_back(std::move(kv));
        write_report(out, config, "refit.txt", items);
        write_fit_csv(config, "refit.csv", q.points, final_fit.params);

        // Both smiles and densities on one grid wide enough for either.
        const double scale = std::max(fit.params.g * fit.params.chi, final_fit.params.g * final_fit.params.chi) *
                             std::sqrt(maturity);
        const double half = config.span * scale;
        const kernels::UniformGrid grid{fit.params.x_min() - half,
                                        2.0 * half / static_cast<double>(config.grid_points - 1)};
        std::vector<double> xs(config.grid_points);
        for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = grid.at(i);
        std::vector<double> pdf_fit(xs.size());
        std::vector<double> pdf_con(xs.size());
        kernels::smile_density(fit.params, grid, pdf_fit, config.isa);
        kernels::smile_density(final_fit.params, grid, pdf_con, config.isa);
        {
            auto f = open_output(config, "refit_compare.csv");
            f << "x,vol_fit,vol_constrained,pdf_fit,pdf_constrained\n";
            for (std::size_t i = 0; i < xs.size(); ++i) {
                io::write_csv_row(f, {io::format_double(xs[i]), io::format_double(sigma_of_x(fit.params, xs[i])),
                                      io::format_double(sigma_of_x(final_fit.params, xs[i])),
                                      io::format_double(pdf_fit[i]), io::format_double(pdf_con[i])});
            }
        }
        if (config.svg) {
            auto f = open_output(config, "refit_density.svg");
            io::write_svg_plot(f, "Return density: unconstrained vs adiabatic", "x", "P(x)",
                               {{"unconstrained", xs, pdf_fit, false}, {"adiabatic", xs, pdf_con, false}});
            auto g = open_output(config, "refit_smile.svg");
            io::SvgSeries data{"quotes", {}, {}, true};
            for (const auto& pt : q.points) {
                data.xs.push_back(pt.x);
                data.ys.push_back(pt.vol);
            }
            std::vector<double> sx;
            for (int i = 0; i <= 200; ++i) {
                sx.push_back(q.points.front().x + (q.points.back().x - q.points.front().x) * i / 200.0);
            }
            io::write_svg_plot(g, "Smile: unconstrained vs adiabatic", "x", "implied vol",
                               {data,
                                {"unconstrained", sx, smile_curve(fit.params, sx), false},
                                {"adiabatic", sx, smile_curve(final_fit.params, sx), false}});
        }
        return static_cast<int>(kOk);
    });
}

int cmd_density(const DensityArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        config.validate();
        const auto [params, env] = resolve_params(args.source, config, err);
        const DensityCurve curve = return_density_curve(params, config.grid());
        const DensityReport report = analyze(curve);
        auto items = report_items(report);
        items.emplace_back("points", std::to_string(curve.xs.size()));
        items.emplace_back("isa", std::string(kernels::name(kernels::resolve(config.isa))));
        write_report(out, config, "density.txt", items);
        auto f = open_output(config, "density.csv");
        io::write_density_csv(f, params, curve);
        if (config.svg) {
            auto s = open_output(config, "density.svg");
            io::write_svg_plot(s, "Return density", "x", "P(x)", {{"density", curve.xs, curve.ps, false}});
        }
        (void)env;
        return static_cast<int>(kOk);
    });
}

int cmd_bl_oracle(const OracleArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        config.validate();
        if (args.points < 2) throw DomainError("bl-oracle needs at least two points");
        const auto [params, env] = resolve_params(args.source, config, err);
        const double half = 4.0 * params.g * params.chi * std::sqrt(params.maturity);
        const auto vol_fn = smile_in_strike(env, params);

        struct Row {
            double x, strike, analytic, oracle;
            bool flagged;
        };
        std::vector<Row> rows;
        double peak = 0.0;
        for (std::size_t i = 0; i < args.points; ++i) {
            const double x = params.x_min() - half + 2.0 * half * static_cast<double>(i) /
                                                         static_cast<double>(args.points - 1);
            const double strike = x_to_strike(env, x);
            const double h = config.oracle_step * strike * sigma_of_x(params, x) * std::sqrt(params.maturity);
            const OracleResult r = bl_density_oracle(env, vol_fn, strike, h);
            rows.push_back({x, strike, return_density(params, x), r.density * strike, r.flagged});
            peak = std::max(peak, rows.back().analytic);
        }
        double worst = 0.0;
        std::size_t flagged = 0;
        auto f = open_output(config, "bl_oracle.csv");
        f << "x,strike,analytic,oracle,rel_err,flagged\n";
        for (const auto& r : rows) {
            const double rel = std::abs(r.oracle - r.analytic) / std::max(std::abs(r.analytic), 1e-300);
            if (r.analytic > 1e-3 * peak) worst = std::max(worst, rel);
            flagged += r.flagged ? 1 : 0;
            io::write_csv_row(f, {io::format_double(r.x), io::format_double(r.strike), io::format_double(r.analytic),
                                  io::format_double(r.oracle), io::format_double(rel), r.flagged ? "1" : "0"});
        }
        io::write_key_values(out, {{"points", std::to_string(rows.size())},
                                   {"max_rel_err_core", io::format_double(worst)},
                                   {"flagged", std::to_string(flagged)}});
        return static_cast<int>(kOk);
    });
}

int cmd_sweep(const SweepArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        config.validate();
        const auto path = args.csv ? *args.csv : config.out_dir / "sweep.csv";
        std::vector<SweepRow> rows = sweep_lattice(args.ranges);

        std::size_t reused = 0;
        if (args.resume && std::filesystem::exists(path)) {
            std::ifstream in(path);
            const auto previous = io::read_sweep_csv(in);
            for (auto& row : rows) {
                for (const auto& p : previous) {
                    if (p.ok() && p.g == row.g && p.maturity == row.maturity && p.rho == row.rho) {
                        row = p;
                        ++reused;
                        break;
                    }
                }
            }
        }
        run_sweep(rows, config.search(), config.threads);

        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        {
            std::ofstream f(path);
            if (!f) throw DomainError("cannot write " + path.string());
            io::write_sweep_csv(f, rows);
        }
        const auto ok = static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok(); }));
        io::write_key_values(out, {{"rows", std::to_string(rows.size())},
                                   {"ok", std::to_string(ok)},
                                   {"reused", std::to_string(reused)},
                                   {"csv", path.string()}});
        if (config.svg) {
            // Boundary chi_c(rho) for each g at the middle maturity of the lattice.
            const auto ts = args.ranges.maturity.values();
            const double t_mid = ts[ts.size() / 2];
            std::vector<io::SvgSeries> series;
            for (double g : args.ranges.g.values()) {
                io::SvgSeries s{"g=" + io::format_double(std::round(g * 1e4) / 1e4), {}, {}, false};
                for (const auto& r : rows) {
                    if (r.g == g && r.maturity == t_mid && r.ok()) {
                        s.xs.push_back(r.n);
                        s.ys.push_back(r.chi_c);
                    }
                }
                series.push_back(std::move(s));
            }
            auto f = open_output(config, "boundary.svg");
            io::write_svg_plot(f, "Critical chi vs n (T=" + io::format_double(t_mid) + ")", "n", "chi_c", series);
        }
        if (10 * ok < 9 * rows.size()) {
            err << "only " << ok << " of " << rows.size() << " sweep rows succeeded\n";
            return static_cast<int>(kConvergenceFailure);
        }
        return static_cast<int>(kOk);
    });
}

int cmd_calibrate(const CalibrateArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        std::ifstream in(args.sweep_csv);
        if (!in) throw ParseError(0, "cannot open " + args.sweep_csv.string());
        const auto rows = io::read_sweep_csv(in);
        const CriticalFitParams init =
            args.from_scratch ? CriticalFitParams{1.4, 0.28, -0.17, 0.47} : CriticalFitParams{};
        const CalibrationResult r = calibrate_critical_fit(rows, init);
        write_report(out, config, "calibrate.txt",
                     {{"alpha", io::format_double(r.params.alpha)},
                      {"alpha_stderr", io::format_double(r.standard_error.alpha)},
                      {"beta", io::format_double(r.params.beta)},
                      {"beta_stderr", io::format_double(r.standard_error.beta)},
                      {"gamma", io::format_double(r.params.gamma)},
                      {"gamma_stderr", io::format_double(r.standard_error.gamma)},
                      {"delta", io::format_double(r.params.delta)},
                      {"delta_stderr", io::format_double(r.standard_error.delta)},
                      {"mse", io::format_double(r.mse)},
                      {"rows", std::to_string(r.rows)},
                      {"converged", r.converged ? "true" : "false"}});
        return static_cast<int>(r.converged ? kOk : kConvergenceFailure);
    });
}

}  // namespace smilecal::cli
