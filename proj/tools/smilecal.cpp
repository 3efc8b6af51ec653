#include "smilecal/cli.hpp"
#include "smilecal/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace smilecal;

struct Common {
    std::optional<double> maturity;
    std::optional<double> spot;
    std::optional<double> rate;
    std::optional<std::size_t> grid;
    std::optional<double> span;
    std::optional<double> chi_max;
    std::optional<std::string> out;
    std::optional<std::string> isa;
    std::optional<unsigned> threads;
    std::optional<std::string> config_file;
    bool svg = false;
};

void add_market(CLI::App* app, Common& c) {
    app->add_option("--maturity", c.maturity, "Maturity T in years");
    app->add_option("--spot", c.spot, "Spot price S0 (default 100)");
    app->add_option("--rate", c.rate, "Risk-free rate r (default 0)");
}

void add_run(CLI::App* app, Common& c) {
    app->add_option("--grid", c.grid, "Density grid points (default 4001)");
    app->add_option("--span", c.span, "Grid half-width in units of g*chi*sqrt(T) (default 10)");
    app->add_option("--chi-max", c.chi_max, "Upper bound of the numeric chi_c search (default 20)");
    app->add_option("--out", c.out, "Output directory (default $SMILECAL_OUTPUT_DIR or .)");
    app->add_option("--isa", c.isa, "Density kernel: auto, scalar or avx2");
    app->add_option("--threads", c.threads, "Sweep worker threads (0 = all cores)");
    app->add_option("--config", c.config_file, "key=value config file (flags take precedence)");
    app->add_flag("--svg", c.svg, "Also write SVG plots");
}

cli::RunConfig make_config(const Common& c) {
    cli::RunConfig config = cli::default_config();
    if (c.config_file) cli::apply_config(config, io::read_key_values(*c.config_file));
    if (c.grid) config.grid_points = *c.grid;
    if (c.span) config.span = *c.span;
    if (c.chi_max) config.chi_search_max = *c.chi_max;
    if (c.out) config.out_dir = *c.out;
    if (c.isa) config.isa = kernels::parse_isa(*c.isa);
    if (c.threads) config.threads = *c.threads;
    if (c.svg) config.svg = true;
    return config;
}

cli::MarketOverrides market(const Common& c) { return {c.maturity, c.spot, c.rate}; }

struct ParamFlags {
    std::optional<double> g;
    std::optional<double> chi;
    std::optional<double> n;
    std::optional<std::string> params_file;
    std::optional<std::string> quotes;
};

void add_params(CLI::App* app, ParamFlags& p) {
    app->add_option("--g", p.g, "Smile floor vol g");
    app->add_option("--chi", p.chi, "Plateau ratio chi");
    app->add_option("--n", p.n, "Squared half-width n");
    app->add_option("--params", p.params_file, "key=value file with g, chi, n, maturity (e.g. fit.txt)");
    app->add_option("quotes", p.quotes, "Quote CSV to fit when no parameters are given");
}

cli::ParamSource source(const ParamFlags& p, const Common& c) {
    cli::ParamSource s;
    s.g = p.g;
    s.chi = p.chi;
    s.n = p.n;
    if (p.params_file) s.params_file = *p.params_file;
    if (p.quotes) s.quotes = *p.quotes;
    s.market = market(c);
    return s;
}

CriticalMode parse_mode(const std::string& m) {
    if (m == "formula") return CriticalMode::formula;
    if (m == "numeric") return CriticalMode::numeric;
    throw ParseError(0, "--mode must be formula or numeric");
}

CriticalFitParams critical_fit(const std::optional<std::string>& path) {
    CriticalFitParams fit;
    if (path) {
        const auto kv = io::read_key_values(*path);
        auto get = [&](const char* key, double& dst) {
            if (auto it = kv.find(key); it != kv.end()) dst = io::parse_double(it->second, 0);
        };
        get("alpha", fit.alpha);
        get("beta", fit.beta);
        get("gamma", fit.gamma);
        get("delta", fit.delta);
    }
    return fit;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Volatility smile calibration with adiabatic (unimodal density) constraints"};
    app.require_subcommand(1);

    Common common;
    ParamFlags params;
    std::string mode = "formula";
    std::optional<std::string> fit_file;

    auto* fit = app.add_subcommand("fit", "Fit the three-parameter smile to a quote file");
    std::string fit_quotes;
    fit->add_option("quotes", fit_quotes, "Quote CSV")->required();
    add_market(fit, common);
    add_run(fit, common);

    auto* check = app.add_subcommand("check", "Compare chi with its critical value and analyze the density");
    add_params(check, params);
    add_market(check, common);
    add_run(check, common);
    check->add_option("--mode", mode, "Critical chi source: formula or numeric");
    check->add_option("--critical-fit", fit_file, "key=value file with alpha, beta, gamma, delta");

    auto* refit = app.add_subcommand("refit", "Fit, check, and refit with chi <= chi_c when needed");
    std::string refit_quotes;
    refit->add_option("quotes", refit_quotes, "Quote CSV")->required();
    add_market(refit, common);
    add_run(refit, common);
    refit->add_option("--mode", mode, "Critical chi source: formula or numeric");
    refit->add_option("--critical-fit", fit_file, "key=value file with alpha, beta, gamma, delta");

    auto* density = app.add_subcommand("density", "Write the implied return density of a smile");
    add_params(density, params);
    add_market(density, common);
    add_run(density, common);

    auto* oracle = app.add_subcommand("bl-oracle", "Compare the analytic density with finite differences of prices");
    std::size_t oracle_points = 41;
    add_params(oracle, params);
    add_market(oracle, common);
    add_run(oracle, common);
    oracle->add_option("--points", oracle_points, "Number of strikes (default 41)");

    auto* sweep = app.add_subcommand("sweep", "Numeric chi_c over a log-spaced (g, rho, T) lattice");
    std::string g_axis = "0.03:0.5:6";
    std::string rho_axis = "2.5:10:6";
    std::string t_axis = "0.0027397260273972603:4:6";
    std::optional<std::string> sweep_csv;
    bool no_resume = false;
    sweep->add_option("--g-range", g_axis, "g axis lo:hi:count");
    sweep->add_option("--rho-range", rho_axis, "rho axis lo:hi:count");
    sweep->add_option("--T-range", t_axis, "maturity axis lo:hi:count");
    sweep->add_option("--csv", sweep_csv, "Output CSV (default <out>/sweep.csv)");
    sweep->add_flag("--no-resume", no_resume, "Recompute rows already present in the CSV");
    add_run(sweep, common);

    auto* calibrate = app.add_subcommand("calibrate", "Fit the closed-form critical boundary to a sweep CSV");
    std::string calibrate_csv;
    bool from_scratch = false;
    calibrate->add_option("sweep_csv", calibrate_csv, "Sweep CSV")->required();
    calibrate->add_flag("--from-scratch", from_scratch, "Start from (1.4, 0.28, -0.17, 0.47)");
    add_run(calibrate, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kParseError;
    }

    try {
        const cli::RunConfig config = make_config(common);
        if (*fit) return cli::cmd_fit({fit_quotes, market(common)}, config, std::cout, std::cerr);
        if (*check) {
            return cli::cmd_check({source(params, common), parse_mode(mode), critical_fit(fit_file)}, config,
                                  std::cout, std::cerr);
        }
        if (*refit) {
            return cli::cmd_refit({refit_quotes, market(common), parse_mode(mode), critical_fit(fit_file)}, config,
                                  std::cout, std::cerr);
        }
        if (*density) return cli::cmd_density({source(params, common)}, config, std::cout, std::cerr);
        if (*oracle) return cli::cmd_bl_oracle({source(params, common), oracle_points}, config, std::cout, std::cerr);
        if (*sweep) {
            cli::SweepArgs args;
            args.ranges = {cli::parse_axis(g_axis), cli::parse_axis(rho_axis), cli::parse_axis(t_axis)};
            if (sweep_csv) args.csv = *sweep_csv;
            args.resume = !no_resume;
            return cli::cmd_sweep(args, config, std::cout, std::cerr);
        }
        if (*calibrate) return cli::cmd_calibrate({calibrate_csv, from_scratch}, config, std::cout, std::cerr);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return cli::kParseError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kParseError;
    }
    return cli::kParseError;
}
