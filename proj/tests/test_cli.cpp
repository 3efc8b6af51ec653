#include "smilecal/cli.hpp"
#include "smilecal/errors.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace smilecal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("smilecal_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

fs::path write_quotes(const fs::path& dir, const SmileParams& p, int count = 25, double half_width = 0.6) {
    io::QuoteFile f;
    f.coordinate = QuoteCoordinate::log_return;
    f.maturity = p.maturity;
    for (int i = 0; i < count; ++i) {
        const double x = p.x_min() - half_width + 2.0 * half_width * i / (count - 1);
        f.quotes.push_back({QuoteCoordinate::log_return, x, sigma_of_x(p, x)});
    }
    const fs::path path = dir / "quotes.csv";
    std::ofstream out(path);
    io::write_quote_file(out, f);
    return path;
}

cli::RunConfig config_in(const fs::path& dir) {
    cli::RunConfig c;
    c.out_dir = dir;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_binary(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("\"") + SMILECAL_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
#ifdef WEXITSTATUS
    return WEXITSTATUS(status);
#else
    return status;
#endif
}

cli::ParamSource explicit_params(double g, double chi, double n, double t) {
    cli::ParamSource s;
    s.g = g;
    s.chi = chi;
    s.n = n;
    s.market.maturity = t;
    return s;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config handling") {
    cli::RunConfig c;
    cli::apply_config(c, {{"grid", "2001"}, {"svg", "true"}, {"isa", "scalar"}, {"chi_max", "12"}});
    CHECK(c.grid_points == 2001);
    CHECK(c.svg);
    CHECK(c.isa == kernels::Isa::scalar);
    CHECK(c.chi_search_max == 12.0);
    CHECK(c.search().chi_max == 12.0);
    CHECK(c.grid().points == 2001);
    CHECK_THROWS_AS(cli::apply_config(c, {{"bogus", "1"}}), ParseError);
    c.span = 0.0;
    CHECK_THROWS_AS(c.validate(), DomainError);

    const cli::RunConfig d = cli::default_config();
    CHECK(d.grid_points == 4001);
    CHECK(d.span == 10.0);

    const SweepAxis a = cli::parse_axis("0.1:0.4:3");
    CHECK(a.lo == 0.1);
    CHECK(a.hi == 0.4);
    CHECK(a.count == 3);
    CHECK_THROWS_AS(cli::parse_axis("0.1:0.4"), ParseError);
    CHECK_THROWS_AS(cli::parse_axis("0.1:0.4:2.5"), ParseError);
}

TEST_CASE("fit: synthetic round trip, flat file, malformed file") {
    TempDir dir("fit");
    std::ostringstream out;
    std::ostringstream err;
    const SmileParams truth{0.12, 2.2, 0.03, 0.75};
    cli::FitArgs args{write_quotes(dir.path, truth), {}};
    CHECK(cli::cmd_fit(args, config_in(dir.path), out, err) == cli::kOk);
    const SmileParams fitted = io::params_from_key_values(io::read_key_values(dir.path / "fit.txt"));
    CHECK(fitted.g == doctest::Approx(truth.g).epsilon(1e-6));
    CHECK(fitted.chi == doctest::Approx(truth.chi).epsilon(1e-6));
    CHECK(fitted.n == doctest::Approx(truth.n).epsilon(1e-6));
    CHECK(fs::exists(dir.path / "fit.csv"));

    const SmileParams flat{0.2, 1.0, 0.01, 1.0};
    args.quotes = write_quotes(dir.path, flat, 9);
    CHECK(cli::cmd_fit(args, config_in(dir.path), out, err) == cli::kOk);
    CHECK(io::read_key_values(dir.path / "fit.txt").at("chi") == "1");

    {
        std::ofstream bad(dir.path / "bad.csv");
        bad << "x,vol\n0.1,0.2\n0.2,oops\n";
    }
    std::ostringstream err2;
    args.quotes = dir.path / "bad.csv";
    CHECK(cli::cmd_fit(args, config_in(dir.path), out, err2) == cli::kParseError);
    CHECK(err2.str().find("line 3") != std::string::npos);

    args.quotes = dir.path / "missing.csv";
    CHECK(cli::cmd_fit(args, config_in(dir.path), out, err) == cli::kParseError);

    // Quote file without a maturity and no flag.
    {
        std::ofstream f(dir.path / "nomat.csv");
        f << "x,vol\n-0.1,0.2\n0,0.18\n0.1,0.2\n0.2,0.22\n";
    }
    args.quotes = dir.path / "nomat.csv";
    CHECK(cli::cmd_fit(args, config_in(dir.path), out, err) == cli::kParseError);
}

TEST_CASE("check exit codes") {
    TempDir dir("check");
    std::ostringstream out;
    std::ostringstream err;
    cli::CheckArgs strong{explicit_params(0.1, 2.7, 0.04, 0.5)};
    CHECK(cli::cmd_check(strong, config_in(dir.path), out, err) == cli::kNonAdiabatic);
    const auto kv = io::read_key_values(dir.path / "check.txt");
    CHECK(kv.at("chi_opt") == "2.7");
    CHECK(std::stod(kv.at("chi_c")) < 2.7);
    CHECK(std::stoi(kv.at("minima")) >= 1);
    CHECK(kv.at("verdict") == "non-adiabatic");
    {
        std::ifstream in(dir.path / "density.csv");
        CHECK(io::read_density_csv(in).xs.size() == 4001);
    }

    cli::CheckArgs flat{explicit_params(0.2, 1.0, 0.01, 1.0)};
    CHECK(cli::cmd_check(flat, config_in(dir.path), out, err) == cli::kOk);

    cli::CheckArgs extreme{explicit_params(0.1, 10.0, 0.001, 0.5)};
    CHECK(cli::cmd_check(extreme, config_in(dir.path), out, err) == cli::kNegativeDensity);
    CHECK(io::read_key_values(dir.path / "check.txt").at("verdict") == "negative-density");

    cli::CheckArgs numeric{explicit_params(0.1, 2.7, 0.04, 0.5), CriticalMode::numeric};
    CHECK(cli::cmd_check(numeric, config_in(dir.path), out, err) == cli::kNonAdiabatic);
    CHECK(io::read_key_values(dir.path / "check.txt").at("mode") == "numeric");

    cli::CheckArgs partial;
    partial.source.g = 0.1;
    partial.source.market.maturity = 0.5;
    CHECK(cli::cmd_check(partial, config_in(dir.path), out, err) == cli::kParseError);

    // Parameters from a previous fit report.
    {
        std::ofstream f(dir.path / "params.txt");
        f << "g=0.1\nchi=1.5\nn=0.04\nmaturity=0.5\n";
    }
    cli::CheckArgs from_file;
    from_file.source.params_file = dir.path / "params.txt";
    CHECK(cli::cmd_check(from_file, config_in(dir.path), out, err) == cli::kOk);
}

TEST_CASE("refit: non-adiabatic quotes are pulled inside the boundary") {
    TempDir dir("refit");
    std::ostringstream out;
    std::ostringstream err;
    const SmileParams truth{0.1, 2.7, 0.04, 0.5};
    cli::RefitArgs args{write_quotes(dir.path, truth, 31, 0.8), {}, CriticalMode::formula, {}};
    CHECK(cli::cmd_refit(args, config_in(dir.path), out, err) == cli::kOk);
    const auto kv = io::read_key_values(dir.path / "refit.txt");
    const SmileParams c = io::params_from_key_values(kv);
    CHECK(c.chi <= std::stod(kv.at("chi_c")));
    CHECK(kv.at("constrained") == "true");
    CHECK(std::stod(kv.at("unconstrained_chi")) == doctest::Approx(2.7).epsilon(1e-6));
    CHECK(is_unimodal(c));

    std::ifstream cmp(dir.path / "refit_compare.csv");
    const io::CsvTable t = io::parse_csv(cmp);
    CHECK(t.header == std::vector<std::string>{"x", "vol_fit", "vol_constrained", "pdf_fit", "pdf_constrained"});
    CHECK(t.rows.size() == 4001);

    args.mode = CriticalMode::numeric;
    CHECK(cli::cmd_refit(args, config_in(dir.path), out, err) == cli::kOk);
    const SmileParams cn = io::params_from_key_values(io::read_key_values(dir.path / "refit.txt"));
    CHECK(is_unimodal(cn));
}

TEST_CASE("refit: already adiabatic quotes reproduce the plain fit") {
    TempDir dir("refit_ok");
    std::ostringstream out;
    std::ostringstream err;
    const SmileParams truth{0.15, 1.4, 0.05, 1.0};
    const fs::path quotes = write_quotes(dir.path, truth);
    CHECK(cli::cmd_fit({quotes, {}}, config_in(dir.path), out, err) == cli::kOk);
    CHECK(cli::cmd_refit({quotes, {}, CriticalMode::formula, {}}, config_in(dir.path), out, err) == cli::kOk);
    CHECK(slurp(dir.path / "fit.csv") == slurp(dir.path / "refit.csv"));
    auto fit = io::read_key_values(dir.path / "fit.txt");
    auto refit = io::read_key_values(dir.path / "refit.txt");
    for (const char* key : {"g", "chi", "n", "residual_rms", "constrained"}) CHECK(fit.at(key) == refit.at(key));
}

TEST_CASE("density and oracle commands") {
    TempDir dir("density");
    std::ostringstream out;
    std::ostringstream err;
    cli::RunConfig cfg = config_in(dir.path);
    cfg.svg = true;
    CHECK(cli::cmd_density({explicit_params(0.2, 1.8, 0.04, 0.5)}, cfg, out, err) == cli::kOk);
    CHECK(fs::exists(dir.path / "density.csv"));
    CHECK(fs::exists(dir.path / "density.svg"));
    const auto kv = io::read_key_values(dir.path / "density.txt");
    CHECK(std::abs(std::stod(kv.at("total_mass")) - 1.0) < 1e-6);

    std::ostringstream oracle_out;
    CHECK(cli::cmd_bl_oracle({explicit_params(0.2, 1.8, 0.04, 0.5), 21}, cfg, oracle_out, err) == cli::kOk);
    std::istringstream in(oracle_out.str());
    const auto report = io::parse_key_values(in);
    CHECK(report.at("points") == "21");
    CHECK(std::stod(report.at("max_rel_err_core")) < 1e-4);

    cfg.isa = kernels::Isa::scalar;
    CHECK(cli::cmd_density({explicit_params(0.2, 1.8, 0.04, 0.5)}, cfg, out, err) == cli::kOk);
    CHECK(io::read_key_values(dir.path / "density.txt").at("isa") == "scalar");
}

TEST_CASE("sweep, resume and calibrate") {
    TempDir dir("sweep");
    std::ostringstream err;
    cli::RunConfig cfg = config_in(dir.path);
    cfg.grid_points = 2001;
    cli::SweepArgs args;
    args.ranges.g = {0.05, 0.3, 3};
    args.ranges.rho = {2.5, 10.0, 3};
    args.ranges.maturity = {0.05, 2.0, 2};

    std::ostringstream first;
    CHECK(cli::cmd_sweep(args, cfg, first, err) == cli::kOk);
    const fs::path csv = dir.path / "sweep.csv";
    const std::string full = slurp(csv);

    // Drop the last few rows and resume: only those are recomputed.
    {
        std::istringstream in(full);
        auto rows = io::read_sweep_csv(in);
        rows[2].status = "error";
        rows.resize(14);
        std::ofstream f(csv);
        io::write_sweep_csv(f, rows);
    }
    std::ostringstream second;
    CHECK(cli::cmd_sweep(args, cfg, second, err) == cli::kOk);
    std::istringstream s2(second.str());
    CHECK(io::parse_key_values(s2).at("reused") == "13");
    CHECK(slurp(csv) == full);

    std::ostringstream third;
    args.resume = false;
    CHECK(cli::cmd_sweep(args, cfg, third, err) == cli::kOk);
    std::istringstream s3(third.str());
    CHECK(io::parse_key_values(s3).at("reused") == "0");

    cli::CalibrateArgs cal{csv, false};
    std::ostringstream cal_out;
    CHECK(cli::cmd_calibrate(cal, cfg, cal_out, err) == cli::kOk);
    const auto kv = io::read_key_values(dir.path / "calibrate.txt");
    CHECK(kv.at("rows") == "18");
    CHECK(std::stod(kv.at("mse")) < 1e-3);
    CHECK(kv.count("alpha_stderr") == 1);

    // Single-row sweep cannot identify the boundary.
    cli::SweepArgs one;
    one.ranges.g = {0.1, 0.1, 1};
    one.ranges.rho = {8.0, 8.0, 1};
    one.ranges.maturity = {0.5, 0.5, 1};
    one.csv = dir.path / "one.csv";
    std::ostringstream o;
    CHECK(cli::cmd_sweep(one, cfg, o, err) == cli::kOk);
    std::ostringstream rank_err;
    CHECK(cli::cmd_calibrate({dir.path / "one.csv", false}, cfg, o, rank_err) == cli::kConvergenceFailure);
    CHECK(rank_err.str().find("rank") != std::string::npos);

    // Too many failing rows.
    cli::RunConfig tight = cfg;
    tight.chi_search_max = 1.05;
    one.csv = dir.path / "fail.csv";
    CHECK(cli::cmd_sweep(one, tight, o, err) == cli::kConvergenceFailure);
}

TEST_CASE("command-line binary") {
    TempDir dir("binary");
    const fs::path log = dir.path / "log.txt";
    {
        std::ofstream bad(dir.path / "bad.csv");
        bad << "x,vol\n0.1,0.2\n0.2\n";
    }
    CHECK(run_binary("fit --maturity 0.5 --out \"" + dir.path.string() + "\" \"" + (dir.path / "bad.csv").string() + "\"", log) == 2);
    CHECK(slurp(log).find("line 3") != std::string::npos);

    CHECK(run_binary("check --g 0.1 --chi 2.7 --n 0.04 --maturity 0.5 --out \"" + dir.path.string() + "\"", log) == 1);
    CHECK(run_binary("check --g 0.2 --chi 1 --n 0.01 --maturity 1 --out \"" + dir.path.string() + "\"", log) == 0);
    CHECK(run_binary("check --g 0.1 --chi 10 --n 0.001 --maturity 0.5 --out \"" + dir.path.string() + "\"", log) == 4);
    CHECK(run_binary("check --bogus-flag", log) == 2);
    CHECK(run_binary("check --g 0.1 --chi 2 --n 0.04 --maturity 0.5 --mode sideways", log) == 2);

    // Flags override the config file.
    {
        std::ofstream cfg(dir.path / "run.cfg");
        cfg << "grid=1001\nout=" << (dir.path / "from_cfg").string() << "\n";
    }
    CHECK(run_binary("density --g 0.2 --chi 1.5 --n 0.04 --maturity 1 --config \"" + (dir.path / "run.cfg").string() +
                         "\" --grid 501",
                     log) == 0);
    CHECK(io::read_key_values(dir.path / "from_cfg" / "density.txt").at("points") == "501");

    // Output directory from the environment.
    const std::string env_cmd = std::string(cli::kOutputDirEnv) + "=\"" + (dir.path / "from_env").string() + "\" ";
    const std::string cmd = env_cmd + "\"" + SMILECAL_CLI_PATH + "\" density --g 0.2 --chi 1.5 --n 0.04 --maturity 1 > \"" +
                            log.string() + "\" 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir.path / "from_env" / "density.csv"));
}

}
