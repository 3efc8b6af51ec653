#pragma once

#include "smilecal/adiabatic.hpp"
#include "smilecal/io.hpp"
#include "smilecal/kernels.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace smilecal::cli {

/// Process exit codes; stable across releases.
enum ExitCode : int {
    kOk = 0,
    kNonAdiabatic = 1,
    kParseError = 2,
    kConvergenceFailure = 3,
    kNegativeDensity = 4,
    kRefitFailure = 5,
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "SMILECAL_OUTPUT_DIR";

struct RunConfig {
    std::size_t grid_points = 4001;
    double span = 10.0;
    double oracle_step = 0.02;  // fraction of sigma(K) sqrt(T), in strike units
    double chi_scan_start = 1.01;
    double chi_scan_step = 0.05;
    double chi_tolerance = 1e-4;
    double chi_search_max = 20.0;
    std::filesystem::path out_dir = ".";
    bool svg = false;
    kernels::Isa isa = kernels::Isa::automatic;
    unsigned threads = 0;

    void validate() const;
    GridOptions grid() const;
    CriticalSearchOptions search() const;
};

/// Built-in defaults with the output directory taken from the environment when set.
RunConfig default_config();
/// Overlays keys from a key=value config file (grid, span, oracle_step, chi_scan_start,
/// chi_scan_step, chi_tolerance, chi_max, out, svg, isa, threads).
void apply_config(RunConfig& config, const io::KeyValues& kv);

struct MarketOverrides {
    std::optional<double> maturity;
    std::optional<double> spot;
    std::optional<double> rate;
};

/// Where a command gets its smile parameters: explicit values, a key=value
/// params file, or a quote file that is fitted first (in that order).
struct ParamSource {
    std::optional<double> g;
    std::optional<double> chi;
    std::optional<double> n;
    std::optional<std::filesystem::path> params_file;
    std::optional<std::filesystem::path> quotes;
    MarketOverrides market;
};

struct FitArgs {
    std::filesystem::path quotes;
    MarketOverrides market;
};

struct CheckArgs {
    ParamSource source;
    CriticalMode mode = CriticalMode::formula;
    CriticalFitParams fit;
};

struct RefitArgs {
    std::filesystem::path quotes;
    MarketOverrides market;
    CriticalMode mode = CriticalMode::formula;
    CriticalFitParams fit;
};

struct DensityArgs {
    ParamSource source;
};

struct OracleArgs {
    ParamSource source;
    std::size_t points = 41;
};

struct SweepArgs {
    SweepRanges ranges;
    std::optional<std::filesystem::path> csv;  // default out_dir/sweep.csv
    bool resume = true;
};

struct CalibrateArgs {
    std::filesystem::path sweep_csv;
    bool from_scratch = false;
};

int cmd_fit(const FitArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_check(const CheckArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_refit(const RefitArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_density(const DensityArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_bl_oracle(const OracleArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_calibrate(const CalibrateArgs& args, const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses "lo:hi:count" into a sweep axis.
SweepAxis parse_axis(std::string_view text);

}  // namespace smilecal::cli
