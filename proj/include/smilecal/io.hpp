#pragma once

#include "smilecal/adiabatic.hpp"
#include "smilecal/density.hpp"
#include "smilecal/smile_model.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace smilecal::io {

/// Shortest text form that parses back to the same double.
std::string format_double(double v);
/// Throws ParseError(line, ...) unless the whole field is a number.
double parse_double(std::string_view text, std::size_t line);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;  // 1-based source line of each row

    /// Index of a header column; throws ParseError when absent.
    std::size_t column(std::string_view name) const;
};

/// Comma-separated, one header line, '#' comments and blank lines skipped.
CsvTable parse_csv(std::istream& in);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Smile quotes with optional pricing context.
///
///   # comment
///   spot,100          (optional context rows: spot, rate, maturity)
///   maturity,0.25
///   delta,vol         (header: delta | x | strike, then vol)
///   0.10,0.125
///   ...
struct QuoteFile {
    QuoteCoordinate coordinate = QuoteCoordinate::log_return;
    std::vector<VolQuote> quotes;
    std::optional<double> spot;
    std::optional<double> rate;
    std::optional<double> maturity;
};

QuoteFile parse_quote_file(std::istream& in);
QuoteFile read_quote_file(const std::filesystem::path& path);
void write_quote_file(std::ostream& out, const QuoteFile& file);

std::string_view coordinate_name(QuoteCoordinate c);

/// key=value report files.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& items);

/// Smile parameters from a key=value file (g, chi, n, maturity).
SmileParams params_from_key_values(const KeyValues& kv);
std::vector<std::pair<std::string, std::string>> fit_result_items(const SmileFitResult& r);

/// Density curve CSV: x,sigma,pdf.
void write_density_csv(std::ostream& out, const SmileParams& params, const DensityCurve& curve);
DensityCurve read_density_csv(std::istream& in);

/// Sweep CSV: g,T,n,rho,chi_c,status.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& in);

struct SvgSeries {
    std::string name;
    std::vector<double> xs;
    std::vector<double> ys;
    bool markers = false;
};

/// Minimal line plot, one polyline (or marker set) per series.
void write_svg_plot(std::ostream& out, std::string_view title, std::string_view x_label, std::string_view y_label,
                    const std::vector<SvgSeries>& series);

}  // namespace smilecal::io
