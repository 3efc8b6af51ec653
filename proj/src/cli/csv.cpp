#include "smilecal/errors.hpp"
#include "smilecal/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace smilecal::io {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        fields.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

bool skip_line(std::string_view line) {
    const auto t = trim(line);
    return t.empty() || t.front() == '#';
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::size_t line) {
    text = trim(text);
    if (text == "nan" || text == "NaN") return NAN;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ParseError(line, "expected a number, got '" + std::string(text) + "'");
    }
    return v;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ParseError(1, "missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (skip_line(line)) continue;
        auto fields = split_fields(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw ParseError(number, "expected " + std::to_string(table.header.size()) + " fields, got " +
                                         std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.row_lines.push_back(number);
    }
    if (table.header.empty()) throw ParseError(number, "no header line");
    return table;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << fields[i];
    }
    out << '\n';
}

std::string_view coordinate_name(QuoteCoordinate c) {
    switch (c) {
    case QuoteCoordinate::delta: return "delta";
    case QuoteCoordinate::log_return: return "x";
    case QuoteCoordinate::strike: return "strike";
    }
    return "?";
}

QuoteFile parse_quote_file(std::istream& in) {
    QuoteFile file;
    bool have_header = false;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (skip_line(line)) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 2) throw ParseError(number, "expected two comma-separated fields");
        if (!have_header) {
            const auto& key = fields[0];
            if (key == "spot" || key == "rate" || key == "maturity") {
                const double v = parse_double(fields[1], number);
                (key == "spot" ? file.spot : key == "rate" ? file.rate : file.maturity) = v;
                continue;
            }
            if (fields[1] != "vol") throw ParseError(number, "header must be '<delta|x|strike>,vol'");
            if (key == "delta") {
                file.coordinate = QuoteCoordinate::delta;
            } else if (key == "x") {
                file.coordinate = QuoteCoordinate::log_return;
            } else if (key == "strike") {
                file.coordinate = QuoteCoordinate::strike;
            } else {
                throw ParseError(number, "unknown coordinate kind '" + key + "'");
            }
            have_header = true;
            continue;
        }
        VolQuote q{file.coordinate, parse_double(fields[0], number), parse_double(fields[1], number)};
        if (!(q.vol > 0.0)) throw ParseError(number, "vol must be positive");
        if (q.coordinate == QuoteCoordinate::delta && !(q.value > 0.0 && q.value < 1.0)) {
            throw ParseError(number, "delta must lie in (0, 1)");
        }
        if (q.coordinate == QuoteCoordinate::strike && !(q.value > 0.0)) {
            throw ParseError(number, "strike must be positive");
        }
        for (const auto& prev : file.quotes) {
            if (prev.value == q.value) throw ParseError(number, "duplicate coordinate");
        }
        file.quotes.push_back(q);
    }
    if (!have_header) throw ParseError(number, "missing '<delta|x|strike>,vol' header");
    if (file.quotes.empty()) throw ParseError(number, "no quotes");
    return file;
}

QuoteFile read_quote_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open " + path.string());
    return parse_quote_file(in);
}

void write_quote_file(std::ostream& out, const QuoteFile& file) {
    if (file.spot) out << "spot," << format_double(*file.spot) << '\n';
    if (file.rate) out << "rate," << format_double(*file.rate) << '\n';
    if (file.maturity) out << "maturity," << format_double(*file.maturity) << '\n';
    out << coordinate_name(file.coordinate) << ",vol\n";
    for (const auto& q : file.quotes) out << format_double(q.value) << ',' << format_double(q.vol) << '\n';
}

KeyValues parse_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (skip_line(line)) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(number, "expected key=value");
        kv[std::string(trim(std::string_view(line).substr(0, eq)))] =
            std::string(trim(std::string_view(line).substr(eq + 1)));
    }
    return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open " + path.string());
    return parse_key_values(in);
}

void write_key_values(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& items) {
    for (const auto& [k, v] : items) out << k << '=' << v << '\n';
}

SmileParams params_from_key_values(const KeyValues& kv) {
    auto get = [&](const char* key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(0, std::string("missing key '") + key + "'");
        return parse_double(it->second, 0);
    };
    SmileParams p{get("g"), get("chi"), get("n"), get("maturity")};
    p.validate();
    return p;
}

std::vector<std::pair<std::string, std::string>> fit_result_items(const SmileFitResult& r) {
    return {{"g", format_double(r.params.g)},
            {"chi", format_double(r.params.chi)},
            {"n", format_double(r.params.n)},
            {"maturity", format_double(r.params.maturity)},
            {"residual_rms", format_double(r.residual_rms)},
            {"converged", r.converged ? "true" : "false"},
            {"constrained", r.constrained ? "true" : "false"},
            {"iterations", std::to_string(r.iterations)}};
}

void write_density_csv(std::ostream& out, const SmileParams& params, const DensityCurve& curve) {
    out << "x,sigma,pdf\n";
    for (std::size_t i = 0; i < curve.xs.size(); ++i) {
        write_csv_row(out, {format_double(curve.xs[i]), format_double(sigma_of_x(params, curve.xs[i])),
                            format_double(curve.ps[i])});
    }
}

DensityCurve read_density_csv(std::istream& in) {
    const CsvTable t = parse_csv(in);
    const auto cx = t.column("x");
    const auto cp = t.column("pdf");
    DensityCurve curve;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        curve.xs.push_back(parse_double(t.rows[i][cx], t.row_lines[i]));
        curve.ps.push_back(parse_double(t.rows[i][cp], t.row_lines[i]));
        if (i > 0 && !(curve.xs[i] > curve.xs[i - 1])) throw ParseError(t.row_lines[i], "x must be increasing");
    }
    if (curve.xs.size() >= 2) {
        curve.meta.lo = curve.xs.front();
        curve.meta.hi = curve.xs.back();
        curve.meta.spacing = (curve.meta.hi - curve.meta.lo) / static_cast<double>(curve.xs.size() - 1);
    }
    curve.mass = trapezoid(curve.xs, curve.ps);
    return curve;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "g,T,n,rho,chi_c,status\n";
    for (const auto& r : rows) {
        write_csv_row(out, {format_double(r.g), format_double(r.maturity), format_double(r.n), format_double(r.rho),
                            format_double(r.chi_c), r.status});
    }
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
    const CsvTable t = parse_csv(in);
    const auto cg = t.column("g");
    const auto ct = t.column("T");
    const auto cn = t.column("n");
    const auto cr = t.column("rho");
    const auto cc = t.column("chi_c");
    const auto cs = t.column("status");
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const auto line = t.row_lines[i];
        rows.push_back({parse_double(f[cg], line), parse_double(f[ct], line), parse_double(f[cn], line),
                        parse_double(f[cr], line), parse_double(f[cc], line), f[cs]});
    }
    return rows;
}

}  // namespace smilecal::io
