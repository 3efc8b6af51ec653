#include "smilecal/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace smilecal::io {
namespace {

std::string escaped(std::string_view text) {
    std::string s;
    for (char c : text) {
        switch (c) {
        case '<': s += "&lt;"; break;
        case '>': s += "&gt;"; break;
        case '&': s += "&amp;"; break;
        case '"': s += "&quot;"; break;
        default: s += c;
        }
    }
    return s;
}

}  // namespace

void write_svg_plot(std::ostream& out, std::string_view title, std::string_view x_label, std::string_view y_label,
                    const std::vector<SvgSeries>& series) {
    constexpr double width = 640.0;
    constexpr double height = 420.0;
    constexpr double left = 70.0;
    constexpr double right = 20.0;
    constexpr double top = 40.0;
    constexpr double bottom = 50.0;
    static constexpr std::array<const char*, 6> colors = {"#d62728", "#1f77b4", "#2ca02c",
                                                          "#ff7f0e", "#9467bd", "#8c564b"};

    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -xmin;
    double ymin = xmin;
    double ymax = -xmin;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
            if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
            xmin = std::min(xmin, s.xs[i]);
            xmax = std::max(xmax, s.xs[i]);
            ymin = std::min(ymin, s.ys[i]);
            ymax = std::max(ymax, s.ys[i]);
        }
    }
    if (!(xmax > xmin)) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    if (!(ymax > ymin)) {
        ymin -= 1.0;
        ymax += 1.0;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (width - left - right); };
    auto py = [&](double y) { return height - bottom - (y - ymin) / (ymax - ymin) * (height - top - bottom); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escaped(title)
        << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right << "\" height=\""
        << height - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        out << "<text x=\"" << px(fx) << "\" y=\"" << height - bottom + 16 << "\" text-anchor=\"middle\">"
            << format_double(std::round(fx * 1e4) / 1e4) << "</text>\n";
        out << "<text x=\"" << left - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">"
            << format_double(std::round(fy * 1e4) / 1e4) << "</text>\n";
    }
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">" << escaped(x_label)
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << height / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << height / 2 << ")\">" << escaped(y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = colors[k % colors.size()];
        if (s.markers) {
            for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
                if (!std::isfinite(s.ys[i])) continue;
                out << "<circle cx=\"" << px(s.xs[i]) << "\" cy=\"" << py(s.ys[i]) << "\" r=\"3\" fill=\"" << color
                    << "\"/>\n";
            }
        } else {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
                if (!std::isfinite(s.ys[i])) continue;
                out << px(s.xs[i]) << ',' << py(s.ys[i]) << ' ';
            }
            out << "\"/>\n";
        }
        out << "<text x=\"" << width - right - 8 << "\" y=\"" << top + 16 + 16 * static_cast<double>(k)
            << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escaped(s.name) << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace smilecal::io
