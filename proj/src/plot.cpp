#include "salab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "salab/errors.hpp"

namespace salab {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_svg_plot(const std::filesystem::path& path, const PlotSpec& spec, const std::vector<PlotSeries>& series) {
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0.0) && (!spec.log_y || y > 0.0);
    };
    auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
    auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (tx(x) - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return kTop + (1.0 - (ty(y) - ymin) / (ymax - ymin)) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(spec.title) << "</text>\n";
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        const double sx = kLeft + pw * i / 4.0;
        const double sy = kTop + ph * (1.0 - i / 4.0);
        svg << "<line x1=\"" << sx << "\" y1=\"" << kTop + ph << "\" x2=\"" << sx << "\" y2=\"" << kTop + ph + 5
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << sx << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
            << fmt(spec.log_x ? std::pow(10.0, fx) : fx) << "</text>\n";
        svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << sy << "\" x2=\"" << kLeft << "\" y2=\"" << sy
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">"
            << fmt(spec.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
        << escape(spec.x_label) << "</text>\n";
    svg << "<text transform=\"translate(18," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape(spec.y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        std::ostringstream pts;
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
            if (usable(s.x[i], s.y[i])) pts << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
            << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"" << pts.str() << "\"/>\n";
        if (s.markers)
            for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
                if (usable(s.x[i], s.y[i]))
                    svg << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << color
                        << "\"/>\n";
        const double ly = kTop + 12 + 18.0 * static_cast<double>(k);
        svg << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 35 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
            << "/>\n";
        svg << "<text x=\"" << kLeft + pw + 40 << "\" y=\"" << ly + 4 << "\">" << escape(s.name) << "</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << svg.str();
}

}  // namespace salab
