#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace salab {

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
    bool markers = false;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
};

/// Minimal static SVG line chart. Non-finite (or non-positive on log axes) points are skipped.
void write_svg_plot(const std::filesystem::path& path, const PlotSpec& spec, const std::vector<PlotSeries>& series);

}  // namespace salab
