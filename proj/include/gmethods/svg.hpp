#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gmethods/eval.hpp"

namespace gmethods {

enum class PanelMeasure { bias, empse };

// One figure per comparison and measure: a grid with one panel per scenario,
// horizon on the x axis, one line per method and error bars of +-1.96 MCSE.
std::string render_figure(const PerformanceReport& report, Comparison comparison, PanelMeasure measure);

// Writes bias_<comparison>.svg and empse_<comparison>.svg for all six
// comparisons; returns the written paths.
std::vector<std::filesystem::path> write_figures(const PerformanceReport& report, const std::filesystem::path& dir);

}  // namespace gmethods
