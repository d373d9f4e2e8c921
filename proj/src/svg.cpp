#include "gmethods/svg.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "gmethods/report_io.hpp"

namespace gmethods {

namespace {

constexpr double kPanelW = 260;
constexpr double kPanelH = 190;
constexpr double kMargin = 36;
constexpr std::array<const char*, 6> kColors = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

std::string file_tag(Comparison c) {
  std::string s(label(c));
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

}  // namespace

std::string render_figure(const PerformanceReport& report, Comparison comparison, PanelMeasure measure) {
  std::set<int> scenarios;
  std::vector<std::string> methods;
  for (const auto& r : report.rows) {
    scenarios.insert(r.scenario);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  const int cols = std::min<int>(3, std::max<int>(1, static_cast<int>(scenarios.size())));
  const int rows = (static_cast<int>(scenarios.size()) + cols - 1) / std::max(cols, 1);
  const double width = cols * (kPanelW + kMargin) + kMargin;
  const double legend_h = 24;
  const double height = std::max(rows, 1) * (kPanelH + kMargin) + kMargin + legend_h;
  const int T = report.horizon;
  const char* measure_name = measure == PanelMeasure::bias ? "Bias" : "Empirical SE";

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      width, height);
  svg += fmt::format("<text x=\"{:.0f}\" y=\"16\" font-size=\"13\">{} for {}</text>\n", kMargin, measure_name,
                     label(comparison));
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const double x = kMargin + 110.0 * static_cast<double>(m);
    svg += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"{}\" stroke-width=\"2\"/>",
                       x, 28.0, x + 18, 28.0, kColors[m % kColors.size()]);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"32\">{}</text>\n", x + 22, methods[m]);
  }

  int panel = 0;
  for (int s : scenarios) {
    const double ox = kMargin + (panel % cols) * (kPanelW + kMargin);
    const double oy = kMargin + legend_h + (panel / cols) * (kPanelH + kMargin);
    ++panel;
    // Value range over all methods, including the error bars and zero.
    double lo = 0.0, hi = 0.0;
    for (const auto& r : report.rows) {
      if (r.scenario != s || r.id.comparison != comparison || !r.sufficient) continue;
      const double v = measure == PanelMeasure::bias ? r.cell.bias : r.cell.empse;
      const double e = 1.96 * (measure == PanelMeasure::bias ? r.cell.bias_mcse : r.cell.empse_mcse);
      lo = std::min(lo, v - e);
      hi = std::max(hi, v + e);
    }
    if (hi - lo < 1e-9) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto px = [&](int h) { return ox + 20 + (kPanelW - 30) * (T > 1 ? (h - 1.0) / (T - 1.0) : 0.5); };
    auto py = [&](double v) { return oy + kPanelH - 20 - (kPanelH - 30) * (v - lo) / (hi - lo); };

    svg += fmt::format("<g>\n<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" "
                       "stroke=\"#999\"/>\n",
                       ox, oy, kPanelW, kPanelH);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">Scenario {}</text>\n", ox + 4, oy - 4, s);
    if (measure == PanelMeasure::bias) {
      svg += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#ccc\" "
                         "stroke-dasharray=\"4 3\"/>\n",
                         ox, py(0.0), ox + kPanelW, py(0.0));
    }
    for (int h = 1; h <= T; ++h) {
      svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", px(h),
                         oy + kPanelH - 6, h);
    }
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", ox + 2, py(hi) + 10, format_real(std::round(hi * 1000) / 1000));
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", ox + 2, py(lo) - 2, format_real(std::round(lo * 1000) / 1000));

    for (std::size_t m = 0; m < methods.size(); ++m) {
      const char* color = kColors[m % kColors.size()];
      std::string points;
      for (int h = 1; h <= T; ++h) {
        const PerformanceRow* r = report.find(s, methods[m], {comparison, h});
        if (!r || !r->sufficient) continue;
        const double v = measure == PanelMeasure::bias ? r->cell.bias : r->cell.empse;
        const double e = 1.96 * (measure == PanelMeasure::bias ? r->cell.bias_mcse : r->cell.empse_mcse);
        const double x = px(h) + (static_cast<double>(m) - (methods.size() - 1) / 2.0) * 3.0;
        points += fmt::format("{:.1f},{:.1f} ", x, py(v));
        svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"{3}\"/>\n", x,
                           py(v - e), py(v + e), color);
        svg += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"2.5\" fill=\"{}\"/>\n", x, py(v), color);
      }
      if (!points.empty()) {
        svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", points,
                           color);
      }
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::filesystem::path> write_figures(const PerformanceReport& report, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  for (auto c : kComparisons) {
    for (auto measure : {PanelMeasure::bias, PanelMeasure::empse}) {
      const auto path =
          dir / fmt::format("{}_{}.svg", measure == PanelMeasure::bias ? "bias" : "empse", file_tag(c));
      const std::string body = render_figure(report, c, measure);
      emit_file(path, [&](std::ostream& out) { out << body; });
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace gmethods
