#include "entrosense/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace entrosense {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 160.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c",
                                                "#9467bd", "#ff7f0e", "#8c564b"};

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

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double map(double v, double a, double b) const {
    const double t = log ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo))
                         : (v - lo) / (hi - lo);
    return a + t * (b - a);
  }
};

Axis make_axis(const std::vector<PlotSeries>& series, bool use_x, bool log) {
  Axis ax;
  ax.log = log;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    for (double v : use_x ? s.x : s.y) {
      if (!std::isfinite(v) || (log && v <= 0.0)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) {
    lo = log ? 1.0 : 0.0;
    hi = log ? 10.0 : 1.0;
  }
  if (hi == lo) {
    hi = log ? hi * 10.0 : hi + 1.0;
  }
  ax.lo = lo;
  ax.hi = hi;
  return ax;
}

}  // namespace

std::string render_line_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  const Axis ax = make_axis(series, true, spec.log_x);
  const Axis ay = make_axis(series, false, spec.log_y);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, kHeight);
  svg += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     (x0 + x1) / 2, escape(spec.title));
  svg += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", x0,
      y1, x1 - x0, y0 - y1);

  for (int k = 0; k <= 4; ++k) {
    const double t = k / 4.0;
    const double vx = ax.log ? std::pow(10.0, std::log10(ax.lo) + t * (std::log10(ax.hi) - std::log10(ax.lo)))
                             : ax.lo + t * (ax.hi - ax.lo);
    const double vy = ay.log ? std::pow(10.0, std::log10(ay.lo) + t * (std::log10(ay.hi) - std::log10(ay.lo)))
                             : ay.lo + t * (ay.hi - ay.lo);
    const double px = ax.map(vx, x0, x1);
    const double py = ay.map(vy, y0, y1);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.3g}</text>\n", px,
                       y0 + 18, vx);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", x0 - 6,
                       py + 4, vy);
    svg += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#ddd\"/>\n",
                       x0, py, x1, py);
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (x0 + x1) / 2,
                     kHeight - 12, escape(spec.x_label));
  svg += fmt::format(
      "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
      (y0 + y1) / 2, (y0 + y1) / 2, escape(spec.y_label));

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % kColors.size()];
    std::string points;
    std::string markers;
    const std::size_t n = std::min(series[s].x.size(), series[s].y.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double vx = series[s].x[i];
      const double vy = series[s].y[i];
      if (!std::isfinite(vx) || !std::isfinite(vy)) continue;
      if ((ax.log && vx <= 0.0) || (ay.log && vy <= 0.0)) continue;
      const double px = ax.map(vx, x0, x1);
      const double py = ay.map(vy, y0, y1);
      points += fmt::format("{:.2f},{:.2f} ", px, py);
      markers += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px, py, color);
    }
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                       color, points);
    svg += markers;
    const double ly = y1 + 16.0 + 18.0 * static_cast<double>(s);
    svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       x1 + 10, ly - 4, x1 + 30, ly - 4, color);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", x1 + 36, ly, escape(series[s].name));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace entrosense
