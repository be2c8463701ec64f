#include "thalbench/svg.hpp"

#include "thalbench/format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace thalbench::svg {
namespace {

constexpr std::array<Rgb, 5> kStops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};

constexpr int kCellW = 46;
constexpr int kCellH = 26;
constexpr int kLeft = 90;
constexpr int kTop = 80;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

Rgb ramp(double t) {
  if (!(t > 0.0)) t = 0.0;
  if (t > 1.0) t = 1.0;
  const double pos = t * (kStops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(pos), kStops.size() - 2);
  const double f = pos - static_cast<double>(i);
  auto mix = [&](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * f)); };
  return {mix(kStops[i].r, kStops[i + 1].r), mix(kStops[i].g, kStops[i + 1].g), mix(kStops[i].b, kStops[i + 1].b)};
}

std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string heatmap(const Eigen::MatrixXd& values, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const std::string& title, const HeatmapStyle& style) {
  const auto rows = static_cast<int>(values.rows()), cols = static_cast<int>(values.cols());
  const int width = kLeft + cols * kCellW + 20, height = kTop + rows * kCellH + 20;
  const double span = style.vmax > style.vmin ? style.vmax - style.vmin : 1.0;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
       std::to_string(height) + "\" font-family=\"monospace\" font-size=\"10\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  s += "<text x=\"" + std::to_string(kLeft) + "\" y=\"16\" font-size=\"13\">" + escape(title) + "</text>\n";
  for (int c = 0; c < cols; ++c) {
    const int x = kLeft + c * kCellW + kCellW / 2, y = kTop - 6;
    s += "<text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" transform=\"rotate(-45 " +
         std::to_string(x) + " " + std::to_string(y) + ")\">" + escape(c < static_cast<int>(col_labels.size()) ? col_labels[c] : "") +
         "</text>\n";
  }
  for (int r = 0; r < rows; ++r) {
    const int y = kTop + r * kCellH;
    s += "<text x=\"" + std::to_string(kLeft - 4) + "\" y=\"" + std::to_string(y + kCellH / 2 + 4) +
         "\" text-anchor=\"end\">" + escape(r < static_cast<int>(row_labels.size()) ? row_labels[r] : "") + "</text>\n";
    for (int c = 0; c < cols; ++c) {
      const int x = kLeft + c * kCellW;
      const double v = values(r, c);
      std::string fill = "#cccccc", label = "n/a", ink = "#000000";
      if (!std::isnan(v)) {
        double t = (v - style.vmin) / span;
        if (style.reverse) t = 1.0 - t;
        const Rgb rgb = ramp(t);
        fill = hex(rgb);
        label = format_fixed(v, style.digits);
        ink = 0.299 * rgb.r + 0.587 * rgb.g + 0.114 * rgb.b < 128.0 ? "#ffffff" : "#000000";
      }
      s += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" + std::to_string(kCellW) +
           "\" height=\"" + std::to_string(kCellH) + "\" fill=\"" + fill + "\" stroke=\"#ffffff\"/>\n";
      s += "<text x=\"" + std::to_string(x + kCellW / 2) + "\" y=\"" + std::to_string(y + kCellH / 2 + 4) +
           "\" text-anchor=\"middle\" fill=\"" + ink + "\">" + escape(label) + "</text>\n";
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace thalbench::svg
