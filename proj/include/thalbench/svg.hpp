#pragma once

#include <Eigen/Core>

#include <array>
#include <string>
#include <vector>

namespace thalbench::svg {

struct Rgb {
  int r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Five-stop ramp (dark purple, blue, teal, green, yellow), interpolated
/// linearly per channel. t is clamped to [0, 1].
Rgb ramp(double t);
std::string hex(const Rgb& c);

struct HeatmapStyle {
  double vmin = 0.0;
  double vmax = 1.0;
  int digits = 2;
  bool reverse = false;  // low values bright
};

/// Standalone SVG grid with one annotated cell per entry. NaN cells are
/// grey and annotated "n/a".
std::string heatmap(const Eigen::MatrixXd& values, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const std::string& title, const HeatmapStyle& style);

}  // namespace thalbench::svg
