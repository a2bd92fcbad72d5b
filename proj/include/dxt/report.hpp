#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dxt/influence.hpp"

namespace dxt::report {

enum class PlotKind { Line, Box, Cdf };

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y); Box series use only y
};

struct PlotSpec {
  PlotKind kind = PlotKind::Line;
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

inline constexpr int kWidth = 800;
inline constexpr int kHeight = 600;

/// Renders a self-contained SVG. Output bytes depend only on the spec: fixed viewport and
/// fonts, coordinates rounded to 4 decimals, axes padded 5% around the data range.
/// Throws DataError for empty series or non-finite values.
std::string plot(const PlotSpec& spec);

void write_svg(const std::filesystem::path& path, const std::string& svg);

/// p-value against removed fraction.
PlotSpec ablation_plot(const std::vector<std::pair<std::string, influence::AblationCurve>>& curves);
/// One box per (group, subgroup), Tukey whiskers.
PlotSpec influence_box_plot(const influence::DistributionSummary& summary);
/// Empirical CDF per (group, subgroup).
PlotSpec influence_cdf_plot(const influence::DistributionSummary& summary);

}  // namespace dxt::report
