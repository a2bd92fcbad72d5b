#include <doctest.h>

#include <regex>

#include "dxt/error.hpp"
#include "dxt/influence.hpp"
#include "dxt/report.hpp"
#include "support.hpp"

using namespace dxt;
using namespace dxt::report;

namespace {

std::vector<std::string> series_paths(const std::string& svg) {
  std::vector<std::string> out;
  const std::regex re("<path class=\"series\" d=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back((*it)[1]);
  return out;
}

std::vector<std::pair<double, double>> path_points(const std::string& d) {
  std::vector<std::pair<double, double>> pts;
  const std::regex re("[ML] (-?[0-9.]+) (-?[0-9.]+)");
  for (auto it = std::sregex_iterator(d.begin(), d.end(), re); it != std::sregex_iterator(); ++it)
    pts.emplace_back(std::stod((*it)[1]), std::stod((*it)[2]));
  return pts;
}

std::size_t count(const std::string& text, const std::string& what) {
  std::size_t n = 0;
  for (auto pos = text.find(what); pos != std::string::npos; pos = text.find(what, pos + 1)) ++n;
  return n;
}

influence::DistributionSummary sample_summary() {
  const auto emb = oracle::random_set(3, 40, 40, 4, 0.5);
  auto table = influence::influence_scores(emb);
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    table.rows[i].subgroup = table.rows[i].group == Group::Y && i % 5 ? "ellipse" : "square";
  table.rows[3].influence = 50.0;  // guaranteed outlier
  return influence::summarize(table);
}

}  // namespace

TEST_CASE("single-point line series draws a marker and no path") {
  const PlotSpec spec{PlotKind::Line, "t", "x", "y", {{"only", {{0.5, 0.25}}}}};
  const auto svg = plot(spec);
  CHECK(series_paths(svg).empty());
  CHECK(count(svg, "<circle") == 1);
  CHECK(svg.find("viewBox=\"0 0 800 600\"") != std::string::npos);
}

TEST_CASE("identical specs render identical bytes") {
  const auto summary = sample_summary();
  CHECK(plot(influence_cdf_plot(summary)) == plot(influence_cdf_plot(summary)));
  CHECK(plot(influence_box_plot(summary)) == plot(influence_box_plot(summary)));
  const PlotSpec line{PlotKind::Line, "t", "x", "y", {{"a", {{0, 1}, {1, 0.5}, {2, 0.125}}}}};
  CHECK(plot(line) == plot(line));
}

TEST_CASE("path coordinates carry four decimals") {
  const PlotSpec line{PlotKind::Line, "t", "x", "y", {{"a", {{0, 1.0 / 3}, {1, 2.0 / 3}}}}};
  const auto paths = series_paths(plot(line));
  REQUIRE(paths.size() == 1);
  CHECK(std::regex_search(paths[0], std::regex("^M [0-9]+\\.[0-9]{4} [0-9]+\\.[0-9]{4} L [0-9]+\\.[0-9]{4} [0-9]+\\.[0-9]{4}$")));
}

TEST_CASE("CDF paths are monotone") {
  const auto svg = plot(influence_cdf_plot(sample_summary()));
  const auto paths = series_paths(svg);
  CHECK(paths.size() == 3);
  for (const auto& d : paths) {
    const auto pts = path_points(d);
    REQUIRE(pts.size() >= 3);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      CHECK(pts[i].first >= pts[i - 1].first);
      // SVG y grows downward, so a nondecreasing CDF has nonincreasing y
      CHECK(pts[i].second <= pts[i - 1].second);
    }
  }
}

TEST_CASE("box plot outliers agree with the influence summary") {
  const auto summary = sample_summary();
  std::size_t outliers = 0;
  for (const auto& sg : summary.subgroups) outliers += sg.box.outliers.size();
  CHECK(outliers >= 1);
  const auto svg = plot(influence_box_plot(summary));
  CHECK(count(svg, "class=\"outlier\"") == outliers);
  CHECK(count(svg, "class=\"box\"") == summary.subgroups.size());
}

TEST_CASE("axes pad the data range by five percent") {
  const PlotSpec spec{PlotKind::Line, "t", "x", "y", {{"a", {{0, 0}, {10, 100}}}}};
  const auto pts = path_points(series_paths(plot(spec))[0]);
  REQUIRE(pts.size() == 2);
  // the data span is padded by 5% of itself on each side
  const double data_w = pts[1].first - pts[0].first;
  CHECK(data_w * 1.1 == doctest::Approx(800 - 90 - 170).epsilon(1e-6));
  CHECK(pts[0].first == doctest::Approx(90 + 0.05 * data_w).epsilon(1e-6));
}

TEST_CASE("invalid series are data errors") {
  CHECK_THROWS_AS(plot({PlotKind::Line, "t", "x", "y", {{"a", {}}}}), DataError);
  CHECK_THROWS_AS(plot({PlotKind::Line, "t", "x", "y", {}}), DataError);
  CHECK_THROWS_AS(plot({PlotKind::Cdf, "t", "x", "y", {{"a", {{std::nan(""), 0.5}}}}}), DataError);
  CHECK_THROWS_AS(plot({PlotKind::Box, "t", "x", "y", {{"a", {{0, INFINITY}}}}}), DataError);
}

TEST_CASE("ablation plot has one series per curve") {
  influence::AblationCurve a, b;
  a.points = {{0.0, 0, 3.0, 0.01}, {0.1, 4, 2.0, 0.2}};
  b.points = {{0.0, 0, 3.0, 0.01}, {0.1, 4, 3.5, 0.005}};
  const auto spec = ablation_plot({{"highest", a}, {"lowest", b}});
  CHECK(spec.kind == PlotKind::Line);
  REQUIRE(spec.series.size() == 2);
  CHECK(spec.series[1].points[1] == std::pair<double, double>{0.1, 0.005});
  CHECK(series_paths(plot(spec)).size() == 2);
}

TEST_CASE("labels are escaped") {
  const auto svg = plot({PlotKind::Line, "a<b & c", "x", "y", {{"s\"q", {{0, 0}}}}});
  CHECK(svg.find("a&lt;b &amp; c") != std::string::npos);
  CHECK(svg.find("s&quot;q") != std::string::npos);
}
