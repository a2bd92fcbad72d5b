#include "dxt/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "dxt/error.hpp"

namespace dxt::report {

namespace {

constexpr char kModule[] = "report";
constexpr double kLeft = 90, kRight = 170, kTop = 50, kBottom = 70;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s = buf;
  if (s == "-0.0000") s = "0.0000";
  return s;
}

std::string tick_label(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (const char ch : text) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // 5% padding; a degenerate range is widened to a unit-ish interval around its value.
  void pad() {
    double span = hi - lo;
    if (span <= 0.0) {
      const double half = lo == 0.0 ? 0.5 : 0.5 * std::abs(lo);
      lo -= half;
      hi += half;
      span = hi - lo;
    }
    lo -= 0.05 * span;
    hi += 0.05 * span;
  }
};

class Canvas {
 public:
  Canvas(Range x, Range y) : x_(x), y_(y) {}
  double sx(double v) const { return kLeft + (v - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double sy(double v) const { return kHeight - kBottom - (v - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom); }
  const Range& x() const { return x_; }
  const Range& y() const { return y_; }

 private:
  Range x_, y_;
};

void check_series(const PlotSpec& spec) {
  if (spec.series.empty()) throw DataError(kModule, "plot '" + spec.title + "' has no series");
  for (const auto& s : spec.series) {
    if (s.points.empty()) throw DataError(kModule, "series '" + s.label + "' is empty");
    for (const auto& [x, y] : s.points)
      if (!std::isfinite(x) || !std::isfinite(y))
        throw DataError(kModule, "series '" + s.label + "' contains a non-finite value");
  }
}

void axes(std::string& out, const Canvas& cv, const PlotSpec& spec, bool numeric_x) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  out += "<path d=\"M " + num(x0) + " " + num(y1) + " L " + num(x0) + " " + num(y0) + " L " + num(x1) +
         " " + num(y0) + "\" stroke=\"#000\" fill=\"none\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = cv.y().lo + (cv.y().hi - cv.y().lo) * i / 4.0;
    const double py = cv.sy(v);
    out += "<line x1=\"" + num(x0 - 5) + "\" y1=\"" + num(py) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(py) +
           "\" stroke=\"#000\"/>\n";
    out += "<text x=\"" + num(x0 - 8) + "\" y=\"" + num(py + 4) + "\" text-anchor=\"end\">" +
           tick_label(v) + "</text>\n";
    if (numeric_x) {
      const double u = cv.x().lo + (cv.x().hi - cv.x().lo) * i / 4.0;
      const double px = cv.sx(u);
      out += "<line x1=\"" + num(px) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(px) + "\" y2=\"" +
             num(y0 + 5) + "\" stroke=\"#000\"/>\n";
      out += "<text x=\"" + num(px) + "\" y=\"" + num(y0 + 20) + "\" text-anchor=\"middle\">" +
             tick_label(u) + "</text>\n";
    }
  }
  out += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 20.0) +
         "\" text-anchor=\"middle\">" + escape(spec.x_label) + "</text>\n";
  out += "<text x=\"20\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
         num((y0 + y1) / 2) + ")\">" + escape(spec.y_label) + "</text>\n";
  out += "<text x=\"" + num(kWidth / 2.0) + "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" +
         escape(spec.title) + "</text>\n";
}

void legend(std::string& out, const PlotSpec& spec) {
  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const double y = kTop + 10 + 22.0 * static_cast<double>(i);
    const double x = kWidth - kRight + 15;
    out += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 9) + "\" width=\"12\" height=\"12\" fill=\"" +
           kPalette[i % 8] + "\"/>\n";
    out += "<text x=\"" + num(x + 18) + "\" y=\"" + num(y + 2) + "\">" + escape(spec.series[i].label) +
           "</text>\n";
  }
}

void line_series(std::string& out, const Canvas& cv, const Series& s, const char* color) {
  if (s.points.size() > 1) {
    std::string d;
    for (std::size_t i = 0; i < s.points.size(); ++i)
      d += (i == 0 ? "M " : " L ") + num(cv.sx(s.points[i].first)) + " " + num(cv.sy(s.points[i].second));
    out += "<path class=\"series\" d=\"" + d + "\" stroke=\"" + color + "\" fill=\"none\" stroke-width=\"2\"/>\n";
  }
  for (const auto& [x, y] : s.points)
    out += "<circle cx=\"" + num(cv.sx(x)) + "\" cy=\"" + num(cv.sy(y)) + "\" r=\"3.5\" fill=\"" + color + "\"/>\n";
}

void cdf_series(std::string& out, const Canvas& cv, const Series& s, const char* color) {
  // Points are (score, cdf); drawn as a right-continuous step function starting from 0.
  std::vector<std::pair<double, double>> pts = s.points;
  std::sort(pts.begin(), pts.end());
  std::string d = "M " + num(cv.sx(pts.front().first)) + " " + num(cv.sy(0.0));
  double level = 0.0;
  for (const auto& [x, c] : pts) {
    d += " L " + num(cv.sx(x)) + " " + num(cv.sy(level));
    level = std::max(level, c);
    d += " L " + num(cv.sx(x)) + " " + num(cv.sy(level));
  }
  out += "<path class=\"series\" d=\"" + d + "\" stroke=\"" + color + "\" fill=\"none\" stroke-width=\"2\"/>\n";
}

void box_series(std::string& out, const Canvas& cv, const Series& s, std::size_t slot, const char* color) {
  std::vector<double> values;
  for (const auto& p : s.points) values.push_back(p.second);
  std::vector<std::string> ids(values.size());
  const influence::BoxStats b = influence::box_stats(values, ids);
  const double cx = cv.sx(static_cast<double>(slot));
  const double half = 0.25 * (cv.sx(1.0) - cv.sx(0.0));
  auto hline = [&](double y, double x0, double x1, const char* stroke) {
    out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(cv.sy(y)) + "\" x2=\"" + num(x1) + "\" y2=\"" +
           num(cv.sy(y)) + "\" stroke=\"" + stroke + "\" stroke-width=\"2\"/>\n";
  };
  out += "<rect class=\"box\" x=\"" + num(cx - half) + "\" y=\"" + num(cv.sy(b.q3)) + "\" width=\"" +
         num(2 * half) + "\" height=\"" + num(cv.sy(b.q1) - cv.sy(b.q3)) + "\" fill=\"" + color +
         "\" fill-opacity=\"0.35\" stroke=\"" + color + "\"/>\n";
  hline(b.median, cx - half, cx + half, "#000");
  out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(cv.sy(b.q3)) + "\" x2=\"" + num(cx) + "\" y2=\"" +
         num(cv.sy(b.whisker_high)) + "\" stroke=\"" + color + "\"/>\n";
  out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(cv.sy(b.q1)) + "\" x2=\"" + num(cx) + "\" y2=\"" +
         num(cv.sy(b.whisker_low)) + "\" stroke=\"" + color + "\"/>\n";
  hline(b.whisker_high, cx - half / 2, cx + half / 2, color);
  hline(b.whisker_low, cx - half / 2, cx + half / 2, color);
  for (const double v : values)
    if (v < b.lower_fence || v > b.upper_fence)
      out += "<circle class=\"outlier\" cx=\"" + num(cx) + "\" cy=\"" + num(cv.sy(v)) +
             "\" r=\"3\" fill=\"none\" stroke=\"" + color + "\"/>\n";
  out += "<text x=\"" + num(cx) + "\" y=\"" + num(kHeight - kBottom + 20) + "\" text-anchor=\"middle\">" +
         escape(s.label) + "</text>\n";
}

}  // namespace

std::string plot(const PlotSpec& spec) {
  check_series(spec);
  Range xr, yr;
  for (std::size_t i = 0; i < spec.series.size(); ++i)
    for (const auto& [x, y] : spec.series[i].points) {
      if (spec.kind == PlotKind::Box) {
        xr.add(static_cast<double>(i));
      } else {
        xr.add(x);
      }
      yr.add(y);
    }
  if (spec.kind == PlotKind::Cdf) {
    yr.add(0.0);
    yr.add(1.0);
  }
  if (spec.kind == PlotKind::Box) {
    xr.add(-0.5);
    xr.add(static_cast<double>(spec.series.size()) - 0.5);
  } else {
    xr.pad();
  }
  yr.pad();
  const Canvas cv(xr, yr);

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) + "\" height=\"" +
         std::to_string(kHeight) + "\" viewBox=\"0 0 " + std::to_string(kWidth) + " " +
         std::to_string(kHeight) + "\" font-family=\"DejaVu Sans, Arial, sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  axes(out, cv, spec, spec.kind != PlotKind::Box);
  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const char* color = kPalette[i % 8];
    switch (spec.kind) {
      case PlotKind::Line: line_series(out, cv, spec.series[i], color); break;
      case PlotKind::Cdf: cdf_series(out, cv, spec.series[i], color); break;
      case PlotKind::Box: box_series(out, cv, spec.series[i], i, color); break;
    }
  }
  if (spec.kind != PlotKind::Box) legend(out, spec);
  out += "</svg>\n";
  return out;
}

void write_svg(const std::filesystem::path& path, const std::string& svg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(kModule, "cannot write " + path.string());
  out << svg;
}

PlotSpec ablation_plot(const std::vector<std::pair<std::string, influence::AblationCurve>>& curves) {
  PlotSpec spec;
  spec.kind = PlotKind::Line;
  spec.title = "Influence removal effect";
  spec.x_label = "fraction of samples removed";
  spec.y_label = "p-value";
  for (const auto& [label, curve] : curves) {
    Series s{label, {}};
    for (const auto& p : curve.points) s.points.emplace_back(p.fraction, p.p_value);
    spec.series.push_back(std::move(s));
  }
  return spec;
}

namespace {
std::string cell_label(const influence::SubgroupSummary& s) {
  return std::string(group_name(s.group)) + ":" + s.subgroup;
}
}  // namespace

PlotSpec influence_box_plot(const influence::DistributionSummary& summary) {
  PlotSpec spec;
  spec.kind = PlotKind::Box;
  spec.title = "Distribution of influence scores";
  spec.x_label = "group:subgroup";
  spec.y_label = "influence";
  for (const auto& s : summary.subgroups) {
    Series series{cell_label(s), {}};
    for (const double v : s.sorted_scores) series.points.emplace_back(0.0, v);
    spec.series.push_back(std::move(series));
  }
  return spec;
}

PlotSpec influence_cdf_plot(const influence::DistributionSummary& summary) {
  PlotSpec spec;
  spec.kind = PlotKind::Cdf;
  spec.title = "CDF of influence scores";
  spec.x_label = "influence";
  spec.y_label = "cumulative fraction";
  for (const auto& s : summary.subgroups) {
    Series series{cell_label(s), {}};
    for (const auto& p : s.cdf) series.points.emplace_back(p.score, p.cdf);
    spec.series.push_back(std::move(series));
  }
  return spec;
}

}  // namespace dxt::report
