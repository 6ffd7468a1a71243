#pragma once

// Minimal SVG line charts for the optional --plot output.  The CSVs are
// the source of truth; these renderings are a convenience only.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace costas::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

inline void write_chart(const std::string& path, const std::string& title,
                        const std::string& x_label, const std::string& y_label,
                        const std::vector<Series>& series, bool log_y = false) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  const double width = 860, height = 560, ml = 80, mr = 30, mt = 50, mb = 60;

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double y = log_y ? (s.y[i] > 0 ? std::log10(s.y[i]) : std::numeric_limits<double>::quiet_NaN())
                             : s.y[i];
      if (!std::isfinite(s.x[i]) || !std::isfinite(y)) continue;
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  if (!(x_min < x_max)) x_max = x_min + 1.0;
  if (!(y_min < y_max)) y_max = y_min + 1.0;

  const auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr); };
  const auto py = [&](double y) {
    return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb);
  };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("svg: cannot open '" + path + "'");
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' viewBox='0 0 " << width << " " << height << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << width / 2 << "' y='28' text-anchor='middle' font-size='18'>" << title
      << "</text>\n";

  for (int i = 0; i <= 5; ++i) {
    const double xv = x_min + (x_max - x_min) * i / 5.0;
    const double yv = y_min + (y_max - y_min) * i / 5.0;
    out << "<line x1='" << px(xv) << "' y1='" << mt << "' x2='" << px(xv) << "' y2='"
        << height - mb << "' stroke='#dddddd'/>\n"
        << "<line x1='" << ml << "' y1='" << py(yv) << "' x2='" << width - mr << "' y2='"
        << py(yv) << "' stroke='#dddddd'/>\n"
        << "<text x='" << px(xv) << "' y='" << height - mb + 20
        << "' text-anchor='middle' font-size='12'>" << xv << "</text>\n"
        << "<text x='" << ml - 8 << "' y='" << py(yv) + 4
        << "' text-anchor='end' font-size='12'>" << (log_y ? std::pow(10.0, yv) : yv)
        << "</text>\n";
  }
  out << "<text x='" << width / 2 << "' y='" << height - 14
      << "' text-anchor='middle' font-size='14'>" << x_label << "</text>\n"
      << "<text x='20' y='" << height / 2 << "' text-anchor='middle' font-size='14' transform='rotate(-90 20 "
      << height / 2 << ")'>" << y_label << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = palette[si % 5];
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double y = log_y ? (s.y[i] > 0 ? std::log10(s.y[i]) : std::numeric_limits<double>::quiet_NaN())
                             : s.y[i];
      if (!std::isfinite(s.x[i]) || !std::isfinite(y)) continue;
      out << px(s.x[i]) << ',' << py(y) << ' ';
    }
    out << "'/>\n"
        << "<text x='" << width - mr - 150 << "' y='" << mt + 18 * (si + 1)
        << "' font-size='13' fill='" << color << "'>" << s.name << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("svg: write failed");
}

}  // namespace costas::svg
