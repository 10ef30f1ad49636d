#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "mbic/csv.hpp"
#include "mbic/types.hpp"

namespace mbic {

// Renders empirical P(correct) against n, one polyline per criterion, from a
// summary table. Pure function of the parsed input, so identical input bytes
// give identical SVG bytes.
inline std::string render_consistency_svg(const CsvTable& summary) {
  std::string missing;
  for (const char* need : {"n", "criterion", "p_correct"}) {
    if (summary.column(need) < 0) {
      if (!missing.empty()) missing += ", ";
      missing += need;
    }
  }
  if (!missing.empty()) {
    throw input_error("plot: summary is missing required columns: " + missing);
  }
  const int col_n = summary.column("n");
  const int col_crit = summary.column("criterion");
  const int col_p = summary.column("p_correct");

  struct Series {
    std::string name;
    std::vector<std::pair<double, double>> pts;  // (n, p_correct)
  };
  std::vector<Series> series;
  for (std::size_t r = 0; r < summary.rows.size(); ++r) {
    const auto& row = summary.rows[r];
    const double n = parse_double_field(row[static_cast<std::size_t>(col_n)], "plot", r + 2, "n");
    const double pc =
        parse_double_field(row[static_cast<std::size_t>(col_p)], "plot", r + 2, "p_correct");
    const std::string& name = row[static_cast<std::size_t>(col_crit)];
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const Series& s) { return s.name == name; });
    if (it == series.end()) {
      series.push_back({name, {}});
      it = series.end() - 1;
    }
    it->pts.emplace_back(n, pc);
  }
  if (series.empty()) throw input_error("plot: summary has no data rows");
  for (Series& s : series) {
    std::stable_sort(s.pts.begin(), s.pts.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  double n_min = series[0].pts[0].first, n_max = n_min;
  for (const Series& s : series) {
    for (const auto& [n, pc] : s.pts) {
      n_min = std::min(n_min, n);
      n_max = std::max(n_max, n);
    }
  }
  if (n_max == n_min) {
    n_min -= 1.0;
    n_max += 1.0;
  }

  const double width = 800.0, height = 520.0;
  const double left = 70.0, right = width - 170.0, top = 30.0, bottom = height - 60.0;
  auto sx = [&](double n) { return left + (n - n_min) / (n_max - n_min) * (right - left); };
  auto sy = [&](double pc) { return bottom - pc * (bottom - top); };

  const char* palette[] = {"#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#e67e22", "#2c3e50"};
  const std::size_t ncolors = sizeof(palette) / sizeof(palette[0]);

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(width) +
         "\" height=\"" + format_double(height) + "\" viewBox=\"0 0 " + format_double(width) +
         " " + format_double(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes and ticks.
  svg += "<line x1=\"" + format_double(left) + "\" y1=\"" + format_double(bottom) + "\" x2=\"" +
         format_double(right) + "\" y2=\"" + format_double(bottom) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + format_double(left) + "\" y1=\"" + format_double(top) + "\" x2=\"" +
         format_double(left) + "\" y2=\"" + format_double(bottom) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double pc = 0.2 * i;
    const double y = sy(pc);
    svg += "<line x1=\"" + format_double(left - 4) + "\" y1=\"" + format_double(y) + "\" x2=\"" +
           format_double(left) + "\" y2=\"" + format_double(y) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + format_double(left - 8) + "\" y=\"" + format_double(y + 4) +
           "\" text-anchor=\"end\" font-size=\"12\">" + format_double(pc) + "</text>\n";
  }
  std::vector<double> xticks;
  for (const Series& s : series) {
    for (const auto& [n, pc] : s.pts) xticks.push_back(n);
  }
  std::sort(xticks.begin(), xticks.end());
  xticks.erase(std::unique(xticks.begin(), xticks.end()), xticks.end());
  for (double n : xticks) {
    const double x = sx(n);
    svg += "<line x1=\"" + format_double(x) + "\" y1=\"" + format_double(bottom) + "\" x2=\"" +
           format_double(x) + "\" y2=\"" + format_double(bottom + 4) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + format_double(x) + "\" y=\"" + format_double(bottom + 18) +
           "\" text-anchor=\"middle\" font-size=\"12\">" + format_double(n) + "</text>\n";
  }
  svg += "<text x=\"" + format_double((left + right) / 2) + "\" y=\"" +
         format_double(height - 14) + "\" text-anchor=\"middle\" font-size=\"14\">n</text>\n";
  svg += "<text x=\"18\" y=\"" + format_double((top + bottom) / 2) +
         "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 " +
         format_double((top + bottom) / 2) + ")\">P(correct)</text>\n";

  // Series: polyline only when there are at least two vertices.
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = palette[i % ncolors];
    const Series& s = series[i];
    if (s.pts.size() >= 2) {
      std::string pts;
      for (const auto& [n, pc] : s.pts) {
        if (!pts.empty()) pts += ' ';
        pts += format_double(sx(n)) + ',' + format_double(sy(pc));
      }
      svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    }
    for (const auto& [n, pc] : s.pts) {
      svg += "<circle cx=\"" + format_double(sx(n)) + "\" cy=\"" + format_double(sy(pc)) +
             "\" r=\"3.5\" fill=\"" + std::string(color) + "\"/>\n";
    }
  }

  // Legend.
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = palette[i % ncolors];
    const double y = top + 16.0 + 22.0 * static_cast<double>(i);
    svg += "<line x1=\"" + format_double(right + 14) + "\" y1=\"" + format_double(y) +
           "\" x2=\"" + format_double(right + 44) + "\" y2=\"" + format_double(y) +
           "\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + format_double(right + 50) + "\" y=\"" + format_double(y + 4) +
           "\" font-size=\"13\">" + series[i].name + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace mbic
