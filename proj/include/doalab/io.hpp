#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "doalab/bench.hpp"
#include "doalab/spectra.hpp"
#include "doalab/types.hpp"

namespace doalab {

inline std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  require(bool(os), "cannot open for writing: " + path);
  os << content;
}

inline std::string result_table_csv(const ResultTable& table) {
  std::string out = "method,sweep,rmse_deg,trials,failures,seconds\n";
  for (const auto& r : table.rows) {
    out += r.method + "," + format_full(r.sweep_value) + "," +
           format_full(r.rmse_deg) + "," + std::to_string(r.trials) + "," +
           std::to_string(r.failures) + "," + format_full(r.seconds) + "\n";
  }
  return out;
}

inline std::string resolution_table_csv(const ResultTable& table) {
  std::string out = "method,sweep,resolution_prob,trials\n";
  for (const auto& r : table.rows) {
    if (std::isnan(r.resolution_prob)) continue;
    out += r.method + "," + format_full(r.sweep_value) + "," +
           format_full(r.resolution_prob) + "," + std::to_string(r.trials) +
           "\n";
  }
  return out;
}

inline std::string spectrum_csv(const NullSpectrum& s) {
  std::string out = "angle_deg,value\n";
  for (std::size_t i = 0; i < s.grid.size(); ++i)
    out += format_full(s.grid[i]) + "," + format_full(s.values[i]) + "\n";
  return out;
}

inline std::string surface_csv(const DmlSurface& surf) {
  // matrix layout: header row of theta1, leading column of theta2
  std::string out = "theta2\\theta1";
  for (double t : surf.grid) out += "," + format_full(t);
  out += "\n";
  const int k = int(surf.grid.size());
  for (int j = 0; j < k; ++j) {
    out += format_full(surf.grid[std::size_t(j)]);
    for (int i = 0; i < k; ++i) out += "," + format_full(surf.values(i, j));
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stand-alone vector graphics, no display dependency.

namespace detail {

inline std::string svg_color(int idx) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#17becf", "#000000"};
  return palette[idx % 8];
}

// five-stop blue->teal->green->yellow map over [0, 1]
inline std::string heat_color(double v) {
  static const double stops[5][3] = {{0.23, 0.15, 0.66},
                                     {0.12, 0.57, 0.85},
                                     {0.03, 0.74, 0.73},
                                     {0.48, 0.80, 0.37},
                                     {0.98, 0.98, 0.08}};
  v = std::clamp(v, 0.0, 1.0) * 4.0;
  const int lo = std::min(3, int(v));
  const double f = v - lo;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                int(255 * (stops[lo][0] + f * (stops[lo + 1][0] - stops[lo][0]))),
                int(255 * (stops[lo][1] + f * (stops[lo + 1][1] - stops[lo][1]))),
                int(255 * (stops[lo][2] + f * (stops[lo + 1][2] - stops[lo][2]))));
  return buf;
}

}  // namespace detail

// log-log RMSE plot: one polyline per method.
inline std::string result_table_svg(const ResultTable& table,
                                    const std::string& x_label,
                                    const std::string& title) {
  const double w = 640, h = 480, ml = 70, mr = 20, mt = 40, mb = 55;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (const auto& r : table.rows) {
    if (std::isnan(r.rmse_deg) || r.rmse_deg <= 0.0 || r.sweep_value <= 0.0)
      continue;
    series[r.method].push_back({r.sweep_value, r.rmse_deg});
    x0 = std::min(x0, r.sweep_value);
    x1 = std::max(x1, r.sweep_value);
    y0 = std::min(y0, r.rmse_deg);
    y1 = std::max(y1, r.rmse_deg);
  }
  if (series.empty() || x0 == x1) return "<svg/>";
  if (y0 == y1) {
    y0 *= 0.5;
    y1 *= 2.0;
  }
  auto lx = [&](double x) {
    return ml + (std::log10(x) - std::log10(x0)) /
                    (std::log10(x1) - std::log10(x0)) * (w - ml - mr);
  };
  auto ly = [&](double y) {
    return h - mb - (std::log10(y) - std::log10(y0)) /
                        (std::log10(y1) - std::log10(y0)) * (h - mt - mb);
  };

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
      std::to_string(int(w)) + "\" height=\"" + std::to_string(int(h)) +
      "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(int(w / 2)) +
         "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + title +
         "</text>\n";

  // decade grid
  for (int e = int(std::ceil(std::log10(x0))); e <= int(std::floor(std::log10(x1)));
       ++e) {
    const double x = std::pow(10.0, e);
    svg += "<line x1=\"" + format_full(lx(x)) + "\" y1=\"" +
           format_full(mt) + "\" x2=\"" + format_full(lx(x)) + "\" y2=\"" +
           format_full(h - mb) + "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + format_full(lx(x)) + "\" y=\"" +
           format_full(h - mb + 18) +
           "\" text-anchor=\"middle\">1e" + std::to_string(e) + "</text>\n";
  }
  for (int e = int(std::ceil(std::log10(y0)));
       e <= int(std::floor(std::log10(y1))); ++e) {
    const double y = std::pow(10.0, e);
    svg += "<line x1=\"" + format_full(ml) + "\" y1=\"" + format_full(ly(y)) +
           "\" x2=\"" + format_full(w - mr) + "\" y2=\"" + format_full(ly(y)) +
           "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + format_full(ml - 8) + "\" y=\"" +
           format_full(ly(y) + 4) + "\" text-anchor=\"end\">1e" +
           std::to_string(e) + "</text>\n";
  }
  svg += "<rect x=\"" + format_full(ml) + "\" y=\"" + format_full(mt) +
         "\" width=\"" + format_full(w - ml - mr) + "\" height=\"" +
         format_full(h - mt - mb) + "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + std::to_string(int(w / 2)) + "\" y=\"" +
         format_full(h - 15) + "\" text-anchor=\"middle\">" + x_label +
         "</text>\n";
  svg += "<text x=\"18\" y=\"" + std::to_string(int(h / 2)) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         std::to_string(int(h / 2)) + ")\">RMSE (deg)</text>\n";

  int idx = 0, legend_y = int(mt) + 14;
  for (auto& [name, pts] : series) {
    std::sort(pts.begin(), pts.end());
    std::string color = detail::svg_color(idx++);
    std::string path;
    for (std::size_t i = 0; i < pts.size(); ++i)
      path += (i == 0 ? "M" : "L") + format_full(lx(pts[i].first)) + " " +
              format_full(ly(pts[i].second));
    svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.6\"/>\n";
    for (auto [px, py] : pts)
      svg += "<circle cx=\"" + format_full(lx(px)) + "\" cy=\"" +
             format_full(ly(py)) + "\" r=\"2.4\" fill=\"" + color + "\"/>\n";
    svg += "<rect x=\"" + format_full(ml + 10) + "\" y=\"" +
           std::to_string(legend_y - 9) + "\" width=\"14\" height=\"4\" fill=\"" +
           color + "\"/>\n";
    svg += "<text x=\"" + format_full(ml + 30) + "\" y=\"" +
           std::to_string(legend_y - 2) + "\">" + name + "</text>\n";
    legend_y += 16;
  }
  svg += "</svg>\n";
  return svg;
}

// Heatmap of the two-source cost surface, min-pooled so narrow minima stay
// visible; truth and global minimizer are marked.
inline std::string surface_svg(const DmlSurface& surf, int max_cells = 240) {
  const int k = int(surf.grid.size());
  const int stride = std::max(1, (k + max_cells - 1) / max_cells);
  const int cells = (k + stride - 1) / stride;
  const double size = 560, margin = 50;
  const double cell = size / cells;

  double vmin = 1e300, vmax = -1e300;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      vmin = std::min(vmin, surf.values(i, j));
      vmax = std::max(vmax, surf.values(i, j));
    }

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
      std::to_string(int(size + 2 * margin)) + "\" height=\"" +
      std::to_string(int(size + 2 * margin)) +
      "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (int bi = 0; bi < cells; ++bi)
    for (int bj = 0; bj < cells; ++bj) {
      double v = 1e300;
      for (int i = bi * stride; i < std::min(k, (bi + 1) * stride); ++i)
        for (int j = bj * stride; j < std::min(k, (bj + 1) * stride); ++j)
          if (i != j) v = std::min(v, surf.values(i, j));
      if (v == 1e300) continue;
      const double t = (v - vmin) / std::max(vmax - vmin, 1e-300);
      svg += "<rect x=\"" + format_full(margin + bi * cell) + "\" y=\"" +
             format_full(margin + size - (bj + 1) * cell) + "\" width=\"" +
             format_full(cell + 0.5) + "\" height=\"" + format_full(cell + 0.5) +
             "\" fill=\"" + detail::heat_color(t) + "\"/>\n";
    }

  auto to_px = [&](double theta) {
    const double lo = surf.grid.front(), hi = surf.grid.back();
    return margin + (theta - lo) / (hi - lo) * size;
  };
  svg += "<circle cx=\"" + format_full(to_px(surf.best_theta1)) + "\" cy=\"" +
         format_full(2 * margin + size - to_px(surf.best_theta2) - margin) +
         "\" r=\"5\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n";
  svg += "<rect x=\"" + format_full(margin) + "\" y=\"" + format_full(margin) +
         "\" width=\"" + format_full(size) + "\" height=\"" +
         format_full(size) + "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + format_full(margin + size / 2) + "\" y=\"" +
         format_full(size + 2 * margin - 12) +
         "\" text-anchor=\"middle\">theta1 (deg)</text>\n";
  svg += "<text x=\"16\" y=\"" + format_full(margin + size / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         format_full(margin + size / 2) + ")\">theta2 (deg)</text>\n";
  svg += "</svg>\n";
  return svg;
}

// ---------------------------------------------------------------------------
// Snapshot files: one sensor per line, snapshots as `re:im` tokens.

inline void save_snapshots(const std::string& path, const CMat& x) {
  std::string out = "# doalab snapshots M=" + std::to_string(x.rows()) +
                    " T=" + std::to_string(x.cols()) + "\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j) out += ",";
      out += format_full(x(i, j).real()) + ":" + format_full(x(i, j).imag());
    }
    out += "\n";
  }
  write_text_file(path, out);
}

inline CMat load_snapshots(const std::string& path) {
  std::ifstream is(path);
  require(bool(is), "cannot open snapshot file: " + path);
  std::vector<std::vector<cxd>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<cxd> row;
    std::size_t pos = 0;
    while (pos < line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      const std::string tok = line.substr(pos, next - pos);
      const std::size_t colon = tok.find(':');
      require(colon != std::string::npos,
              "snapshot file: token is not re:im — " + tok);
      row.emplace_back(std::stod(tok.substr(0, colon)),
                       std::stod(tok.substr(colon + 1)));
      pos = next + 1;
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  require(!rows.empty(), "snapshot file: no data rows");
  CMat x(Eigen::Index(rows.size()), Eigen::Index(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == rows[0].size(),
            "snapshot file: ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      x(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
  }
  return x;
}

}  // namespace doalab
