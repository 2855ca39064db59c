/*
 * Copyright 2026 The pugd-lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pugd/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "pugd/format.hpp"

namespace pugd {

namespace {

struct Rgb {
  double r, g, b;
};

// Train terrain runs green to blue, test terrain blue to red.
const std::vector<Rgb> kTrainPalette = {
    {0.10, 0.45, 0.20}, {0.30, 0.70, 0.35}, {0.65, 0.85, 0.55},
    {0.55, 0.80, 0.85}, {0.25, 0.50, 0.80}, {0.10, 0.20, 0.55}};
const std::vector<Rgb> kTestPalette = {
    {0.15, 0.25, 0.65}, {0.35, 0.55, 0.85}, {0.80, 0.85, 0.95},
    {0.98, 0.80, 0.65}, {0.90, 0.45, 0.30}, {0.65, 0.10, 0.10}};
const char* kClippedColor = "#ff00ff";

const char* kSeriesColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                               "#9467bd", "#8c564b", "#e377c2", "#17becf",
                               "#bcbd22", "#7f7f7f"};

std::string hex(const Rgb& c) {
  auto byte = [](double v) {
    return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", byte(c.r), byte(c.g), byte(c.b));
  return buf;
}

Rgb palette_at(const std::vector<Rgb>& palette, double t) {
  t = std::clamp(t, 0.0, 1.0) * static_cast<double>(palette.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(t));
  const std::size_t hi = std::min(lo + 1, palette.size() - 1);
  const double f = t - static_cast<double>(lo);
  const Rgb& a = palette[lo];
  const Rgb& b = palette[hi];
  return {a.r + (b.r - a.r) * f, a.g + (b.g - a.g) * f, a.b + (b.b - a.b) * f};
}

std::string px(double v) { return format_fixed(v, 2); }

std::string short_number(double v) {
  if (!std::isfinite(v)) return format_double(v);
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 3);
  return std::string(buf, res.ptr);
}

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

constexpr int kContourBands = 12;
constexpr double kPanel = 420.0;
constexpr double kMargin = 50.0;

struct TerrainPanel {
  const std::vector<double>* values;
  std::uint8_t clip_bit;
  const std::vector<Rgb>* palette;
  std::string label;
};

/// Maps a plane coordinate to a fractional grid index along one axis.
double fractional_index(const std::vector<double>& axis, double v) {
  if (axis.size() < 2 || axis.back() == axis.front()) return 0.0;
  return (v - axis.front()) / (axis.back() - axis.front()) *
         static_cast<double>(axis.size() - 1);
}

void draw_terrain(std::ostringstream& out, const LandscapeGrid& grid,
                  const TerrainPanel& panel, double x0, double y0,
                  const std::vector<Trajectory>& trajectories) {
  const std::size_t rows = grid.rows();
  const std::size_t cols = grid.cols();
  const double cw = kPanel / static_cast<double>(rows);
  const double ch = kPanel / static_cast<double>(cols);
  // alpha (row index) runs along x, beta (column index) along y, upwards.
  auto to_x = [&](double fi) { return x0 + (fi + 0.5) * cw; };
  auto to_y = [&](double fj) { return y0 + kPanel - (fj + 0.5) * ch; };

  std::vector<double> logv(rows * cols);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < logv.size(); ++k) {
    logv[k] = std::log10(std::max((*panel.values)[k], 1e-12));
    if (!(grid.clipped[k] & panel.clip_bit)) {
      lo = std::min(lo, logv[k]);
      hi = std::max(hi, logv[k]);
    }
  }
  const bool flat = !(hi - lo > 1e-12 * std::max(1.0, std::fabs(hi)));

  out << "<g class=\"terrain\">\n";
  out << "<text x=\"" << px(x0) << "\" y=\"" << px(y0 - 8) << "\" font-size=\"13\">"
      << escape(panel.label) << " (log10 loss " << short_number(lo) << " .. "
      << short_number(hi) << ")</text>\n";
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t k = i * cols + j;
      std::string color;
      if (grid.clipped[k] & panel.clip_bit) {
        color = kClippedColor;
      } else if (flat) {
        color = hex(palette_at(*panel.palette, 0.0));
      } else {
        const double t = (logv[k] - lo) / (hi - lo);
        const double band = std::min(std::floor(t * kContourBands), kContourBands - 1.0);
        color = hex(palette_at(*panel.palette, band / (kContourBands - 1.0)));
      }
      out << "<rect x=\"" << px(x0 + static_cast<double>(i) * cw) << "\" y=\""
          << px(y0 + kPanel - static_cast<double>(j + 1) * ch) << "\" width=\""
          << px(cw) << "\" height=\"" << px(ch) << "\" fill=\"" << color << "\"/>\n";
    }
  }
  if (!flat && rows > 1 && cols > 1) {
    out << "<g stroke=\"#222222\" stroke-width=\"0.6\" stroke-opacity=\"0.6\">\n";
    for (int b = 1; b < kContourBands; ++b) {
      const double level = lo + (hi - lo) * b / kContourBands;
      for (const auto& seg : marching_squares(logv, rows, cols, level)) {
        out << "<line x1=\"" << px(to_x(seg.from[0])) << "\" y1=\""
            << px(to_y(seg.from[1])) << "\" x2=\"" << px(to_x(seg.to[0]))
            << "\" y2=\"" << px(to_y(seg.to[1])) << "\"/>\n";
      }
    }
    out << "</g>\n";
  }
  out << "<rect x=\"" << px(x0) << "\" y=\"" << px(y0) << "\" width=\"" << px(kPanel)
      << "\" height=\"" << px(kPanel) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
  out << "<text x=\"" << px(x0) << "\" y=\"" << px(y0 + kPanel + 16)
      << "\" font-size=\"11\">alpha " << short_number(grid.alphas.front()) << " .. "
      << short_number(grid.alphas.back()) << ", beta "
      << short_number(grid.betas.front()) << " .. "
      << short_number(grid.betas.back()) << "</text>\n";

  for (std::size_t t = 0; t < trajectories.size(); ++t) {
    const auto& traj = trajectories[t];
    if (traj.coords.empty()) continue;
    const char* color = kSeriesColors[t % std::size(kSeriesColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t p = 0; p < traj.coords.size(); ++p) {
      const auto& c = traj.coords[p];
      if (p) out << ' ';
      out << px(to_x(fractional_index(grid.alphas, c.alpha))) << ','
          << px(to_y(fractional_index(grid.betas, c.beta)));
    }
    out << "\"/>\n";
    const auto& end = traj.coords.back();
    out << "<circle cx=\"" << px(to_x(fractional_index(grid.alphas, end.alpha)))
        << "\" cy=\"" << px(to_y(fractional_index(grid.betas, end.beta)))
        << "\" r=\"3.5\" fill=\"" << color << "\" stroke=\"#000000\"/>\n";
  }
  out << "</g>\n";
}

}  // namespace

std::vector<ContourSegment> marching_squares(const std::vector<double>& field,
                                             std::size_t rows, std::size_t cols,
                                             double level) {
  std::vector<ContourSegment> segs;
  if (rows < 2 || cols < 2) return segs;
  auto at = [&](std::size_t i, std::size_t j) { return field[i * cols + j]; };
  auto lerp = [level](double va, double vb) {
    const double d = vb - va;
    return d == 0.0 ? 0.5 : (level - va) / d;
  };
  for (std::size_t i = 0; i + 1 < rows; ++i) {
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      // Corners a=(i,j) b=(i,j+1) c=(i+1,j+1) d=(i+1,j).
      const double va = at(i, j), vb = at(i, j + 1), vc = at(i + 1, j + 1),
                   vd = at(i + 1, j);
      const int mask = (va >= level ? 1 : 0) | (vb >= level ? 2 : 0) |
                       (vc >= level ? 4 : 0) | (vd >= level ? 8 : 0);
      if (mask == 0 || mask == 15) continue;
      const double fi = static_cast<double>(i);
      const double fj = static_cast<double>(j);
      // Edge crossings: 0 a-b, 1 b-c, 2 c-d, 3 d-a.
      const std::array<std::array<double, 2>, 4> edge = {{
          {fi, fj + lerp(va, vb)},
          {fi + lerp(vb, vc), fj + 1.0},
          {fi + 1.0, fj + 1.0 - lerp(vc, vd)},
          {fi + 1.0 - lerp(vd, va), fj},
      }};
      auto seg = [&](int e1, int e2) { segs.push_back({edge[e1], edge[e2]}); };
      const bool centre_high = (va + vb + vc + vd) / 4.0 >= level;
      switch (mask) {
        case 1: case 14: seg(3, 0); break;
        case 2: case 13: seg(0, 1); break;
        case 3: case 12: seg(3, 1); break;
        case 4: case 11: seg(1, 2); break;
        case 6: case 9: seg(0, 2); break;
        case 7: case 8: seg(2, 3); break;
        case 5:
          if (centre_high) { seg(0, 1); seg(2, 3); } else { seg(3, 0); seg(1, 2); }
          break;
        case 10:
          if (centre_high) { seg(3, 0); seg(1, 2); } else { seg(0, 1); seg(2, 3); }
          break;
        default: break;
      }
    }
  }
  return segs;
}

std::string render_landscape_svg(const LandscapeGrid& grid,
                                 const std::vector<Trajectory>& trajectories,
                                 const std::string& title) {
  std::vector<TerrainPanel> panels;
  panels.push_back({&grid.train_loss, kTrainClipped, &kTrainPalette, "train terrain"});
  if (grid.test_loss) {
    panels.push_back({&*grid.test_loss, kTestClipped, &kTestPalette, "test terrain"});
  }
  const double legend_h = 18.0 * static_cast<double>(trajectories.size());
  const double width = kMargin + static_cast<double>(panels.size()) * (kPanel + kMargin);
  const double height = kPanel + 2 * kMargin + 30 + legend_h;

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width)
      << "\" height=\"" << px(height) << "\" viewBox=\"0 0 " << px(width) << ' '
      << px(height) << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out << "<text x=\"" << px(kMargin) << "\" y=\"22\" font-size=\"15\">"
      << escape(title) << "</text>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    draw_terrain(out, grid, panels[p],
                 kMargin + static_cast<double>(p) * (kPanel + kMargin), kMargin,
                 trajectories);
  }
  double ly = kMargin + kPanel + 40;
  for (std::size_t t = 0; t < trajectories.size(); ++t) {
    const char* color = kSeriesColors[t % std::size(kSeriesColors)];
    out << "<rect x=\"" << px(kMargin) << "\" y=\"" << px(ly - 9)
        << "\" width=\"12\" height=\"4\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"" << px(kMargin + 18) << "\" y=\"" << px(ly)
        << "\" font-size=\"12\">" << escape(trajectories[t].optimizer_name)
        << "</text>\n";
    ly += 18.0;
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_line_charts_svg(const std::vector<ChartPanel>& panels,
                                   const std::string& title) {
  constexpr double kW = 420.0;
  constexpr double kH = 280.0;
  std::size_t max_series = 0;
  for (const auto& p : panels) max_series = std::max(max_series, p.series.size());
  const double width = kMargin + static_cast<double>(panels.size()) * (kW + kMargin);
  const double height = kH + 2 * kMargin + 30 + 18.0 * static_cast<double>(max_series);

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width)
      << "\" height=\"" << px(height) << "\" viewBox=\"0 0 " << px(width) << ' '
      << px(height) << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out << "<text x=\"" << px(kMargin) << "\" y=\"22\" font-size=\"15\">"
      << escape(title) << "</text>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    const double x0 = kMargin + static_cast<double>(p) * (kW + kMargin);
    const double y0 = kMargin;
    auto transform_y = [&](double v) { return panel.log_y ? std::log10(v) : v; };
    auto usable = [&](double v) { return std::isfinite(v) && (!panel.log_y || v > 0.0); };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : panel.series) {
      for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
        if (!usable(s.y[k])) continue;
        xmin = std::min(xmin, s.x[k]);
        xmax = std::max(xmax, s.x[k]);
        ymin = std::min(ymin, transform_y(s.y[k]));
        ymax = std::max(ymax, transform_y(s.y[k]));
      }
    }
    if (!(xmax >= xmin)) { xmin = 0.0; xmax = 1.0; }
    if (!(ymax >= ymin)) { ymin = 0.0; ymax = 1.0; }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    auto sx = [&](double v) { return x0 + (v - xmin) / (xmax - xmin) * kW; };
    auto sy = [&](double v) { return y0 + kH - (transform_y(v) - ymin) / (ymax - ymin) * kH; };

    out << "<g class=\"panel\">\n";
    out << "<text x=\"" << px(x0) << "\" y=\"" << px(y0 - 8) << "\" font-size=\"13\">"
        << escape(panel.title) << "</text>\n";
    out << "<rect x=\"" << px(x0) << "\" y=\"" << px(y0) << "\" width=\"" << px(kW)
        << "\" height=\"" << px(kH) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
    const std::string ylo = panel.log_y ? "1e" + short_number(ymin) : short_number(ymin);
    const std::string yhi = panel.log_y ? "1e" + short_number(ymax) : short_number(ymax);
    out << "<text x=\"" << px(x0 + 4) << "\" y=\"" << px(y0 + 12)
        << "\" font-size=\"10\">" << escape(panel.y_label) << " max " << yhi << "</text>\n";
    out << "<text x=\"" << px(x0 + 4) << "\" y=\"" << px(y0 + kH - 4)
        << "\" font-size=\"10\">min " << ylo << "</text>\n";
    out << "<text x=\"" << px(x0) << "\" y=\"" << px(y0 + kH + 14)
        << "\" font-size=\"10\">step " << short_number(xmin) << " .. "
        << short_number(xmax) << "</text>\n";
    for (std::size_t s = 0; s < panel.series.size(); ++s) {
      const auto& series = panel.series[s];
      const char* color = kSeriesColors[s % std::size(kSeriesColors)];
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.2\" points=\"";
      bool first = true;
      for (std::size_t k = 0; k < std::min(series.x.size(), series.y.size()); ++k) {
        if (!usable(series.y[k])) continue;
        if (!first) out << ' ';
        first = false;
        out << px(sx(series.x[k])) << ',' << px(sy(series.y[k]));
      }
      out << "\"/>\n";
      const double ly = y0 + kH + 36 + 18.0 * static_cast<double>(s);
      out << "<rect x=\"" << px(x0) << "\" y=\"" << px(ly - 9)
          << "\" width=\"12\" height=\"4\" fill=\"" << color << "\"/>\n";
      out << "<text x=\"" << px(x0 + 18) << "\" y=\"" << px(ly)
          << "\" font-size=\"12\">" << escape(series.name) << "</text>\n";
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace pugd
