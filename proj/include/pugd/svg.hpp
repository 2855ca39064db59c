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

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "pugd/landscape.hpp"

namespace pugd {

struct TrajectoryPoint {
  std::size_t step = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;
};

/// Sampled path of one optimizer projected into a landscape slice.
struct Trajectory {
  std::string optimizer_name;
  std::size_t sample_stride = 1;
  std::vector<TrajectoryPoint> coords;
};

struct ContourSegment {
  std::array<double, 2> from;
  std::array<double, 2> to;
};

/// Marching squares over a row-major field with `rows` x `cols` samples.
/// Segment endpoints are in fractional (row, col) index coordinates.
std::vector<ContourSegment> marching_squares(const std::vector<double>& field,
                                             std::size_t rows, std::size_t cols,
                                             double level);

/// Filled log10-loss contours of every terrain in the grid (train, and test
/// when present) side by side, with trajectories overlaid as polylines.
/// Output bytes depend only on the inputs.
std::string render_landscape_svg(const LandscapeGrid& grid,
                                 const std::vector<Trajectory>& trajectories,
                                 const std::string& title);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartPanel {
  std::string title;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
};

/// Line charts, one panel per entry, laid out horizontally.
std::string render_line_charts_svg(const std::vector<ChartPanel>& panels,
                                   const std::string& title);

}  // namespace pugd
