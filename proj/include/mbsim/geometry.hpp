// SPDX-License-Identifier: Apache-2.0
//
// mbsim — forward-link precoding simulator for multibeam broadband
// satellite systems.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MBSIM_GEOMETRY_HPP
#define MBSIM_GEOMETRY_HPP

#include <cmath>
#include <utility>
#include <vector>

namespace mbsim {

// Angular coordinates on the coverage plane, radians.
struct Point2 {
  double u = 0.0;
  double v = 0.0;
};

double distance(const Point2& a, const Point2& b);

struct GeometryConfig {
  int rings = 1;                   // hex rings around the centre beam
  double beam_radius_3db = 0.25 * M_PI / 180.0;  // radians
  double peak_gain_db = 52.0;
  // Centre-to-centre spacing of adjacent beams in units of the 3 dB radius.
  // 2.0 puts the crossover of neighbouring beams exactly at the -3 dB
  // contour and keeps each beam's 3 dB disk inside its own cell.
  double spacing_factor = 2.0;
};

// Hexagonal lattice of spot beams, one transmit feed per beam, with the
// four-colour frequency reuse pattern attached.
struct SystemGeometry {
  std::vector<Point2> beam_centers;
  double beam_radius_3db = 0.0;
  double spacing = 0.0;  // centre-to-centre distance of adjacent beams
  double peak_gain_db = 0.0;
  std::vector<int> colors;  // values 0..3

  int n_feeds() const { return static_cast<int>(beam_centers.size()); }
};

// Builds 1 + 3R(R+1) beams for R rings. Throws std::invalid_argument on a
// bad ring count / radius, or if the requested spacing breaks the
// four-colour pattern.
SystemGeometry build_geometry(const GeometryConfig& config);

// Normalized radiation pattern of a tapered circular aperture,
// [J1(x)/2x + 36 J3(x)/x^3]^2 with x = 2.07123 sin(theta)/sin(theta_3db).
// Equals 1 at boresight and 1/2 at theta = theta_3db.
double taper_pattern(double theta, double theta_3db);

// Linear gain of `feed` toward `pos`.
double beam_gain(const SystemGeometry& geom, const Point2& pos, int feed);

// Index of the feed with maximal gain toward `pos`.
int home_beam(const SystemGeometry& geom, const Point2& pos);

// All beam pairs whose centres are within `threshold` of each other.
std::vector<std::pair<int, int>> adjacent_beam_pairs(const SystemGeometry& geom,
                                                     double threshold);

// Exhaustive scan: any two beams within 2 x 3 dB radius carry distinct colors.
bool four_coloring_valid(const SystemGeometry& geom);

}  // namespace mbsim

#endif  // MBSIM_GEOMETRY_HPP
