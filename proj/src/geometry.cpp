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

#include "mbsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mbsim {
namespace {

struct Axial {
  int q = 0;
  int r = 0;
};

int floor_mod(int a, int m) {
  int rem = a % m;
  return rem < 0 ? rem + m : rem;
}

int hex_ring(const Axial& a) {
  return (std::abs(a.q) + std::abs(a.r) + std::abs(a.q + a.r)) / 2;
}

Point2 axial_to_plane(const Axial& a, double spacing) {
  return {spacing * (a.q + 0.5 * a.r), spacing * (std::sqrt(3.0) / 2.0) * a.r};
}

}  // namespace

double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.u - b.u, a.v - b.v);
}

SystemGeometry build_geometry(const GeometryConfig& config) {
  if (config.rings < 0)
    throw std::invalid_argument("geometry: rings must be >= 0");
  if (!(config.beam_radius_3db > 0.0))
    throw std::invalid_argument("geometry: beam_radius_3db must be > 0");
  if (!(config.spacing_factor > 0.0))
    throw std::invalid_argument("geometry: spacing_factor must be > 0");

  const int rings = config.rings;
  std::vector<Axial> cells;
  cells.reserve(1 + 3 * rings * (rings + 1));
  for (int q = -rings; q <= rings; ++q) {
    const int r_lo = std::max(-rings, -q - rings);
    const int r_hi = std::min(rings, -q + rings);
    for (int r = r_lo; r <= r_hi; ++r) cells.push_back({q, r});
  }

  const double spacing = config.spacing_factor * config.beam_radius_3db;

  // Beam ids run outward ring by ring, counter-clockwise within a ring.
  std::sort(cells.begin(), cells.end(), [&](const Axial& a, const Axial& b) {
    const int ra = hex_ring(a);
    const int rb = hex_ring(b);
    if (ra != rb) return ra < rb;
    const Point2 pa = axial_to_plane(a, 1.0);
    const Point2 pb = axial_to_plane(b, 1.0);
    const double aa = std::atan2(pa.v, pa.u);
    const double ab = std::atan2(pb.v, pb.u);
    if (aa != ab) return aa < ab;
    if (a.q != b.q) return a.q < b.q;
    return a.r < b.r;
  });

  SystemGeometry geom;
  geom.beam_radius_3db = config.beam_radius_3db;
  geom.spacing = spacing;
  geom.peak_gain_db = config.peak_gain_db;
  geom.beam_centers.reserve(cells.size());
  geom.colors.reserve(cells.size());
  for (const Axial& c : cells) {
    geom.beam_centers.push_back(axial_to_plane(c, spacing));
    // Rhombic reuse-4 pattern: flipping q or r parity always changes the
    // colour, so hex nearest neighbours never collide.
    geom.colors.push_back(floor_mod(c.q, 2) + 2 * floor_mod(c.r, 2));
  }

  if (!four_coloring_valid(geom))
    throw std::invalid_argument(
        "geometry: spacing_factor too small for a valid four-colour pattern");
  return geom;
}

double taper_pattern(double theta, double theta_3db) {
  if (!(theta_3db > 0.0))
    throw std::invalid_argument("taper_pattern: theta_3db must be > 0");
  constexpr double kTaper = 2.07123;  // places the -3 dB point at theta_3db
  const double x = kTaper * std::sin(std::abs(theta)) / std::sin(theta_3db);
  double f;
  if (x < 1e-3) {
    f = 1.0 - 5.0 * x * x / 64.0;  // series limit of the bracket below
  } else {
    f = std::cyl_bessel_j(1, x) / (2.0 * x) +
        36.0 * std::cyl_bessel_j(3, x) / (x * x * x);
  }
  return f * f;
}

double beam_gain(const SystemGeometry& geom, const Point2& pos, int feed) {
  if (feed < 0 || feed >= geom.n_feeds())
    throw std::invalid_argument("beam_gain: feed index out of range");
  const double theta = distance(pos, geom.beam_centers[static_cast<std::size_t>(feed)]);
  const double peak = std::pow(10.0, geom.peak_gain_db / 10.0);
  return peak * taper_pattern(theta, geom.beam_radius_3db);
}

int home_beam(const SystemGeometry& geom, const Point2& pos) {
  int best = 0;
  double best_gain = -1.0;
  for (int n = 0; n < geom.n_feeds(); ++n) {
    const double g = beam_gain(geom, pos, n);
    if (g > best_gain) {
      best_gain = g;
      best = n;
    }
  }
  return best;
}

std::vector<std::pair<int, int>> adjacent_beam_pairs(const SystemGeometry& geom,
                                                     double threshold) {
  std::vector<std::pair<int, int>> pairs;
  const int n = geom.n_feeds();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (distance(geom.beam_centers[i], geom.beam_centers[j]) <= threshold)
        pairs.emplace_back(i, j);
  return pairs;
}

bool four_coloring_valid(const SystemGeometry& geom) {
  // Slight slack so beams at exactly 2 x radius count as adjacent.
  const double threshold = 2.0 * geom.beam_radius_3db * (1.0 + 1e-9);
  for (const auto& [i, j] : adjacent_beam_pairs(geom, threshold))
    if (geom.colors[static_cast<std::size_t>(i)] == geom.colors[static_cast<std::size_t>(j)])
      return false;
  return true;
}

}  // namespace mbsim
