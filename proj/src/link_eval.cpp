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

#include "mbsim/link_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mbsim {

double SeLaw::operator()(double sinr_linear) const {
  if (sinr_linear < 0.0)
    throw std::invalid_argument("spectral_efficiency: SINR must be >= 0");
  if (kind == Kind::shannon_capped)
    return std::min(std::log2(1.0 + sinr_linear), cap);
  if (sinr_linear == 0.0) return 0.0;
  const double sinr_db = 10.0 * std::log10(sinr_linear);
  double se = 0.0;
  for (const auto& [threshold_db, row_se] : rows) {
    if (sinr_db < threshold_db) break;
    se = row_se;
  }
  return se;
}

SeLaw SeLaw::shannon(double cap) {
  SeLaw law;
  law.kind = Kind::shannon_capped;
  law.cap = cap;
  return law;
}

SeLaw SeLaw::dvbs2x_like() {
  // Approximate Es/N0 thresholds and spectral efficiencies spanning QPSK 1/4
  // through 256APSK 3/4, normal frames.
  return from_rows({
      {-2.85, 0.434}, {-2.35, 0.490}, {-1.24, 0.656}, {-0.30, 0.789},
      {1.00, 0.988},  {2.23, 1.188},  {3.10, 1.322},  {4.03, 1.487},
      {5.18, 1.654},  {6.20, 1.897},  {6.62, 1.972},  {7.91, 2.228},
      {9.35, 2.479},  {10.21, 2.637}, {10.69, 2.779}, {11.03, 2.967},
      {11.61, 3.103}, {12.89, 3.300}, {13.64, 3.621}, {14.28, 3.902},
      {15.69, 4.119}, {16.05, 4.398}, {17.59, 4.737}, {19.57, 5.510},
  });
}

SeLaw SeLaw::from_rows(std::vector<std::pair<double, double>> rows) {
  if (rows.empty()) throw std::invalid_argument("se table: no rows");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].second < 0.0)
      throw std::invalid_argument("se table: spectral efficiency must be >= 0");
    if (i > 0) {
      if (rows[i].first <= rows[i - 1].first)
        throw std::invalid_argument("se table: thresholds must be strictly increasing");
      if (rows[i].second < rows[i - 1].second)
        throw std::invalid_argument("se table: spectral efficiency must be non-decreasing");
    }
  }
  SeLaw law;
  law.kind = Kind::table;
  law.rows = std::move(rows);
  return law;
}

SeLaw SeLaw::from_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("se table: cannot open " + path);
  std::vector<std::pair<double, double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double threshold = 0.0;
    double se = 0.0;
    if (!(ls >> threshold)) continue;  // blank line
    if (!(ls >> se))
      throw std::invalid_argument("se table: " + path + ":" + std::to_string(line_no) +
                                  ": expected 'threshold_db se'");
    std::string rest;
    if (ls >> rest)
      throw std::invalid_argument("se table: " + path + ":" + std::to_string(line_no) +
                                  ": trailing tokens");
    rows.emplace_back(threshold, se);
  }
  return from_rows(std::move(rows));
}

std::vector<double> compute_sinr(const arma::cx_mat& h_true, const arma::cx_mat& w,
                                 const std::vector<std::vector<int>>& active_groups) {
  if (w.n_cols != active_groups.size())
    throw std::invalid_argument("compute_sinr: group count does not match W columns");
  if (h_true.n_cols != w.n_rows)
    throw std::invalid_argument("compute_sinr: channel/precoder dimension mismatch");

  const arma::cx_mat hw = h_true * w;  // K x G
  std::vector<double> sinr(h_true.n_rows, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t g = 0; g < active_groups.size(); ++g) {
    for (int user : active_groups[g]) {
      if (user < 0 || static_cast<arma::uword>(user) >= h_true.n_rows)
        throw std::invalid_argument("compute_sinr: user id out of range");
      const arma::uword k = static_cast<arma::uword>(user);
      const double signal = std::norm(hw(k, static_cast<arma::uword>(g)));
      double interference = 0.0;
      for (arma::uword c = 0; c < hw.n_cols; ++c)
        if (c != static_cast<arma::uword>(g)) interference += std::norm(hw(k, c));
      sinr[static_cast<std::size_t>(user)] = signal / (interference + 1.0);
    }
  }
  return sinr;
}

double frame_rate(const std::vector<double>& member_sinrs, double bandwidth_hz,
                  const SeLaw& se) {
  if (member_sinrs.empty()) throw std::invalid_argument("frame_rate: empty frame");
  const double worst = *std::min_element(member_sinrs.begin(), member_sinrs.end());
  return se(worst) * bandwidth_hz;
}

std::vector<double> four_color_throughput(const SystemGeometry& geom,
                                          const ChannelMatrix& h_true,
                                          const Schedule& schedule,
                                          const FourColorParams& params,
                                          const SeLaw& se) {
  if (!four_coloring_valid(geom))
    throw std::invalid_argument("four_color: geometry carries an invalid colouring");
  const int n_beams = geom.n_feeds();
  if (schedule.n_beams() != n_beams)
    throw std::invalid_argument("four_color: schedule/geometry beam count mismatch");

  const double per_beam_power = params.total_power / n_beams;
  const arma::mat power_gain = arma::square(arma::abs(h_true.entries));

  BeamThroughputAccumulator acc(n_beams);
  const int epochs = schedule.epochs();
  for (int e = 0; e < epochs; ++e) {
    const auto active = schedule.active_at(e);
    for (const auto& [beam, members] : active) {
      std::vector<double> sinrs;
      sinrs.reserve(members->size());
      for (int user : *members) {
        const arma::uword k = static_cast<arma::uword>(user);
        const double signal = per_beam_power * power_gain(k, static_cast<arma::uword>(beam));
        double interference = 0.0;
        for (const auto& [other, other_members] : active) {
          (void)other_members;
          if (other == beam || geom.colors[static_cast<std::size_t>(other)] !=
                                   geom.colors[static_cast<std::size_t>(beam)])
            continue;
          interference += per_beam_power * power_gain(k, static_cast<arma::uword>(other));
        }
        sinrs.push_back(signal / (interference + params.noise_bandwidth_fraction));
      }
      acc.add(beam, frame_rate(sinrs, params.bandwidth_hz / 4.0, se));
    }
  }
  return acc.per_beam();
}

std::vector<double> BeamThroughputAccumulator::per_beam() const {
  std::vector<double> out(sums_.size(), 0.0);
  for (std::size_t b = 0; b < sums_.size(); ++b)
    if (counts_[b] > 0) out[b] = sums_[b] / counts_[b];
  return out;
}

}  // namespace mbsim
