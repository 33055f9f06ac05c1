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

#ifndef MBSIM_LINK_EVAL_HPP
#define MBSIM_LINK_EVAL_HPP

#include <armadillo>
#include <string>
#include <vector>

#include "mbsim/channel.hpp"
#include "mbsim/geometry.hpp"
#include "mbsim/scheduling.hpp"

namespace mbsim {

// SINR (linear) to spectral efficiency (bits/s/Hz). Default law is Shannon
// capped at 5.9 bits/s/Hz, the ceiling of the highest DVB-S2X modcod
// family. Table mode is a step function over (threshold_dB, SE) rows.
struct SeLaw {
  enum class Kind { shannon_capped, table };

  Kind kind = Kind::shannon_capped;
  double cap = 5.9;
  std::vector<std::pair<double, double>> rows;  // (threshold_db, se)

  double operator()(double sinr_linear) const;

  static SeLaw shannon(double cap = 5.9);
  // Built-in 24-row DVB-S2X-like modcod table.
  static SeLaw dvbs2x_like();
  // Validates strictly increasing thresholds and non-decreasing SE.
  static SeLaw from_rows(std::vector<std::pair<double, double>> rows);
  // Plain text file, lines of "threshold_db se", '#' comments.
  static SeLaw from_table_file(const std::string& path);
};

// SINR_k = |h_k w_g(k)|^2 / (sum_{g' != g(k)} |h_k w_g'|^2 + 1) for every
// member of an active group; NaN for users outside all active groups.
// active_groups[g] lists the member user ids of column g.
std::vector<double> compute_sinr(const arma::cx_mat& h_true, const arma::cx_mat& w,
                                 const std::vector<std::vector<int>>& active_groups);

// spectral_efficiency(min member SINR) x bandwidth. The worst member sets
// the multicast frame rate.
double frame_rate(const std::vector<double>& member_sinrs, double bandwidth_hz,
                  const SeLaw& se);

struct FourColorParams {
  double total_power = 1.0;
  double bandwidth_hz = 500e6;
  // Noise inside a quarter-band receiver, relative to the unit full-band
  // noise the channel is normalized against.
  double noise_bandwidth_fraction = 0.25;
};

// Reference system without precoding: each beam transmits its own frames on
// its own feed at power total/N, interference comes only from co-colour
// beams, and every beam runs in bandwidth_hz / 4. Returns per-beam average
// throughput in bits/s across the schedule's epochs.
std::vector<double> four_color_throughput(const SystemGeometry& geom,
                                          const ChannelMatrix& h_true,
                                          const Schedule& schedule,
                                          const FourColorParams& params,
                                          const SeLaw& se);

// Mean of per-epoch frame rates, accumulated per beam.
class BeamThroughputAccumulator {
 public:
  explicit BeamThroughputAccumulator(int n_beams)
      : sums_(static_cast<std::size_t>(n_beams), 0.0),
        counts_(static_cast<std::size_t>(n_beams), 0) {}

  void add(int beam, double rate_bps) {
    sums_[static_cast<std::size_t>(beam)] += rate_bps;
    ++counts_[static_cast<std::size_t>(beam)];
  }

  // Beams that were never active report 0.
  std::vector<double> per_beam() const;

 private:
  std::vector<double> sums_;
  std::vector<int> counts_;
};

}  // namespace mbsim

#endif  // MBSIM_LINK_EVAL_HPP
