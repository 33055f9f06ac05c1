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

#ifndef MBSIM_SCHEDULING_HPP
#define MBSIM_SCHEDULING_HPP

#include <armadillo>
#include <vector>

#include "mbsim/channel.hpp"
#include "mbsim/rng.hpp"

namespace mbsim {

// Per-beam partition of that beam's users into ordered frames of at most
// rho members. Epoch e activates frame e of every beam that still has one.
struct Schedule {
  int rho = 1;
  std::vector<std::vector<std::vector<int>>> frames;  // [beam][frame] -> user ids

  int n_beams() const { return static_cast<int>(frames.size()); }
  int epochs() const;
  // (beam, members) of every beam active at `epoch`.
  std::vector<std::pair<int, const std::vector<int>*>> active_at(int epoch) const;
};

struct KmeansResult {
  std::vector<int> assignment;  // point -> cluster
  double objective = 0.0;       // within-cluster sum of squared distances
  std::vector<double> objective_history;  // accepted objective per iteration
};

// Lloyd iterations with an equal-size constraint: points are processed in
// order of assignment margin (largest first) and greedily take the nearest
// centroid with remaining capacity. The reported objective never increases
// from one accepted iteration to the next; an iteration that would increase
// it is discarded and the search stops.
KmeansResult constrained_kmeans(const std::vector<arma::vec>& points, int k,
                                int capacity, Rng& rng, int max_iters);

// Uniform random permutation per beam, chopped into frames of rho.
Schedule random_schedule(const std::vector<UserTerminal>& users, int n_beams,
                         int rho, Rng& rng);

// Geographical user clustering: per-beam constrained k-means on (u, v)
// positions with k = ceil(users / rho).
Schedule guc_schedule(const std::vector<UserTerminal>& users, int n_beams,
                      int rho, Rng& rng, int kmeans_iters = 50);

enum class CsiScheduleMode {
  perfect,  // cluster on the true channel rows
  fbc,      // cluster on the gateway's reported rows + epoch alignment
};

// Channel-vector clustering: rows are rotated so the home-beam entry is
// real-nonnegative (removing the physically meaningless per-user common
// phase), normalized, embedded as real vectors of dimension 2N and
// clustered per beam. fbc additionally reorders each beam's frames by a
// greedy pass that minimizes the maximum cross-beam similarity between
// co-epoch frames.
Schedule csi_schedule(const arma::cx_mat& h, const std::vector<UserTerminal>& users,
                      int n_beams, int rho, CsiScheduleMode mode, Rng& rng,
                      int kmeans_iters = 50);

// |h_i h_j^H| / (|h_i| |h_j|), averaged over member pairs of every frame
// with at least two members. Diagnostic used by the ordering tests.
double mean_within_frame_similarity(const Schedule& schedule, const arma::cx_mat& h);

}  // namespace mbsim

#endif  // MBSIM_SCHEDULING_HPP
