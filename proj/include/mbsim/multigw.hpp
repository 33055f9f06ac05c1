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

#ifndef MBSIM_MULTIGW_HPP
#define MBSIM_MULTIGW_HPP

#include <functional>
#include <vector>

#include "mbsim/geometry.hpp"
#include "mbsim/precoding.hpp"

namespace mbsim {

// Partition of the beams into gateway clusters; each gateway owns the feeds
// of its beams and sees only the CSIT of users homed there.
struct GatewayClustering {
  int n_clusters = 1;
  std::vector<int> cluster_of_beam;
  std::vector<std::vector<int>> beams_of;  // ascending beam ids per cluster
};

// Balanced contiguous clusters from k-means on the beam centres, with beams
// moved along cluster borders until sizes differ by at most one. Fully
// deterministic for a given geometry and M.
GatewayClustering partition_clusters(const SystemGeometry& geom, int n_clusters);

// Wraps an explicit per-beam cluster assignment (validates coverage).
GatewayClustering explicit_clustering(const std::vector<int>& cluster_of_beam);

bool clustering_contiguous(const SystemGeometry& geom, const GatewayClustering& clustering,
                           double adjacency_threshold);

// true for beams with a neighbour (centres within threshold_factor x 3 dB
// radius) in a different cluster.
std::vector<bool> edge_beams(const SystemGeometry& geom, const GatewayClustering& clustering,
                             double threshold_factor = 2.2);

// Callback precoding one cluster: receives the cluster-local group channel
// (rows restricted to the cluster's feed columns) and the global feed ids.
using ClusterPrecoder =
    std::function<PrecodingMatrix(const GroupChannel& cluster_groups,
                                  const std::vector<int>& cluster_feeds)>;

// Block-diagonal precoding: every cluster is solved on its own sub-problem,
// cross-cluster entries of W are exactly zero. Group columns keep their
// global order.
PrecodingMatrix per_cluster_precode(const GatewayClustering& clustering,
                                    const GroupChannel& groups,
                                    const ClusterPrecoder& precode);

}  // namespace mbsim

#endif  // MBSIM_MULTIGW_HPP
