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

#include "mbsim/multigw.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "mbsim/rng.hpp"
#include "mbsim/scheduling.hpp"

namespace mbsim {
namespace {

constexpr std::uint64_t kPartitionSeed = 0x6D756C746967775FULL;

std::vector<std::vector<int>> beam_neighbors(const SystemGeometry& geom,
                                             double threshold) {
  std::vector<std::vector<int>> nb(static_cast<std::size_t>(geom.n_feeds()));
  for (const auto& [i, j] : adjacent_beam_pairs(geom, threshold)) {
    nb[static_cast<std::size_t>(i)].push_back(j);
    nb[static_cast<std::size_t>(j)].push_back(i);
  }
  return nb;
}

// One-hop adjacency: nearest lattice neighbours only.
double one_hop_threshold(const SystemGeometry& geom) {
  return geom.spacing * 1.2;
}

bool connected_without(const std::vector<int>& members,
                       const std::vector<std::vector<int>>& neighbors, int removed) {
  std::vector<int> rest;
  for (int b : members)
    if (b != removed) rest.push_back(b);
  if (rest.size() <= 1) return true;
  std::vector<bool> in_rest(neighbors.size(), false);
  for (int b : rest) in_rest[static_cast<std::size_t>(b)] = true;
  std::vector<bool> seen(neighbors.size(), false);
  std::deque<int> queue{rest[0]};
  seen[static_cast<std::size_t>(rest[0])] = true;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const int at = queue.front();
    queue.pop_front();
    for (int nb : neighbors[static_cast<std::size_t>(at)]) {
      if (!in_rest[static_cast<std::size_t>(nb)] || seen[static_cast<std::size_t>(nb)])
        continue;
      seen[static_cast<std::size_t>(nb)] = true;
      ++reached;
      queue.push_back(nb);
    }
  }
  return reached == rest.size();
}

void rebuild_members(GatewayClustering& clustering) {
  clustering.beams_of.assign(static_cast<std::size_t>(clustering.n_clusters), {});
  for (std::size_t b = 0; b < clustering.cluster_of_beam.size(); ++b)
    clustering.beams_of[static_cast<std::size_t>(clustering.cluster_of_beam[b])].push_back(
        static_cast<int>(b));
}

// Canonical cluster ids: ascending by smallest member beam.
void relabel(GatewayClustering& clustering) {
  std::vector<int> order(static_cast<std::size_t>(clustering.n_clusters));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ba = clustering.beams_of[static_cast<std::size_t>(a)];
    const auto& bb = clustering.beams_of[static_cast<std::size_t>(b)];
    if (ba.empty() || bb.empty()) return ba.size() > bb.size();
    return ba.front() < bb.front();
  });
  std::vector<int> new_id(static_cast<std::size_t>(clustering.n_clusters));
  for (int i = 0; i < clustering.n_clusters; ++i)
    new_id[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
  for (int& c : clustering.cluster_of_beam) c = new_id[static_cast<std::size_t>(c)];
  rebuild_members(clustering);
}

}  // namespace

GatewayClustering partition_clusters(const SystemGeometry& geom, int n_clusters) {
  const int n_beams = geom.n_feeds();
  if (n_clusters < 1 || n_clusters > n_beams)
    throw std::invalid_argument("partition_clusters: need 1 <= M <= number of beams");

  GatewayClustering out;
  out.n_clusters = n_clusters;
  out.cluster_of_beam.assign(static_cast<std::size_t>(n_beams), 0);
  if (n_clusters == 1) {
    rebuild_members(out);
    return out;
  }

  // Unconstrained Lloyd on the beam centres; deterministic internal seed.
  std::vector<arma::vec> points;
  points.reserve(static_cast<std::size_t>(n_beams));
  for (const Point2& c : geom.beam_centers) points.push_back(arma::vec{c.u, c.v});
  Rng rng(derive_seed(kPartitionSeed, static_cast<std::uint64_t>(n_clusters)));
  const KmeansResult km = constrained_kmeans(points, n_clusters, n_beams, rng, 100);
  out.cluster_of_beam = km.assignment;
  rebuild_members(out);

  const auto neighbors = beam_neighbors(geom, one_hop_threshold(geom));

  // Fill any empty cluster with the farthest-from-centroid beam of the
  // largest cluster (rare; k-means++ seeding usually prevents it).
  for (int c = 0; c < n_clusters; ++c) {
    while (out.beams_of[static_cast<std::size_t>(c)].empty()) {
      int donor = 0;
      for (int o = 1; o < n_clusters; ++o)
        if (out.beams_of[static_cast<std::size_t>(o)].size() >
            out.beams_of[static_cast<std::size_t>(donor)].size())
          donor = o;
      const int beam = out.beams_of[static_cast<std::size_t>(donor)].back();
      out.cluster_of_beam[static_cast<std::size_t>(beam)] = c;
      rebuild_members(out);
    }
  }

  // Balance: move border beams from the largest to the smallest adjacent
  // cluster until sizes differ by at most one. Moves keep the donor
  // connected and the recipient adjacent, so contiguity survives.
  for (int guard = 0; guard < n_beams * n_beams; ++guard) {
    int largest = 0;
    int smallest = 0;
    for (int c = 1; c < n_clusters; ++c) {
      if (out.beams_of[static_cast<std::size_t>(c)].size() >
          out.beams_of[static_cast<std::size_t>(largest)].size())
        largest = c;
      if (out.beams_of[static_cast<std::size_t>(c)].size() <
          out.beams_of[static_cast<std::size_t>(smallest)].size())
        smallest = c;
    }
    const std::size_t max_size = out.beams_of[static_cast<std::size_t>(largest)].size();
    const std::size_t min_size = out.beams_of[static_cast<std::size_t>(smallest)].size();
    if (max_size - min_size <= 1) break;

    // Candidate recipients in ascending size order.
    std::vector<int> recipients;
    for (int c = 0; c < n_clusters; ++c)
      if (out.beams_of[static_cast<std::size_t>(c)].size() <= max_size - 2)
        recipients.push_back(c);
    std::sort(recipients.begin(), recipients.end(), [&](int a, int b) {
      const std::size_t sa = out.beams_of[static_cast<std::size_t>(a)].size();
      const std::size_t sb = out.beams_of[static_cast<std::size_t>(b)].size();
      if (sa != sb) return sa < sb;
      return a < b;
    });

    bool moved = false;
    for (int recipient : recipients) {
      for (int beam : out.beams_of[static_cast<std::size_t>(largest)]) {
        bool touches_recipient = false;
        for (int nb : neighbors[static_cast<std::size_t>(beam)])
          if (out.cluster_of_beam[static_cast<std::size_t>(nb)] == recipient)
            touches_recipient = true;
        if (!touches_recipient) continue;
        if (!connected_without(out.beams_of[static_cast<std::size_t>(largest)], neighbors, beam))
          continue;
        out.cluster_of_beam[static_cast<std::size_t>(beam)] = recipient;
        rebuild_members(out);
        moved = true;
        break;
      }
      if (moved) break;
    }
    if (!moved) break;
  }

  relabel(out);
  if (!clustering_contiguous(geom, out, one_hop_threshold(geom)))
    throw std::runtime_error("partition_clusters: could not build contiguous clusters");
  return out;
}

GatewayClustering explicit_clustering(const std::vector<int>& cluster_of_beam) {
  if (cluster_of_beam.empty())
    throw std::invalid_argument("explicit_clustering: empty assignment");
  const int n_clusters = *std::max_element(cluster_of_beam.begin(), cluster_of_beam.end()) + 1;
  std::vector<bool> present(static_cast<std::size_t>(n_clusters), false);
  for (int c : cluster_of_beam) {
    if (c < 0) throw std::invalid_argument("explicit_clustering: negative cluster id");
    present[static_cast<std::size_t>(c)] = true;
  }
  for (bool p : present)
    if (!p) throw std::invalid_argument("explicit_clustering: cluster ids must be contiguous");
  GatewayClustering out;
  out.n_clusters = n_clusters;
  out.cluster_of_beam = cluster_of_beam;
  rebuild_members(out);
  return out;
}

bool clustering_contiguous(const SystemGeometry& geom, const GatewayClustering& clustering,
                           double adjacency_threshold) {
  const auto neighbors = beam_neighbors(geom, adjacency_threshold);
  for (const auto& members : clustering.beams_of) {
    if (members.size() <= 1) continue;
    if (!connected_without(members, neighbors, -1)) return false;
  }
  return true;
}

std::vector<bool> edge_beams(const SystemGeometry& geom, const GatewayClustering& clustering,
                             double threshold_factor) {
  const double threshold = threshold_factor * geom.beam_radius_3db;
  std::vector<bool> edge(static_cast<std::size_t>(geom.n_feeds()), false);
  for (const auto& [i, j] : adjacent_beam_pairs(geom, threshold)) {
    if (clustering.cluster_of_beam[static_cast<std::size_t>(i)] !=
        clustering.cluster_of_beam[static_cast<std::size_t>(j)]) {
      edge[static_cast<std::size_t>(i)] = true;
      edge[static_cast<std::size_t>(j)] = true;
    }
  }
  return edge;
}

PrecodingMatrix per_cluster_precode(const GatewayClustering& clustering,
                                    const GroupChannel& groups,
                                    const ClusterPrecoder& precode) {
  const int n_feeds = groups.n_feeds;
  const int n_groups = groups.n_groups();
  if (static_cast<int>(clustering.cluster_of_beam.size()) != n_feeds)
    throw std::invalid_argument("per_cluster_precode: clustering/feed count mismatch");

  PrecodingMatrix out;
  out.w.zeros(static_cast<arma::uword>(n_feeds), static_cast<arma::uword>(n_groups));
  out.min_sinr = std::numeric_limits<double>::quiet_NaN();

  for (int c = 0; c < clustering.n_clusters; ++c) {
    const std::vector<int>& feeds = clustering.beams_of[static_cast<std::size_t>(c)];
    if (feeds.empty()) continue;
    arma::uvec feed_idx(feeds.size());
    for (std::size_t i = 0; i < feeds.size(); ++i)
      feed_idx(i) = static_cast<arma::uword>(feeds[i]);

    GroupChannel sub;
    sub.n_feeds = static_cast<int>(feeds.size());
    std::vector<int> global_cols;
    for (int g = 0; g < n_groups; ++g) {
      const int beam = groups.beam_of_group[static_cast<std::size_t>(g)];
      if (clustering.cluster_of_beam[static_cast<std::size_t>(beam)] != c) continue;
      sub.member_rows.push_back(groups.member_rows[static_cast<std::size_t>(g)].cols(feed_idx));
      sub.member_ids.push_back(groups.member_ids[static_cast<std::size_t>(g)]);
      const auto local = std::find(feeds.begin(), feeds.end(), beam);
      sub.beam_of_group.push_back(static_cast<int>(local - feeds.begin()));
      global_cols.push_back(g);
    }
    if (sub.member_rows.empty()) continue;

    PrecodingMatrix block = precode(sub, feeds);
    if (block.w.n_rows != static_cast<arma::uword>(sub.n_feeds) ||
        block.w.n_cols != static_cast<arma::uword>(sub.n_groups()))
      throw std::invalid_argument("per_cluster_precode: block precoder returned wrong shape");

    for (std::size_t j = 0; j < global_cols.size(); ++j)
      for (std::size_t i = 0; i < feeds.size(); ++i)
        out.w(static_cast<arma::uword>(feeds[i]),
              static_cast<arma::uword>(global_cols[j])) = block.w(static_cast<arma::uword>(i),
                                                                  static_cast<arma::uword>(j));
    out.converged = out.converged && block.converged;
    for (auto& warning : block.warnings)
      out.warnings.push_back("cluster " + std::to_string(c) + ": " + warning);
  }
  return out;
}

}  // namespace mbsim
