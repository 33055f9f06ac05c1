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

#include "mbsim/scheduling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mbsim {
namespace {

std::vector<std::vector<int>> users_by_beam(const std::vector<UserTerminal>& users,
                                            int n_beams) {
  std::vector<std::vector<int>> by_beam(static_cast<std::size_t>(n_beams));
  for (const UserTerminal& u : users) {
    if (u.home_beam < 0 || u.home_beam >= n_beams)
      throw std::invalid_argument("schedule: user home beam out of range");
    by_beam[static_cast<std::size_t>(u.home_beam)].push_back(u.id);
  }
  for (auto& ids : by_beam) std::sort(ids.begin(), ids.end());
  return by_beam;
}

// Frames from a cluster assignment, ordered by cluster index; members kept
// ascending for determinism.
std::vector<std::vector<int>> frames_from_assignment(const std::vector<int>& ids,
                                                     const std::vector<int>& assignment,
                                                     int k) {
  std::vector<std::vector<int>> frames(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ids.size(); ++i)
    frames[static_cast<std::size_t>(assignment[i])].push_back(ids[i]);
  frames.erase(std::remove_if(frames.begin(), frames.end(),
                              [](const std::vector<int>& f) { return f.empty(); }),
               frames.end());
  for (auto& f : frames) std::sort(f.begin(), f.end());
  return frames;
}

double pair_similarity(const arma::cx_mat& h, int i, int j) {
  const arma::cx_rowvec a = h.row(static_cast<arma::uword>(i));
  const arma::cx_rowvec b = h.row(static_cast<arma::uword>(j));
  const double na = arma::norm(a);
  const double nb = arma::norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::abs(arma::cdot(a, b)) / (na * nb);
}

double frame_pair_similarity(const arma::cx_mat& h, const std::vector<int>& fa,
                             const std::vector<int>& fb) {
  double worst = 0.0;
  for (int i : fa)
    for (int j : fb) worst = std::max(worst, pair_similarity(h, i, j));
  return worst;
}

}  // namespace

int Schedule::epochs() const {
  std::size_t e = 0;
  for (const auto& beam_frames : frames) e = std::max(e, beam_frames.size());
  return static_cast<int>(e);
}

std::vector<std::pair<int, const std::vector<int>*>> Schedule::active_at(int epoch) const {
  std::vector<std::pair<int, const std::vector<int>*>> active;
  for (int b = 0; b < n_beams(); ++b) {
    const auto& beam_frames = frames[static_cast<std::size_t>(b)];
    if (epoch < static_cast<int>(beam_frames.size()))
      active.emplace_back(b, &beam_frames[static_cast<std::size_t>(epoch)]);
  }
  return active;
}

KmeansResult constrained_kmeans(const std::vector<arma::vec>& points, int k,
                                int capacity, Rng& rng, int max_iters) {
  const int n = static_cast<int>(points.size());
  if (n == 0) throw std::invalid_argument("constrained_kmeans: no points");
  if (k < 1 || capacity < 1 || max_iters < 1)
    throw std::invalid_argument("constrained_kmeans: k, capacity and iterations must be >= 1");
  if (static_cast<long long>(k) * capacity < n)
    throw std::invalid_argument("constrained_kmeans: k * capacity < number of points");
  const arma::uword dim = points[0].n_elem;
  for (const auto& p : points)
    if (p.n_elem != dim)
      throw std::invalid_argument("constrained_kmeans: inconsistent point dimensions");

  // k-means++ seeding.
  std::vector<arma::vec> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  centroids.push_back(points[rng.uniform_int(static_cast<std::uint64_t>(n))]);
  std::vector<double> d2(static_cast<std::size_t>(n));
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) {
        const double d = arma::accu(arma::square(points[static_cast<std::size_t>(i)] - c));
        best = std::min(best, d);
      }
      d2[static_cast<std::size_t>(i)] = best;
      total += best;
    }
    if (total <= 0.0) {
      centroids.push_back(points[rng.uniform_int(static_cast<std::uint64_t>(n))]);
      continue;
    }
    double r = rng.uniform() * total;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      r -= d2[static_cast<std::size_t>(i)];
      if (r <= 0.0) {
        pick = i;
        break;
      }
    }
    centroids.push_back(points[static_cast<std::size_t>(pick)]);
  }

  KmeansResult best;
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  bool have_best = false;

  for (int iter = 0; iter < max_iters; ++iter) {
    // Assignment margins against all centroids (capacity ignored here).
    struct Order {
      double margin;
      int index;
    };
    std::vector<Order> order(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> dist(static_cast<std::size_t>(n),
                                          std::vector<double>(static_cast<std::size_t>(k)));
    for (int i = 0; i < n; ++i) {
      double d1 = std::numeric_limits<double>::infinity();
      double d2nd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = arma::accu(arma::square(points[static_cast<std::size_t>(i)] -
                                                 centroids[static_cast<std::size_t>(c)]));
        dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = d;
        if (d < d1) {
          d2nd = d1;
          d1 = d;
        } else if (d < d2nd) {
          d2nd = d;
        }
      }
      order[static_cast<std::size_t>(i)] = {k > 1 ? d2nd - d1 : 0.0, i};
    }
    std::stable_sort(order.begin(), order.end(), [](const Order& a, const Order& b) {
      if (a.margin != b.margin) return a.margin > b.margin;
      return a.index < b.index;
    });

    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    std::vector<int> next_assignment(static_cast<std::size_t>(n), -1);
    for (const Order& o : order) {
      int chosen = -1;
      double chosen_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] >= capacity) continue;
        const double d = dist[static_cast<std::size_t>(o.index)][static_cast<std::size_t>(c)];
        if (d < chosen_d) {
          chosen_d = d;
          chosen = c;
        }
      }
      next_assignment[static_cast<std::size_t>(o.index)] = chosen;
      ++counts[static_cast<std::size_t>(chosen)];
    }

    // Centroid update; empty clusters keep their previous centre.
    std::vector<arma::vec> next_centroids = centroids;
    for (int c = 0; c < k; ++c) {
      arma::vec acc(dim, arma::fill::zeros);
      int cnt = 0;
      for (int i = 0; i < n; ++i)
        if (next_assignment[static_cast<std::size_t>(i)] == c) {
          acc += points[static_cast<std::size_t>(i)];
          ++cnt;
        }
      if (cnt > 0) next_centroids[static_cast<std::size_t>(c)] = acc / cnt;
    }

    double objective = 0.0;
    for (int i = 0; i < n; ++i)
      objective += arma::accu(arma::square(
          points[static_cast<std::size_t>(i)] -
          next_centroids[static_cast<std::size_t>(next_assignment[static_cast<std::size_t>(i)])]));

    if (have_best && objective > best.objective + 1e-12 * (1.0 + best.objective))
      break;  // capacity greediness can regress; keep the best iterate

    const bool unchanged = have_best && next_assignment == assignment;
    assignment = next_assignment;
    centroids = std::move(next_centroids);
    best.assignment = assignment;
    best.objective = objective;
    best.objective_history.push_back(objective);
    have_best = true;
    if (unchanged) break;
  }
  return best;
}

Schedule random_schedule(const std::vector<UserTerminal>& users, int n_beams,
                         int rho, Rng& rng) {
  if (rho < 1) throw std::invalid_argument("schedule: rho must be >= 1");
  Schedule out;
  out.rho = rho;
  out.frames.resize(static_cast<std::size_t>(n_beams));
  const auto by_beam = users_by_beam(users, n_beams);
  for (int b = 0; b < n_beams; ++b) {
    std::vector<int> ids = by_beam[static_cast<std::size_t>(b)];
    rng.shuffle(ids);
    auto& frames = out.frames[static_cast<std::size_t>(b)];
    for (std::size_t at = 0; at < ids.size(); at += static_cast<std::size_t>(rho)) {
      const std::size_t end = std::min(ids.size(), at + static_cast<std::size_t>(rho));
      frames.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(at),
                          ids.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return out;
}

Schedule guc_schedule(const std::vector<UserTerminal>& users, int n_beams,
                      int rho, Rng& rng, int kmeans_iters) {
  if (rho < 1) throw std::invalid_argument("schedule: rho must be >= 1");
  Schedule out;
  out.rho = rho;
  out.frames.resize(static_cast<std::size_t>(n_beams));
  const auto by_beam = users_by_beam(users, n_beams);

  std::vector<const UserTerminal*> by_id(users.size(), nullptr);
  for (const UserTerminal& u : users) by_id[static_cast<std::size_t>(u.id)] = &u;

  for (int b = 0; b < n_beams; ++b) {
    const std::vector<int>& ids = by_beam[static_cast<std::size_t>(b)];
    if (ids.empty()) continue;
    const int k = static_cast<int>((ids.size() + static_cast<std::size_t>(rho) - 1) /
                                   static_cast<std::size_t>(rho));
    std::vector<arma::vec> points;
    points.reserve(ids.size());
    for (int id : ids) {
      const UserTerminal* u = by_id[static_cast<std::size_t>(id)];
      points.push_back(arma::vec{u->position.u, u->position.v});
    }
    const KmeansResult km = constrained_kmeans(points, k, rho, rng, kmeans_iters);
    out.frames[static_cast<std::size_t>(b)] = frames_from_assignment(ids, km.assignment, k);
  }
  return out;
}

Schedule csi_schedule(const arma::cx_mat& h, const std::vector<UserTerminal>& users,
                      int n_beams, int rho, CsiScheduleMode mode, Rng& rng,
                      int kmeans_iters) {
  if (rho < 1) throw std::invalid_argument("schedule: rho must be >= 1");
  if (h.n_rows < users.size())
    throw std::invalid_argument("csi_schedule: channel rows missing for some users");
  Schedule out;
  out.rho = rho;
  out.frames.resize(static_cast<std::size_t>(n_beams));
  const auto by_beam = users_by_beam(users, n_beams);

  std::vector<const UserTerminal*> by_id(users.size(), nullptr);
  for (const UserTerminal& u : users) by_id[static_cast<std::size_t>(u.id)] = &u;

  const arma::uword n_feeds = h.n_cols;
  for (int b = 0; b < n_beams; ++b) {
    const std::vector<int>& ids = by_beam[static_cast<std::size_t>(b)];
    if (ids.empty()) continue;
    const int k = static_cast<int>((ids.size() + static_cast<std::size_t>(rho) - 1) /
                                   static_cast<std::size_t>(rho));
    std::vector<arma::vec> points;
    points.reserve(ids.size());
    for (int id : ids) {
      const UserTerminal* u = by_id[static_cast<std::size_t>(id)];
      arma::cx_rowvec row = h.row(static_cast<arma::uword>(id));
      const double nrm = arma::norm(row);
      if (nrm == 0.0)
        throw std::invalid_argument("csi_schedule: zero channel row for user " +
                                    std::to_string(id));
      // Rotate the per-user common phase away: home-beam entry becomes
      // real-nonnegative, so h and e^{j phi} h embed identically.
      const std::complex<double> anchor = row(static_cast<arma::uword>(u->home_beam));
      if (std::abs(anchor) > 0.0) row *= std::polar(1.0, -std::arg(anchor));
      row /= nrm;
      arma::vec embedded(2 * n_feeds);
      for (arma::uword c = 0; c < n_feeds; ++c) {
        embedded(c) = row(c).real();
        embedded(n_feeds + c) = row(c).imag();
      }
      points.push_back(std::move(embedded));
    }
    const KmeansResult km = constrained_kmeans(points, k, rho, rng, kmeans_iters);
    out.frames[static_cast<std::size_t>(b)] = frames_from_assignment(ids, km.assignment, k);
  }

  if (mode == CsiScheduleMode::fbc) {
    // Greedy epoch alignment: beams in id order; each epoch takes the frame
    // with the smallest worst-case similarity to the co-epoch frames already
    // placed, so strongly coupled users end up in different epochs.
    bool first = true;
    for (int b = 0; b < n_beams; ++b) {
      auto& frames = out.frames[static_cast<std::size_t>(b)];
      if (frames.empty()) continue;
      if (first) {
        first = false;
        continue;
      }
      std::vector<std::vector<int>> reordered;
      std::vector<bool> used(frames.size(), false);
      for (std::size_t e = 0; e < frames.size(); ++e) {
        int pick = -1;
        double pick_cost = std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < frames.size(); ++f) {
          if (used[f]) continue;
          double cost = 0.0;
          for (int b2 = 0; b2 < b; ++b2) {
            const auto& other = out.frames[static_cast<std::size_t>(b2)];
            if (e < other.size())
              cost = std::max(cost, frame_pair_similarity(h, frames[f], other[e]));
          }
          if (cost < pick_cost) {
            pick_cost = cost;
            pick = static_cast<int>(f);
          }
        }
        used[static_cast<std::size_t>(pick)] = true;
        reordered.push_back(frames[static_cast<std::size_t>(pick)]);
      }
      frames = std::move(reordered);
    }
  }
  return out;
}

double mean_within_frame_similarity(const Schedule& schedule, const arma::cx_mat& h) {
  double acc = 0.0;
  int n_pairs = 0;
  for (const auto& beam_frames : schedule.frames)
    for (const auto& frame : beam_frames)
      for (std::size_t i = 0; i < frame.size(); ++i)
        for (std::size_t j = i + 1; j < frame.size(); ++j) {
          acc += pair_similarity(h, frame[i], frame[j]);
          ++n_pairs;
        }
  return n_pairs > 0 ? acc / n_pairs : 0.0;
}

}  // namespace mbsim
