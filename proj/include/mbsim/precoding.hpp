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

#ifndef MBSIM_PRECODING_HPP
#define MBSIM_PRECODING_HPP

#include <armadillo>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbsim {

// Null space exhausted: the geometry cannot support the requested nulling.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, int n_feeds, int constraint_rows);
  int n_feeds() const { return n_feeds_; }
  int constraint_rows() const { return constraint_rows_; }

 private:
  int n_feeds_;
  int constraint_rows_;
};

class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, int rank);
  int rank() const { return rank_; }

 private:
  int rank_;
};

// One simultaneously served multicast group per active beam. Group g's
// member rows are the channel rows (as seen by the gateway) of the users
// sharing that beam's frame.
struct GroupChannel {
  std::vector<arma::cx_mat> member_rows;     // per group: rho_g x N
  std::vector<std::vector<int>> member_ids;  // parallel user ids
  std::vector<int> beam_of_group;
  int n_feeds = 0;

  int n_groups() const { return static_cast<int>(member_rows.size()); }
  int total_members() const;
};

enum class PowerMode { sum, per_antenna };

struct PowerBudget {
  PowerMode mode = PowerMode::sum;
  double total = 1.0;
  arma::vec per_antenna;

  static PowerBudget sum_power(double p);
  static PowerBudget per_antenna_power(arma::vec p);
};

struct PrecodingMatrix {
  arma::cx_mat w;  // N x G, one column per active group
  PowerBudget budget;
  // Minimum member SINR against the channel the precoder was given (unit
  // noise). NaN when the algorithm does not evaluate it.
  double min_sinr = std::numeric_limits<double>::quiet_NaN();
  bool converged = true;
  std::vector<double> min_sinr_history;  // frame-based: best-so-far per iteration
  std::vector<std::string> warnings;
};

struct AveragedChannels {
  arma::cx_mat rows;  // G x N equivalent single-user channels
  std::vector<std::string> warnings;
};

// Row g = arithmetic mean of group g's member rows. A nearly cancelled
// average (norm below 1e-9 of the mean member norm) falls back to the
// group's first member row and attaches a degenerate-group warning.
AveragedChannels average_group_channels(const GroupChannel& groups);

// Regularized channel inversion W = H^H (H H^H + alpha I)^-1, rescaled to
// trace(W W^H) = total_power. alpha = 0 requires full rank and otherwise
// raises SingularityError naming the deficient rank.
PrecodingMatrix mmse_precoder(const arma::cx_mat& h_eq, double total_power,
                              double alpha);

// Null-space construction: column g is orthogonal to the stacked member
// rows of all other groups. When those rows alone exhaust the feed space,
// the nulls degrade gracefully to the other groups' equivalent (averaged)
// rows, which is the only viable shape once rho * beams approaches N.
// Within the null space the column maximizes the minimum member gain.
// Columns get equal power, jointly scaled to trace(W W^H) = total_power.
PrecodingMatrix block_svd_precoder(const GroupChannel& groups, double total_power);

struct FrameBasedOptions {
  int max_iters = 200;
  double tol = 1e-5;         // relative best-min-SINR change counted as progress
  int stall_limit = 12;      // consecutive no-progress iterations before stopping
  int bisect_iters = 45;
  int fixed_point_iters = 60;
};

// Max-min SINR multicast precoding under per-antenna power constraints.
// Alternates (a) a power reallocation along fixed column directions, solved
// by bisection on the SINR target with a standard interference fixed point,
// and (b) a projected gradient ascent step on a log-sum-exp smoothed
// min-SINR objective with decreasing temperature. Returns the best iterate;
// the reported history of best-so-far min-SINR is non-decreasing.
PrecodingMatrix frame_based_precoder(const GroupChannel& groups,
                                     const arma::vec& per_antenna,
                                     const FrameBasedOptions& opts = {});

// Sum mode: single scalar rescale to trace equality. Per-antenna mode: if
// any row exceeds its budget, all columns are scaled by the single scalar
// that brings the worst row to equality.
void enforce_power(arma::cx_mat& w, const PowerBudget& budget);

// Minimum member SINR of `w` against the groups' own rows, unit noise.
double min_member_sinr(const GroupChannel& groups, const arma::cx_mat& w);

}  // namespace mbsim

#endif  // MBSIM_PRECODING_HPP
