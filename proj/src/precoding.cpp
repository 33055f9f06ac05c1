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

#include "mbsim/precoding.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace mbsim {
namespace {

double frobenius_sq(const arma::cx_mat& m) {
  return arma::accu(arma::square(arma::abs(m)));
}

struct MemberIndex {
  int group = 0;
  int row = 0;  // row within the group's member block
};

std::vector<MemberIndex> member_index(const GroupChannel& groups) {
  std::vector<MemberIndex> idx;
  for (int g = 0; g < groups.n_groups(); ++g)
    for (int r = 0; r < static_cast<int>(groups.member_rows[static_cast<std::size_t>(g)].n_rows); ++r)
      idx.push_back({g, r});
  return idx;
}

// Smoothed max-min direction search used by block_svd for rho > 1: maximize
// min_k |C.row(k) * x|^2 over unit x.
arma::cx_vec max_min_direction(const arma::cx_mat& c, int iters) {
  const arma::uword dim = c.n_cols;
  if (dim == 1) return arma::cx_vec{std::complex<double>(1.0, 0.0)};

  arma::cx_mat u;
  arma::vec s;
  arma::cx_mat v;
  arma::svd_econ(u, s, v, c);
  arma::cx_vec x = v.col(0);

  auto gains = [&](const arma::cx_vec& xx) { return arma::square(arma::abs(c * xx)).eval(); };
  auto softmin = [&](const arma::vec& g, double tau) {
    const double gmin = g.min();
    double acc = 0.0;
    for (arma::uword i = 0; i < g.n_elem; ++i) acc += std::exp(-(g(i) - gmin) / tau);
    return gmin - tau * std::log(acc);
  };

  double step = 0.5;
  for (int it = 0; it < iters; ++it) {
    const arma::vec g = gains(x);
    const double scale = std::max(g.max(), 1e-30);
    const double tau = scale * std::max(0.02, 0.5 * std::pow(0.9, it));
    const double gmin = g.min();
    arma::vec lam(g.n_elem);
    double lam_sum = 0.0;
    for (arma::uword i = 0; i < g.n_elem; ++i) {
      lam(i) = std::exp(-(g(i) - gmin) / tau);
      lam_sum += lam(i);
    }
    lam /= lam_sum;
    arma::cx_vec grad(x.n_elem, arma::fill::zeros);
    const arma::cx_vec cx = c * x;
    for (arma::uword i = 0; i < g.n_elem; ++i)
      grad += lam(i) * (c.row(i).t() * cx(i));
    const double base = softmin(g, tau);
    bool accepted = false;
    for (int bt = 0; bt < 8; ++bt) {
      arma::cx_vec cand = x + step * grad / std::max(arma::norm(grad), 1e-30);
      cand /= arma::norm(cand);
      if (softmin(gains(cand), tau) > base) {
        x = cand;
        step = std::min(step * 1.5, 2.0);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted && step < 1e-9) break;
  }
  return x;
}

}  // namespace

InfeasibleError::InfeasibleError(const std::string& what, int n_feeds,
                                 int constraint_rows)
    : std::runtime_error(what + " (" + std::to_string(n_feeds) + " feeds vs " +
                         std::to_string(constraint_rows) + " constraint rows)"),
      n_feeds_(n_feeds),
      constraint_rows_(constraint_rows) {}

SingularityError::SingularityError(const std::string& what, int rank)
    : std::runtime_error(what + " (rank " + std::to_string(rank) + ")"), rank_(rank) {}

int GroupChannel::total_members() const {
  int n = 0;
  for (const auto& m : member_rows) n += static_cast<int>(m.n_rows);
  return n;
}

PowerBudget PowerBudget::sum_power(double p) {
  PowerBudget b;
  b.mode = PowerMode::sum;
  b.total = p;
  return b;
}

PowerBudget PowerBudget::per_antenna_power(arma::vec p) {
  PowerBudget b;
  b.mode = PowerMode::per_antenna;
  b.per_antenna = std::move(p);
  b.total = arma::accu(b.per_antenna);
  return b;
}

AveragedChannels average_group_channels(const GroupChannel& groups) {
  AveragedChannels out;
  out.rows.set_size(static_cast<arma::uword>(groups.n_groups()),
                    static_cast<arma::uword>(groups.n_feeds));
  for (int g = 0; g < groups.n_groups(); ++g) {
    const arma::cx_mat& members = groups.member_rows[static_cast<std::size_t>(g)];
    if (members.n_rows == 0)
      throw std::invalid_argument("average_group_channels: empty group " + std::to_string(g));
    arma::cx_rowvec avg = arma::mean(members, 0);
    double mean_norm = 0.0;
    for (arma::uword r = 0; r < members.n_rows; ++r) mean_norm += arma::norm(members.row(r));
    mean_norm /= static_cast<double>(members.n_rows);
    if (arma::norm(avg) < 1e-9 * mean_norm) {
      out.warnings.push_back("group " + std::to_string(g) +
                             ": averaged channel degenerate, using first member row");
      avg = members.row(0);
    }
    out.rows.row(static_cast<arma::uword>(g)) = avg;
  }
  return out;
}

PrecodingMatrix mmse_precoder(const arma::cx_mat& h_eq, double total_power,
                              double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("mmse_precoder: alpha must be >= 0");
  if (!(total_power > 0.0))
    throw std::invalid_argument("mmse_precoder: total_power must be > 0");
  const arma::uword g = h_eq.n_rows;
  arma::cx_mat gram = h_eq * h_eq.t();  // G x G, Hermitian
  gram.diag() += alpha;

  arma::cx_mat x;
  const bool ok = arma::solve(x, gram, h_eq, arma::solve_opts::no_approx);
  if (!ok) {
    const int rank = static_cast<int>(arma::rank(h_eq * h_eq.t()));
    throw SingularityError("mmse_precoder: equivalent channel Gram matrix is singular", rank);
  }
  arma::cx_mat w = x.t();  // N x G = H^H (H H^H + alpha I)^-1

  const double tr = frobenius_sq(w);
  if (!(tr > 0.0))
    throw SingularityError("mmse_precoder: zero precoding matrix", static_cast<int>(g));
  w *= std::sqrt(total_power / tr);

  PrecodingMatrix out;
  out.w = std::move(w);
  out.budget = PowerBudget::sum_power(total_power);
  return out;
}

PrecodingMatrix block_svd_precoder(const GroupChannel& groups, double total_power) {
  if (!(total_power > 0.0))
    throw std::invalid_argument("block_svd_precoder: total_power must be > 0");
  const int n_groups = groups.n_groups();
  const int n_feeds = groups.n_feeds;
  if (n_groups == 0) throw std::invalid_argument("block_svd_precoder: no groups");

  PrecodingMatrix out;
  out.budget = PowerBudget::sum_power(total_power);
  out.w.set_size(static_cast<arma::uword>(n_feeds), static_cast<arma::uword>(n_groups));

  // Averages are only needed by the fallback; computed lazily once.
  arma::cx_mat averaged;
  bool have_averaged = false;
  bool fallback_noted = false;

  for (int g = 0; g < n_groups; ++g) {
    const arma::cx_mat& own = groups.member_rows[static_cast<std::size_t>(g)];
    if (own.n_rows == 0)
      throw std::invalid_argument("block_svd_precoder: empty group " + std::to_string(g));

    int foreign_rows = 0;
    for (int o = 0; o < n_groups; ++o)
      if (o != g) foreign_rows += static_cast<int>(groups.member_rows[static_cast<std::size_t>(o)].n_rows);

    arma::cx_mat constraints;
    if (foreign_rows < n_feeds) {
      constraints.set_size(static_cast<arma::uword>(foreign_rows),
                           static_cast<arma::uword>(n_feeds));
      arma::uword at = 0;
      for (int o = 0; o < n_groups; ++o) {
        if (o == g) continue;
        const arma::cx_mat& rows = groups.member_rows[static_cast<std::size_t>(o)];
        if (rows.n_rows == 0) continue;
        constraints.rows(at, at + rows.n_rows - 1) = rows;
        at += rows.n_rows;
      }
    } else {
      // Not enough feeds to null every individual member; null the other
      // groups' equivalent channels instead. This is the regime any large
      // multicast frame operates in.
      if (n_groups - 1 >= n_feeds)
        throw InfeasibleError("block_svd_precoder: null space empty", n_feeds, foreign_rows);
      if (!have_averaged) {
        averaged = average_group_channels(groups).rows;
        have_averaged = true;
      }
      constraints.set_size(static_cast<arma::uword>(n_groups - 1),
                           static_cast<arma::uword>(n_feeds));
      arma::uword at = 0;
      for (int o = 0; o < n_groups; ++o) {
        if (o == g) continue;
        constraints.row(at++) = averaged.row(static_cast<arma::uword>(o));
      }
      if (!fallback_noted) {
        out.warnings.push_back(
            "block_svd: nulling equivalent (averaged) channels; member-level "
            "null space is empty");
        fallback_noted = true;
      }
    }

    arma::cx_mat null_basis;
    if (constraints.n_rows == 0) {
      null_basis = arma::cx_mat(static_cast<arma::uword>(n_feeds),
                                static_cast<arma::uword>(n_feeds), arma::fill::eye);
    } else {
      null_basis = arma::null(constraints);
    }
    if (null_basis.n_cols == 0)
      throw InfeasibleError("block_svd_precoder: null space empty", n_feeds,
                            static_cast<int>(constraints.n_rows));

    const arma::cx_mat projected = own * null_basis;  // rho x d
    arma::cx_vec direction;
    if (projected.n_rows == 1) {
      arma::cx_vec mf = projected.row(0).t();
      const double nrm = arma::norm(mf);
      if (nrm < 1e-300) {
        out.warnings.push_back("block_svd: group " + std::to_string(g) +
                               " has no gain inside its null space");
        direction = arma::cx_vec(null_basis.n_cols, arma::fill::zeros);
        direction(0) = 1.0;
      } else {
        direction = mf / nrm;
      }
    } else {
      direction = max_min_direction(projected, 80);
    }
    arma::cx_vec w = null_basis * direction;
    const double wn = arma::norm(w);
    if (wn > 0.0) w /= wn;
    out.w.col(static_cast<arma::uword>(g)) = w;
  }

  out.w *= std::sqrt(total_power / static_cast<double>(n_groups));
  out.min_sinr = min_member_sinr(groups, out.w);
  return out;
}

double min_member_sinr(const GroupChannel& groups, const arma::cx_mat& w) {
  double worst = std::numeric_limits<double>::infinity();
  for (int g = 0; g < groups.n_groups(); ++g) {
    const arma::cx_mat& members = groups.member_rows[static_cast<std::size_t>(g)];
    const arma::cx_mat hw = members * w;  // rho x G
    for (arma::uword r = 0; r < hw.n_rows; ++r) {
      const double signal = std::norm(hw(r, static_cast<arma::uword>(g)));
      double interference = 0.0;
      for (arma::uword c = 0; c < hw.n_cols; ++c)
        if (c != static_cast<arma::uword>(g)) interference += std::norm(hw(r, c));
      worst = std::min(worst, signal / (interference + 1.0));
    }
  }
  return worst;
}

void enforce_power(arma::cx_mat& w, const PowerBudget& budget) {
  if (budget.mode == PowerMode::sum) {
    if (!(budget.total > 0.0))
      throw std::invalid_argument("enforce_power: budget must be positive");
    const double tr = frobenius_sq(w);
    if (!(tr > 0.0)) throw std::invalid_argument("enforce_power: zero matrix");
    w *= std::sqrt(budget.total / tr);
    return;
  }
  if (budget.per_antenna.n_elem != w.n_rows)
    throw std::invalid_argument("enforce_power: per-antenna budget size mismatch");
  if (budget.per_antenna.min() <= 0.0)
    throw std::invalid_argument("enforce_power: budget must be positive");
  double worst_ratio = 0.0;
  for (arma::uword n = 0; n < w.n_rows; ++n) {
    const double row_power = arma::accu(arma::square(arma::abs(w.row(n))));
    worst_ratio = std::max(worst_ratio, row_power / budget.per_antenna(n));
  }
  if (worst_ratio == 0.0) throw std::invalid_argument("enforce_power: zero matrix");
  if (worst_ratio > 1.0) w /= std::sqrt(worst_ratio);
}

// ---------------------------------------------------------------------------
// Frame-based max-min solver.

namespace {

arma::vec member_sinrs(const std::vector<arma::cx_mat>& hw_blocks,
                       const std::vector<MemberIndex>& idx) {
  arma::vec s(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const arma::cx_mat& hw = hw_blocks[static_cast<std::size_t>(idx[i].group)];
    const arma::uword r = static_cast<arma::uword>(idx[i].row);
    const double signal = std::norm(hw(r, static_cast<arma::uword>(idx[i].group)));
    double interference = 0.0;
    for (arma::uword c = 0; c < hw.n_cols; ++c)
      if (c != static_cast<arma::uword>(idx[i].group)) interference += std::norm(hw(r, c));
    s(i) = signal / (interference + 1.0);
  }
  return s;
}

std::vector<arma::cx_mat> hw_blocks_of(const GroupChannel& groups, const arma::cx_mat& w) {
  std::vector<arma::cx_mat> blocks(static_cast<std::size_t>(groups.n_groups()));
  for (int g = 0; g < groups.n_groups(); ++g)
    blocks[static_cast<std::size_t>(g)] = groups.member_rows[static_cast<std::size_t>(g)] * w;
  return blocks;
}

double softmin_objective(const arma::vec& sinr, double tau) {
  const double smin = sinr.min();
  double acc = 0.0;
  for (arma::uword i = 0; i < sinr.n_elem; ++i) acc += std::exp(-(sinr(i) - smin) / tau);
  return smin - tau * std::log(acc);
}

void project_per_antenna(arma::cx_mat& w, const arma::vec& p) {
  for (arma::uword n = 0; n < w.n_rows; ++n) {
    const double row_power = arma::accu(arma::square(arma::abs(w.row(n))));
    if (row_power > p(n))
      w.row(n) *= std::sqrt(p(n) / row_power);
  }
}

// Max-min power allocation for fixed unit directions via bisection on the
// SINR target. gains(k, g) = |h_k u_g|^2; g_of maps member -> own group.
// Returns per-group powers (zero vector when even tiny targets fail).
arma::vec allocate_power(const arma::mat& gains, const std::vector<MemberIndex>& idx,
                         const arma::mat& dir_row_power, const arma::vec& p,
                         int bisect_iters, int fp_iters) {
  const int n_groups = static_cast<int>(gains.n_cols);
  const double p_total = arma::accu(p);

  double hi = 1.0;
  for (std::size_t i = 0; i < idx.size(); ++i)
    hi = std::max(hi, gains(static_cast<arma::uword>(i),
                            static_cast<arma::uword>(idx[i].group)) * p_total);

  const auto feasible = [&](double target, arma::vec& beta_out) {
    arma::vec beta(static_cast<arma::uword>(n_groups), arma::fill::zeros);
    const double beta_cap = 4.0 * p_total;
    for (int it = 0; it < fp_iters; ++it) {
      arma::vec next(static_cast<arma::uword>(n_groups), arma::fill::zeros);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const int g = idx[i].group;
        const double own = gains(static_cast<arma::uword>(i), static_cast<arma::uword>(g));
        if (own <= 0.0) return false;
        double interference = 0.0;
        for (int o = 0; o < n_groups; ++o)
          if (o != g)
            interference += gains(static_cast<arma::uword>(i), static_cast<arma::uword>(o)) *
                            beta(static_cast<arma::uword>(o));
        next(static_cast<arma::uword>(g)) =
            std::max(next(static_cast<arma::uword>(g)), target * (interference + 1.0) / own);
      }
      if (next.max() > beta_cap) return false;
      const double delta = arma::abs(next - beta).max();
      beta = next;
      if (delta <= 1e-12 * (1.0 + beta.max())) break;
    }
    // Per-antenna check: power on antenna n is sum_g beta_g |u_{n,g}|^2.
    const arma::vec antenna_power = dir_row_power * beta;
    for (arma::uword n = 0; n < p.n_elem; ++n)
      if (antenna_power(n) > p(n) * (1.0 + 1e-9)) return false;
    beta_out = beta;
    return true;
  };

  arma::vec best_beta(static_cast<arma::uword>(n_groups), arma::fill::zeros);
  double lo = 0.0;
  arma::vec beta;
  for (int it = 0; it < bisect_iters; ++it) {
    const double mid = (it == 0) ? hi : 0.5 * (lo + hi);
    if (feasible(mid, beta)) {
      lo = mid;
      best_beta = beta;
      if (it == 0) break;  // unbounded-looking target already feasible
    } else {
      hi = mid;
    }
  }
  return best_beta;
}

}  // namespace

PrecodingMatrix frame_based_precoder(const GroupChannel& groups,
                                     const arma::vec& per_antenna,
                                     const FrameBasedOptions& opts) {
  const int n_groups = groups.n_groups();
  const int n_feeds = groups.n_feeds;
  if (n_groups == 0) throw std::invalid_argument("frame_based_precoder: no groups");
  if (per_antenna.n_elem != static_cast<arma::uword>(n_feeds))
    throw std::invalid_argument("frame_based_precoder: per-antenna budget size mismatch");
  if (per_antenna.min() <= 0.0)
    throw std::invalid_argument("frame_based_precoder: per-antenna budget must be > 0");

  const std::vector<MemberIndex> idx = member_index(groups);
  const double p_total = arma::accu(per_antenna);

  // Stacked member matrix for gradient evaluation.
  arma::cx_mat all_rows(static_cast<arma::uword>(idx.size()),
                        static_cast<arma::uword>(n_feeds));
  for (std::size_t i = 0; i < idx.size(); ++i)
    all_rows.row(static_cast<arma::uword>(i)) =
        groups.member_rows[static_cast<std::size_t>(idx[i].group)].row(
            static_cast<arma::uword>(idx[i].row));

  auto eval_sinrs = [&](const arma::cx_mat& w) {
    return member_sinrs(hw_blocks_of(groups, w), idx);
  };

  // Initialization: MMSE on the averaged channels, folded into the
  // per-antenna ball.
  arma::cx_mat w;
  {
    const AveragedChannels avg = average_group_channels(groups);
    const double alpha = static_cast<double>(n_groups) / p_total;
    w = mmse_precoder(avg.rows, p_total, alpha).w;
    project_per_antenna(w, per_antenna);
  }

  PrecodingMatrix out;
  out.budget = PowerBudget::per_antenna_power(per_antenna);

  arma::cx_mat best_w = w;
  double best = eval_sinrs(w).min();
  out.min_sinr_history.push_back(best);

  const auto consider = [&](const arma::cx_mat& cand) {
    const double s = eval_sinrs(cand).min();
    if (s > best) {
      best = s;
      best_w = cand;
      return true;
    }
    return false;
  };

  double step = 0.25;
  int stall = 0;
  int iter = 0;
  for (; iter < opts.max_iters && stall < opts.stall_limit; ++iter) {
    const double best_before = best;

    // (a) Power reallocation along the current column directions.
    arma::cx_mat dirs(w.n_rows, w.n_cols);
    arma::mat dir_row_power(static_cast<arma::uword>(n_feeds),
                            static_cast<arma::uword>(n_groups), arma::fill::zeros);
    bool have_dirs = true;
    for (arma::uword g = 0; g < w.n_cols; ++g) {
      const double nrm = arma::norm(w.col(g));
      if (nrm < 1e-300) {
        have_dirs = false;
        break;
      }
      dirs.col(g) = w.col(g) / nrm;
      for (arma::uword n = 0; n < w.n_rows; ++n)
        dir_row_power(n, g) = std::norm(dirs(n, g));
    }
    if (have_dirs) {
      arma::mat gains(static_cast<arma::uword>(idx.size()),
                      static_cast<arma::uword>(n_groups));
      const arma::cx_mat hd = all_rows * dirs;
      for (arma::uword i = 0; i < hd.n_rows; ++i)
        for (arma::uword g = 0; g < hd.n_cols; ++g) gains(i, g) = std::norm(hd(i, g));
      const arma::vec beta = allocate_power(gains, idx, dir_row_power, per_antenna,
                                            opts.bisect_iters, opts.fixed_point_iters);
      if (beta.max() > 0.0) {
        arma::cx_mat cand = dirs;
        for (arma::uword g = 0; g < cand.n_cols; ++g)
          cand.col(g) *= std::sqrt(beta(g));
        if (consider(cand)) w = best_w;
      }
    }

    // (b) Projected gradient ascent on the smoothed min-SINR.
    {
      arma::vec sinr = eval_sinrs(w);
      const double scale = std::max(best, 1e-6);
      const double anneal = std::max(0.02, 0.5 * std::pow(0.97, iter));
      const double tau = scale * anneal;

      const double smin = sinr.min();
      arma::vec lam(sinr.n_elem);
      double lam_sum = 0.0;
      for (arma::uword i = 0; i < sinr.n_elem; ++i) {
        lam(i) = std::exp(-(sinr(i) - smin) / tau);
        lam_sum += lam(i);
      }
      lam /= lam_sum;

      const arma::cx_mat hw = all_rows * w;  // members x G
      arma::cx_mat grad(w.n_rows, w.n_cols, arma::fill::zeros);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const arma::uword ui = static_cast<arma::uword>(i);
        const arma::uword gi = static_cast<arma::uword>(idx[i].group);
        double interference = 1.0;
        for (arma::uword c = 0; c < hw.n_cols; ++c)
          if (c != gi) interference += std::norm(hw(ui, c));
        const double s = std::norm(hw(ui, gi)) / interference;
        const arma::cx_vec hk = all_rows.row(ui).t();  // conjugated column
        grad.col(gi) += lam(ui) / interference * (hk * hw(ui, gi));
        for (arma::uword c = 0; c < hw.n_cols; ++c)
          if (c != gi) grad.col(c) -= lam(ui) * s / interference * (hk * hw(ui, c));
      }

      const double gnorm = std::sqrt(frobenius_sq(grad));
      if (gnorm > 1e-300) {
        const double wnorm = std::max(std::sqrt(frobenius_sq(w)), 1e-12);
        const double base = softmin_objective(eval_sinrs(w), tau);
        for (int bt = 0; bt < 8; ++bt) {
          arma::cx_mat cand = w + (step * wnorm / gnorm) * grad;
          project_per_antenna(cand, per_antenna);
          if (softmin_objective(eval_sinrs(cand), tau) > base) {
            w = cand;
            consider(cand);
            step = std::min(step * 1.4, 4.0);
            break;
          }
          step *= 0.5;
        }
        if (step < 1e-12) step = 1e-12;
      }
    }

    out.min_sinr_history.push_back(best);
    const bool progress = (best_before > 0.0)
                              ? (best > best_before * (1.0 + opts.tol))
                              : (best > 0.0);
    stall = progress ? 0 : stall + 1;
  }

  out.converged = iter < opts.max_iters;
  if (!out.converged)
    out.warnings.push_back("frame_based: iteration limit reached before tolerance");
  project_per_antenna(best_w, per_antenna);
  out.w = std::move(best_w);
  out.min_sinr = best;
  return out;
}

}  // namespace mbsim
