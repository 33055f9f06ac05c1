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

#ifndef MBSIM_CHANNEL_HPP
#define MBSIM_CHANNEL_HPP

#include <armadillo>
#include <vector>

#include "mbsim/geometry.hpp"
#include "mbsim/rng.hpp"

namespace mbsim {

struct UserTerminal {
  int id = 0;
  Point2 position;
  int home_beam = 0;        // feed with maximal gain toward position
  double rain_att_db = 0.0;
  double lnb_phase = 0.0;   // radians, [0, 2pi)
};

// Bernoulli-lognormal rain attenuation, static within a run.
struct RainParams {
  double lognorm_mu = 1.0;      // mean of ln(attenuation in dB)
  double lognorm_sigma = 0.5;
  double clear_sky_prob = 1.0;
};

// Attenuation in dB: 0 with probability clear_sky_prob, otherwise
// exp(N(mu, sigma^2)) clamped to [0, 40]. `pos` is reserved for spatially
// correlated rain fields; the base model draws independently per user.
double sample_rain(Rng& rng, const Point2& pos, const RainParams& params);

struct PhaseParams {
  double drift_std_rad_per_s = 0.0;  // per-feed LO drift rate sigma
};

// Carrier phase contributions: per-feed payload LO phase, per-user LNB
// phase, and a per-feed linear drift. The phase of entry (k, n) at time t is
// payload[n] + drift[n] * t + user[k], modulo 2pi.
struct PhaseDecomposition {
  std::vector<double> payload_phase;  // size N
  std::vector<double> user_phase;     // size K
  std::vector<double> drift_rate;     // size N, rad/s
};

PhaseDecomposition sample_phases(Rng& rng, const PhaseParams& params,
                                 int n_users, int n_feeds);

struct ChannelMatrix {
  arma::cx_mat entries;            // K x N
  double noise_ref_snr_db = 0.0;   // clear-sky boresight SNR at unit noise
};

// entry(k, n) = c * sqrt(gain_kn) * 10^(-rain_k / 20)
//               * exp(j (payload_n + drift_n t + user_k)),
// with the global scale c chosen so that a clear-sky user at a beam centre
// would see |h|^2 = 10^(noise_ref_snr_db / 10) against unit noise.
ChannelMatrix assemble_channel(const SystemGeometry& geom,
                               const std::vector<UserTerminal>& users,
                               const PhaseDecomposition& phases,
                               double t_seconds, double noise_ref_snr_db);

}  // namespace mbsim

#endif  // MBSIM_CHANNEL_HPP
