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

#include "mbsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mbsim {

double sample_rain(Rng& rng, const Point2& pos, const RainParams& params) {
  (void)pos;
  if (params.lognorm_sigma < 0.0)
    throw std::invalid_argument("rain: lognorm_sigma must be >= 0");
  if (params.clear_sky_prob < 0.0 || params.clear_sky_prob > 1.0)
    throw std::invalid_argument("rain: clear_sky_prob must be in [0, 1]");
  if (rng.uniform() < params.clear_sky_prob) return 0.0;
  const double att = std::exp(rng.normal(params.lognorm_mu, params.lognorm_sigma));
  return std::clamp(att, 0.0, 40.0);
}

PhaseDecomposition sample_phases(Rng& rng, const PhaseParams& params,
                                 int n_users, int n_feeds) {
  if (n_users < 1 || n_feeds < 1)
    throw std::invalid_argument("sample_phases: need at least one user and one feed");
  PhaseDecomposition out;
  out.payload_phase.resize(static_cast<std::size_t>(n_feeds));
  out.user_phase.resize(static_cast<std::size_t>(n_users));
  out.drift_rate.resize(static_cast<std::size_t>(n_feeds));
  for (auto& p : out.payload_phase) p = rng.uniform(0.0, 2.0 * M_PI);
  for (auto& p : out.user_phase) p = rng.uniform(0.0, 2.0 * M_PI);
  for (auto& d : out.drift_rate) d = rng.normal(0.0, params.drift_std_rad_per_s);
  return out;
}

ChannelMatrix assemble_channel(const SystemGeometry& geom,
                               const std::vector<UserTerminal>& users,
                               const PhaseDecomposition& phases,
                               double t_seconds, double noise_ref_snr_db) {
  const int n_feeds = geom.n_feeds();
  const int n_users = static_cast<int>(users.size());
  if (t_seconds < 0.0)
    throw std::invalid_argument("assemble_channel: t must be >= 0");
  if (phases.payload_phase.size() != static_cast<std::size_t>(n_feeds) ||
      phases.drift_rate.size() != static_cast<std::size_t>(n_feeds) ||
      phases.user_phase.size() != static_cast<std::size_t>(n_users))
    throw std::invalid_argument("assemble_channel: phase dimensions do not match");

  const double peak_gain = std::pow(10.0, geom.peak_gain_db / 10.0);
  const double snr_lin = std::pow(10.0, noise_ref_snr_db / 10.0);
  // A clear-sky boresight user sees sqrt(peak_gain) * scale, so its SNR
  // against unit noise lands exactly on noise_ref_snr_db.
  const double scale = std::sqrt(snr_lin / peak_gain);

  ChannelMatrix out;
  out.noise_ref_snr_db = noise_ref_snr_db;
  out.entries.set_size(n_users, n_feeds);
  for (int k = 0; k < n_users; ++k) {
    const UserTerminal& user = users[static_cast<std::size_t>(k)];
    const double rain_amp = std::pow(10.0, -user.rain_att_db / 20.0);
    for (int n = 0; n < n_feeds; ++n) {
      const double amp =
          scale * std::sqrt(beam_gain(geom, user.position, n)) * rain_amp;
      const double phase = phases.payload_phase[static_cast<std::size_t>(n)] +
                           phases.drift_rate[static_cast<std::size_t>(n)] * t_seconds +
                           phases.user_phase[static_cast<std::size_t>(k)];
      out.entries(static_cast<arma::uword>(k), static_cast<arma::uword>(n)) =
          std::polar(amp, phase);
    }
  }
  return out;
}

}  // namespace mbsim
