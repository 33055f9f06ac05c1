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

#ifndef MBSIM_CSIT_HPP
#define MBSIM_CSIT_HPP

#include <armadillo>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbsim/channel.hpp"
#include "mbsim/rng.hpp"

namespace mbsim {

// Thrown by decode_report. `offset` is the byte position of the defect.
class MalformedMessage : public std::runtime_error {
 public:
  MalformedMessage(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Adds an independent N(0, sigma^2) phase offset to every entry; magnitudes
// are preserved exactly. Draw order is row-major.
arma::cx_mat degrade_csit(const arma::cx_mat& h_true, double phase_sigma_deg,
                          Rng& rng);

// Keeps the min(m, N) largest-magnitude entries, zeroes the rest. Ties are
// broken toward the lower feed index.
arma::cx_rowvec select_strongest(const arma::cx_rowvec& row, int m);

// --- Report wire format -------------------------------------------------
//
// Fixed little simulator-side layout, all integers big-endian:
//   0x53 0x32            magic "S2"
//   u8   version         currently 1
//   u32  user_id
//   u64  report_time     milliseconds
//   u8   count           number of coefficients
// then per coefficient:
//   u16  feed index
//   u8   amplitude code  code * 0.25 dB below the row max; 0xFF = below -40 dB
//   u8   phase code      code * (360 / 256) degrees
//
// Coefficients more than 40 dB below the row max are not emitted.

inline constexpr double kReportAmpStepDb = 0.25;
inline constexpr double kReportAmpFloorDb = 40.0;
inline constexpr int kReportPhaseLevels = 256;
inline constexpr std::size_t kReportHeaderBytes = 16;
inline constexpr std::size_t kReportCoeffBytes = 4;

struct QuantizedCoeff {
  std::uint16_t feed = 0;
  std::uint8_t amp_code = 0;
  std::uint8_t phase_code = 0;

  // Complex value with the row max normalized to magnitude 1.
  std::complex<double> value() const;
};

struct CsitReport {
  std::uint32_t user_id = 0;
  double report_time_s = 0.0;
  // When the precoder computed from this report takes effect at the user.
  // Not carried on the wire; decode_report fills in the minimum two-hop
  // delay of 0.5 s.
  double applied_time_s = 0.0;
  std::vector<QuantizedCoeff> coefficients;

  // Dense row of length n_feeds; `scale` restores absolute amplitude.
  arma::cx_rowvec to_row(int n_feeds, double scale = 1.0) const;
};

std::vector<std::uint8_t> encode_report(const arma::cx_rowvec& sparse_row,
                                        std::uint32_t user_id,
                                        double report_time_s);
// Re-serializes stored codes; decode_report followed by this is
// byte-identical to the original message.
std::vector<std::uint8_t> encode_report(const CsitReport& report);
CsitReport decode_report(std::span<const std::uint8_t> bytes);

// Row (beam_id mod order) of the Sylvester-Hadamard matrix, entries +/-1.
// order must be a power of two in [2, 256].
std::vector<std::int8_t> hadamard_sosf(int order, int beam_id);

struct FeedbackParams {
  double phase_sigma_deg = 0.0;
  int m = 16;              // strongest coefficients per report: 16 or 32
  double cadence_s = 0.5;  // report period, at most one message per 500 ms
  double delay_s = 0.55;   // report-to-application delay, in [0.5, 0.6]
  bool quantize = true;    // run reports through the codec
};

struct ReportedChannelMatrix {
  arma::cx_mat entries;  // zeros outside the reported coefficients
  double report_time_s = 0.0;
  double staleness_s = 0.0;
};

// What the gateway knows at time t: the true channel sampled at the most
// recent report instant <= t - delay_s, phase-degraded, truncated to the
// strongest m coefficients per user and (optionally) passed through the
// report codec. Report instants sit on the grid i * cadence_s; the phase
// error draw for report i depends only on (seed, i), so queries are
// order-independent.
class FeedbackPipeline {
 public:
  using ChannelSource = std::function<ChannelMatrix(double)>;

  FeedbackPipeline(ChannelSource source, FeedbackParams params,
                   std::uint64_t seed);

  ReportedChannelMatrix reported_at(double t_seconds) const;

  const FeedbackParams& params() const { return params_; }

 private:
  ChannelSource source_;
  FeedbackParams params_;
  std::uint64_t seed_;
};

}  // namespace mbsim

#endif  // MBSIM_CSIT_HPP
