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

#include "mbsim/csit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace mbsim {
namespace {

constexpr std::uint8_t kMagic0 = 0x53;  // 'S'
constexpr std::uint8_t kMagic1 = 0x32;  // '2'
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kAmpBelowFloor = 0xFF;
constexpr std::uint8_t kMaxAmpCode = 160;  // 40 dB / 0.25 dB

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8)
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xFF));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8)
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xFF));
}

std::uint64_t read_be(std::span<const std::uint8_t> bytes, std::size_t at,
                      std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v = (v << 8) | bytes[at + i];
  return v;
}

double phase_step_rad() { return 2.0 * M_PI / kReportPhaseLevels; }

std::uint8_t quantize_phase(double phase_rad) {
  const long code = std::lround(phase_rad / phase_step_rad());
  return static_cast<std::uint8_t>(((code % kReportPhaseLevels) + kReportPhaseLevels) %
                                   kReportPhaseLevels);
}

}  // namespace

MalformedMessage::MalformedMessage(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

arma::cx_mat degrade_csit(const arma::cx_mat& h_true, double phase_sigma_deg,
                          Rng& rng) {
  if (phase_sigma_deg < 0.0)
    throw std::invalid_argument("degrade_csit: phase_sigma_deg must be >= 0");
  const double sigma_rad = phase_sigma_deg * M_PI / 180.0;
  arma::cx_mat out(h_true.n_rows, h_true.n_cols);
  for (arma::uword k = 0; k < h_true.n_rows; ++k)
    for (arma::uword n = 0; n < h_true.n_cols; ++n)
      out(k, n) = h_true(k, n) * std::polar(1.0, rng.normal(0.0, sigma_rad));
  return out;
}

arma::cx_rowvec select_strongest(const arma::cx_rowvec& row, int m) {
  if (m < 1) throw std::invalid_argument("select_strongest: m must be >= 1");
  const int n = static_cast<int>(row.n_elem);
  if (m >= n) return row;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ma = std::abs(row(static_cast<arma::uword>(a)));
    const double mb = std::abs(row(static_cast<arma::uword>(b)));
    if (ma != mb) return ma > mb;
    return a < b;
  });
  arma::cx_rowvec out(row.n_elem, arma::fill::zeros);
  for (int i = 0; i < m; ++i) {
    const arma::uword idx = static_cast<arma::uword>(order[static_cast<std::size_t>(i)]);
    out(idx) = row(idx);
  }
  return out;
}

std::complex<double> QuantizedCoeff::value() const {
  if (amp_code == kAmpBelowFloor) return {0.0, 0.0};
  const double mag = std::pow(10.0, -(amp_code * kReportAmpStepDb) / 20.0);
  return std::polar(mag, phase_code * phase_step_rad());
}

arma::cx_rowvec CsitReport::to_row(int n_feeds, double scale) const {
  arma::cx_rowvec row(static_cast<arma::uword>(n_feeds), arma::fill::zeros);
  for (const QuantizedCoeff& c : coefficients) {
    if (c.feed >= n_feeds)
      throw std::invalid_argument("CsitReport::to_row: feed index out of range");
    row(c.feed) = scale * c.value();
  }
  return row;
}

std::vector<std::uint8_t> encode_report(const arma::cx_rowvec& sparse_row,
                                        std::uint32_t user_id,
                                        double report_time_s) {
  if (report_time_s < 0.0)
    throw std::invalid_argument("encode_report: report_time_s must be >= 0");
  double max_mag = 0.0;
  for (arma::uword n = 0; n < sparse_row.n_elem; ++n)
    max_mag = std::max(max_mag, std::abs(sparse_row(n)));

  CsitReport report;
  report.user_id = user_id;
  report.report_time_s = report_time_s;
  if (max_mag > 0.0) {
    for (arma::uword n = 0; n < sparse_row.n_elem; ++n) {
      const std::complex<double> x = sparse_row(n);
      const double mag = std::abs(x);
      if (mag == 0.0) continue;
      const double rel_db = -20.0 * std::log10(mag / max_mag);
      if (rel_db > kReportAmpFloorDb) continue;  // reported as zero
      QuantizedCoeff c;
      c.feed = static_cast<std::uint16_t>(n);
      c.amp_code = static_cast<std::uint8_t>(
          std::min<long>(std::lround(rel_db / kReportAmpStepDb), kMaxAmpCode));
      c.phase_code = quantize_phase(std::arg(x));
      report.coefficients.push_back(c);
    }
  }
  return encode_report(report);
}

std::vector<std::uint8_t> encode_report(const CsitReport& report) {
  if (report.coefficients.size() > 255)
    throw std::invalid_argument("encode_report: more than 255 coefficients");
  std::vector<std::uint8_t> out;
  out.reserve(kReportHeaderBytes + kReportCoeffBytes * report.coefficients.size());
  out.push_back(kMagic0);
  out.push_back(kMagic1);
  out.push_back(kVersion);
  put_u32(out, report.user_id);
  put_u64(out, static_cast<std::uint64_t>(std::llround(report.report_time_s * 1000.0)));
  out.push_back(static_cast<std::uint8_t>(report.coefficients.size()));
  for (const QuantizedCoeff& c : report.coefficients) {
    put_u16(out, c.feed);
    out.push_back(c.amp_code);
    out.push_back(c.phase_code);
  }
  return out;
}

CsitReport decode_report(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kReportHeaderBytes)
    throw MalformedMessage("truncated header", bytes.size());
  if (bytes[0] != kMagic0 || bytes[1] != kMagic1)
    throw MalformedMessage("bad magic", bytes[0] == kMagic0 ? 1 : 0);
  if (bytes[2] != kVersion) throw MalformedMessage("unsupported version", 2);

  CsitReport report;
  report.user_id = static_cast<std::uint32_t>(read_be(bytes, 3, 4));
  report.report_time_s = static_cast<double>(read_be(bytes, 7, 8)) / 1000.0;
  report.applied_time_s = report.report_time_s + 0.5;
  const std::size_t count = bytes[15];

  const std::size_t expected = kReportHeaderBytes + kReportCoeffBytes * count;
  if (bytes.size() < expected)
    throw MalformedMessage("truncated coefficient list", bytes.size());
  if (bytes.size() > expected)
    throw MalformedMessage("trailing bytes after message", expected);

  std::vector<bool> seen(65536, false);
  report.coefficients.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = kReportHeaderBytes + kReportCoeffBytes * i;
    QuantizedCoeff c;
    c.feed = static_cast<std::uint16_t>(read_be(bytes, at, 2));
    c.amp_code = bytes[at + 2];
    c.phase_code = bytes[at + 3];
    if (c.amp_code != kAmpBelowFloor && c.amp_code > kMaxAmpCode)
      throw MalformedMessage("amplitude code out of range", at + 2);
    if (seen[c.feed]) throw MalformedMessage("duplicate feed index", at);
    seen[c.feed] = true;
    report.coefficients.push_back(c);
  }
  return report;
}

std::vector<std::int8_t> hadamard_sosf(int order, int beam_id) {
  if (order < 2 || order > 256 || (order & (order - 1)) != 0)
    throw std::invalid_argument(
        "hadamard_sosf: order must be a power of two in [2, 256]");
  if (beam_id < 0) throw std::invalid_argument("hadamard_sosf: beam_id must be >= 0");
  const unsigned row = static_cast<unsigned>(beam_id % order);
  std::vector<std::int8_t> seq(static_cast<std::size_t>(order));
  for (unsigned j = 0; j < static_cast<unsigned>(order); ++j)
    seq[j] = (std::popcount(row & j) % 2 == 0) ? 1 : -1;
  return seq;
}

FeedbackPipeline::FeedbackPipeline(ChannelSource source, FeedbackParams params,
                                   std::uint64_t seed)
    : source_(std::move(source)), params_(params), seed_(seed) {
  if (!source_) throw std::invalid_argument("feedback: null channel source");
  if (params_.cadence_s < 0.5)
    throw std::invalid_argument(
        "feedback: cadence_s must be >= 0.5 s (at most one report every 500 ms)");
  if (params_.delay_s < 0.5 || params_.delay_s > 0.6)
    throw std::invalid_argument("feedback: delay_s must be in [0.5, 0.6] s");
  if (params_.phase_sigma_deg < 0.0)
    throw std::invalid_argument("feedback: phase_sigma_deg must be >= 0");
  if (params_.m != 16 && params_.m != 32)
    throw std::invalid_argument("feedback: m must be 16 or 32");
}

ReportedChannelMatrix FeedbackPipeline::reported_at(double t_seconds) const {
  if (t_seconds < params_.delay_s)
    throw std::invalid_argument("feedback: no report available before delay_s");
  const auto report_index =
      static_cast<std::uint64_t>(std::floor((t_seconds - params_.delay_s) / params_.cadence_s));
  const double report_time = static_cast<double>(report_index) * params_.cadence_s;

  Rng rng(derive_seed(seed_, report_index));
  const ChannelMatrix truth = source_(report_time);
  const arma::cx_mat degraded = degrade_csit(truth.entries, params_.phase_sigma_deg, rng);

  ReportedChannelMatrix out;
  out.report_time_s = report_time;
  out.staleness_s = t_seconds - report_time;
  out.entries.set_size(degraded.n_rows, degraded.n_cols);
  const int n_feeds = static_cast<int>(degraded.n_cols);
  for (arma::uword k = 0; k < degraded.n_rows; ++k) {
    const arma::cx_rowvec selected = select_strongest(degraded.row(k), params_.m);
    if (!params_.quantize) {
      out.entries.row(k) = selected;
      continue;
    }
    double max_mag = 0.0;
    for (arma::uword n = 0; n < selected.n_elem; ++n)
      max_mag = std::max(max_mag, std::abs(selected(n)));
    if (max_mag == 0.0) {
      out.entries.row(k).zeros();
      continue;
    }
    // The channel magnitude is slow and assumed tracked at the gateway; the
    // wire format carries amplitudes relative to the row max, so the row max
    // magnitude re-anchors the absolute scale.
    const auto bytes = encode_report(selected, static_cast<std::uint32_t>(k), report_time);
    const CsitReport report = decode_report(bytes);
    out.entries.row(k) = report.to_row(n_feeds, max_mag);
  }
  return out;
}

}  // namespace mbsim
