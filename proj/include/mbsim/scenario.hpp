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

#ifndef MBSIM_SCENARIO_HPP
#define MBSIM_SCENARIO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mbsim/channel.hpp"
#include "mbsim/csit.hpp"
#include "mbsim/geometry.hpp"
#include "mbsim/link_eval.hpp"
#include "mbsim/precoding.hpp"

namespace mbsim {

enum class PrecoderKind { mmse, block_svd, frame_based, four_color };
enum class SchedulerKind { random, guc, fbc, perfect };
enum class CsitCondition { perfect, degraded };

std::string to_string(PrecoderKind k);
std::string to_string(SchedulerKind k);
std::string to_string(CsitCondition c);
PrecoderKind precoder_from_string(const std::string& s);
SchedulerKind scheduler_from_string(const std::string& s);
CsitCondition csit_condition_from_string(const std::string& s);

// Full description of one Monte Carlo campaign. Parsed from flat
// "section.key=value" text; see the README for the schema.
struct ScenarioConfig {
  GeometryConfig geometry;

  double ref_snr_db = 15.0;
  double bandwidth_hz = 500e6;
  double total_power = 0.0;  // 0 = auto: one power unit per beam
  SeLaw se_law = SeLaw::shannon();
  double mmse_alpha = 0.0;   // 0 = auto: G / P

  int users_per_beam = 4;
  RainParams rain;
  PhaseParams phase;

  FeedbackParams csit;
  double eval_time_s = 0.0;  // 0 = auto: delay + cadence / 2

  std::vector<PrecoderKind> precoders = {PrecoderKind::mmse, PrecoderKind::block_svd,
                                         PrecoderKind::frame_based};
  std::vector<SchedulerKind> schedulers = {SchedulerKind::random};
  std::vector<int> rho_values = {1, 2};
  std::vector<CsitCondition> csit_conditions = {CsitCondition::perfect};

  FrameBasedOptions solver;

  int gateway_count = 1;
  std::vector<int> gateway_partition;  // empty = auto
  double gateway_edge_factor = 2.2;
  // Test hook: route even a single gateway through the block-diagonal
  // cluster path. Not a config key.
  bool force_cluster_path = false;

  int runs = 100;
  std::uint64_t seed = 1;

  static ScenarioConfig from_text(std::string_view text, const std::string& origin);
  static ScenarioConfig from_file(const std::string& path);
  void validate() const;
  int n_beams() const { return 1 + 3 * geometry.rings * (geometry.rings + 1); }
};

struct CellKey {
  PrecoderKind precoder = PrecoderKind::mmse;
  SchedulerKind scheduler = SchedulerKind::random;
  int rho = 1;
  CsitCondition csit = CsitCondition::perfect;

  bool operator==(const CellKey&) const = default;
};

struct ResultRow {
  int run = 0;
  PrecoderKind precoder = PrecoderKind::mmse;
  SchedulerKind scheduler = SchedulerKind::random;
  int rho = 1;
  CsitCondition csit = CsitCondition::perfect;
  int beam = 0;
  double throughput_bps = 0.0;  // NaN marks a failed cell
};

struct CellFailure {
  int run = 0;
  CellKey cell;
  std::string message;
};

struct CellStats {
  double mean = 0.0;
  double stddev = 0.0;
  double ci95_half = 0.0;
  int n = 0;
};

struct ScenarioResult {
  ScenarioConfig config;
  int n_beams = 0;
  std::vector<ResultRow> rows;        // runs x cells x beams, in emit order
  std::vector<CellFailure> failures;

  std::vector<CellKey> cells() const;
  // Mean over beams, one value per run; NaN for failed cells.
  std::vector<double> run_means(const CellKey& cell) const;
  // Mean over runs, one value per beam.
  std::vector<double> beam_means(const CellKey& cell) const;
  CellStats stats(const CellKey& cell) const;
};

// Runs the whole grid. Deterministic for a given config and seed regardless
// of `workers`: every run derives its own child seed and the rows are
// merged in (run, cell, beam) order.
ScenarioResult run_scenario(const ScenarioConfig& config, int workers = 1);

// CSV with header run,precoder,scheduler,users_per_frame,csit,beam,throughput_bps.
// UTF-8, LF line endings, %.17g numbers (lossless roundtrip), "nan" for
// failed cells.
void emit_csv(const ScenarioResult& result, std::ostream& out);
std::string csv_string(const ScenarioResult& result);
void emit_csv_file(const ScenarioResult& result, const std::string& path);

// Inverse of emit_csv for the row fields.
std::vector<ResultRow> parse_csv(std::istream& in);

}  // namespace mbsim

#endif  // MBSIM_SCENARIO_HPP
