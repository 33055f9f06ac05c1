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

#ifndef MBSIM_CONFIG_HPP
#define MBSIM_CONFIG_HPP

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mbsim {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Flat "section.key=value" text. '#' starts a comment, blank lines are
// skipped, duplicate keys are rejected. Keys are tracked on access so a
// config with unknown (misspelled) keys can be rejected as a whole.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, const std::string& origin);
  static KeyValueConfig from_file(const std::string& path);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;
  std::vector<int> get_int_list(const std::string& key,
                                const std::vector<int>& fallback) const;

  // Throws ConfigError if any stored key was never accessed.
  void require_all_consumed() const;

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

}  // namespace mbsim

#endif  // MBSIM_CONFIG_HPP
