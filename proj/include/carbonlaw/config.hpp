/* Copyright 2026 The carbonlaw Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "carbonlaw/hardware_catalog.hpp"
#include "carbonlaw/scaling_laws.hpp"
#include "carbonlaw/scenarios.hpp"

namespace carbonlaw {

// Run configuration: `key = value` lines, `#` comments. Every key has a
// default; see RunConfig::keys() or the config.txt written by `carbonlaw sweep`.

/// "90 days", "3 months", "1.5h", "3600" (seconds). A month is 30 days and a
/// year 365 days. Throws ConfigError.
double parse_duration(std::string_view text);

/// Everything a run needs, validated.
struct ResolvedConfig {
  std::vector<Count> d_models;
  Count seq_len = 2048;
  GpuSpec gpu;
  RunContext ctx;
  std::vector<ScenarioConfig> scenarios;
  bool ideal_curve = false;
  std::string output_dir;

  std::vector<ModelPoint> points() const;
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

class RunConfig {
 public:
  static const std::vector<ConfigKey>& keys();

  /// Records an override. Throws ConfigError for unknown keys.
  void set(std::string_view key, std::string_view value);

  /// Parses a config stream; `source` names it in error messages.
  void load(std::istream& in, std::string_view source);
  void load_file(const std::string& path);

  /// "key=value" as given on the command line.
  void set_assignment(std::string_view assignment);

  std::string value(std::string_view key) const;
  bool overridden(std::string_view key) const;

  /// One "key = value" line per result-affecting key in registry order
  /// (workers and output.dir are left out).
  std::string canonical() const;

  /// Every key with a default/override marker and its help text.
  std::string provenance() const;

  /// Short stable hash of canonical().
  std::string digest() const;

  /// Applies every key. Throws ConfigError naming the offending key.
  ResolvedConfig resolve() const;

 private:
  std::map<std::string, std::string, std::less<>> overrides_;
};

/// Reads a GPU definition (same `key = value` syntax). Keys are the GpuSpec
/// field names; `base = <builtin>` fills any field left out.
GpuSpec load_gpu_file(const std::string& path);
GpuSpec parse_gpu(std::istream& in, std::string_view source);

/// Parses a scenario token: `toggle[+toggle...][@GPU[+Ny]]`. Toggles:
/// default, no-embodied, static-swap, ideal, median, aggressive-batch,
/// sharding, eviction. GPU defaults to `configured`.
ScenarioConfig parse_scenario(std::string_view token, const GpuSpec& configured,
                              double aggressive_beta, double sharding, double eviction,
                              double base_beta);

}  // namespace carbonlaw
