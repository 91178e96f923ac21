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

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "carbonlaw/carbon_model.hpp"
#include "carbonlaw/hardware_catalog.hpp"
#include "carbonlaw/parallelism_search.hpp"
#include "carbonlaw/scaling_laws.hpp"

namespace carbonlaw {

constexpr double kAggressiveBatchExponent = 0.33;
constexpr double kFlexibleShardingFactor = 0.8;
constexpr double kDynamicEvictionFactor = 0.8;

/// One experiment family. `gpu` is the unprojected part; `years` projects it.
struct ScenarioConfig {
  std::string name = "default";
  GpuSpec gpu;
  double years = 0.0;
  bool embodied_enabled = true;
  bool static_swap = false;  // static_fraction -> 1 - static_fraction
  bool ideal_mode = false;
  bool median_parallelism = false;
  double batch_exponent = 1.0 / 6.0;
  double sharding_comm_factor = 1.0;
  double eviction_mem_factor = 1.0;
};

void validate(const ScenarioConfig& scenario);

/// Shared model, search and carbon settings for every scenario of a run.
struct RunContext {
  ScalingConfig law;
  SearchConfig search;
  CarbonParams carbon;
  ScalingRates rates;
  unsigned workers = 1;
};

/// The GPU a scenario actually runs on: projected, then static-swapped.
GpuSpec scenario_gpu(const ScenarioConfig& scenario, const ScalingRates& rates = {});

struct ScenarioRow {
  ModelPoint point;                     // with the scenario's critical batch
  std::optional<ParallelismPlan> plan;  // empty in ideal mode and on failure
  CarbonReport carbon;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

struct ScenarioResult {
  std::string name;
  GpuSpec gpu;
  std::vector<ScenarioRow> rows;  // same order as the input sweep

  std::size_t failures() const;
};

/// Evaluates every point. Infeasible points keep their row with a status
/// message and zero carbon; any other error is rethrown.
ScenarioResult run_scenario(std::span<const ModelPoint> sweep, const ScenarioConfig& scenario,
                            const RunContext& ctx);

struct PowerLawFit {
  double k = 0.0;
  double alpha_exp = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
  bool degenerate = false;  // ln(loss) has no variance
};

/// loss = k * CO^-alpha_exp by least squares on (ln CO, ln loss). Needs at
/// least 3 points, all positive.
PowerLawFit fit_power_law(std::span<const std::pair<double, double>> carbon_loss);

/// Fit over the rows that succeeded.
PowerLawFit fit_scenario(const ScenarioResult& result);

/// Per-GPU view of one row.
struct GenerationBreakdown {
  std::string gpu;
  Count n_gpu = 0;
  double total_t = 0.0;
  double per_gpu_t = 0.0;
  double embodied_share = 0.0;
};

GenerationBreakdown breakdown_of(const ScenarioResult& result, std::size_t row);

/// Default scenario per GPU, same sweep.
std::vector<ScenarioResult> compare_generations(std::span<const ModelPoint> sweep,
                                                std::span<const GpuSpec> gpus,
                                                const RunContext& ctx);

/// `base` projected by each entry of `years`.
std::vector<ScenarioResult> compare_futures(std::span<const ModelPoint> sweep,
                                            const ScenarioConfig& base,
                                            std::span<const double> years, const RunContext& ctx);

/// "# carbonlaw <version> config-digest <digest>"
std::string output_header(std::string_view digest);

void write_scenario_csv(std::ostream& os, const ScenarioResult& result, std::string_view digest);

void write_fits_csv(std::ostream& os,
                    std::span<const std::pair<std::string, PowerLawFit>> fits,
                    std::string_view digest);

}  // namespace carbonlaw
