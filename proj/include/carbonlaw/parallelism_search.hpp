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

#include <functional>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "carbonlaw/hardware_catalog.hpp"
#include "carbonlaw/numeric.hpp"
#include "carbonlaw/perf_model.hpp"
#include "carbonlaw/scaling_laws.hpp"

namespace carbonlaw {

struct SearchConfig {
  double deadline_s = 90.0 * kSecondsPerDay;
  Count n_gpu_cap = 0;  // 0 selects 2^50 * E
  Count max_triples_per_count = 1'000'000;
  PerfConfig perf;
};

struct ParallelismPlan {
  Count n_gpu = 0;
  ParallelLayout layout;
  double duration_s = 0.0;  // whole training run
  double utilization = 0.0;
  MemoryFootprint memory;
  StepTimeBreakdown step;
};

struct Triple {
  Count tp = 1;
  Count dp = 1;
  Count pp = 1;
  bool operator==(const Triple&) const = default;
};

/// One row of the candidate diagnostics stream.
struct CandidateRecord {
  Count n_gpu = 0;
  Count tp = 0;
  Count dp = 0;
  Count pp = 0;
  Count ep = 0;
  Count microbatch_tokens = 0;  // 0 when no microbatch was admissible
  double duration_s = 0.0;      // 0 when no microbatch was admissible
  bool feasible = false;
  std::string_view reject_reason;  // "", "divisibility", "pipeline_depth", "memory", "deadline"
};

using DiagnosticsSink = std::function<void(const CandidateRecord&)>;

/// CSV header and row writer for the diagnostics stream.
void write_candidate_header(std::ostream& os);
void write_candidate_row(std::ostream& os, const CandidateRecord& rec);

/// ceil(C / (T * peak)), optionally rounded up to a multiple of the expert count.
Count ideal_gpu_count(const ModelPoint& point, const GpuSpec& gpu, double deadline_s,
                      bool round_to_experts = true);

/// Every ordered (tp, dp, pp) with tp * dp * pp == q, sorted by (tp, pp, dp).
std::vector<Triple> factorize_triples(Count q);

/// 4*d^2 % tp == 0, critical_batch % dp == 0, L % pp == 0.
bool satisfies_divisibility(const ModelPoint& point, const Triple& t);

/// Strict total order used for every tie-break: duration, n_gpu, tp, pp, dp,
/// then larger microbatch first.
bool plan_less(const ParallelismPlan& a, const ParallelismPlan& b);

/// Best plan for one triple (ep = E): the microbatch minimizing duration among
/// divisors of the per-replica batch with m >= pp that fit in HBM. Returns
/// nullopt and sets `reason` when no microbatch is admissible.
std::optional<ParallelismPlan> best_plan_for_triple(const ModelPoint& point, const GpuSpec& gpu,
                                                    const Triple& t, const SearchConfig& cfg,
                                                    std::string_view* reason = nullptr);

/// All memory-feasible plans (one per valid triple) at a GPU count, sorted by plan_less.
std::vector<ParallelismPlan> feasible_plans_at(const ModelPoint& point, const GpuSpec& gpu,
                                               Count n_gpu, const SearchConfig& cfg);

/// Minimum GPU count (a multiple of E) whose best plan finishes within the
/// deadline, and that plan. Throws InfeasibleError when the cap is reached.
ParallelismPlan search(const ModelPoint& point, const GpuSpec& gpu, const SearchConfig& cfg = {},
                       const DiagnosticsSink& sink = {});

/// Lower median by duration of a set of plans. Throws std::invalid_argument if empty.
ParallelismPlan select_median(std::vector<ParallelismPlan> plans);

/// Median-duration plan among the feasible plans at the optimal GPU count.
ParallelismPlan median_latency_plan(const ModelPoint& point, const GpuSpec& gpu,
                                    const SearchConfig& cfg = {});

/// Throws std::logic_error naming the first violated plan invariant.
void check_plan_invariants(const ModelPoint& point, const GpuSpec& gpu,
                           const ParallelismPlan& plan);

}  // namespace carbonlaw
