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

#include "carbonlaw/parallelism_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

namespace carbonlaw {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Slack on the pruning bound so rounding in the bound never discards a tie.
constexpr double kPruneSlack = 1e-9;

__extension__ using U128 = unsigned __int128;

struct Evaluation {
  std::optional<ParallelismPlan> plan;
  std::string_view reason;
};

// Duration no microbatch choice can beat for this triple: ideal compute plus
// the microbatch-independent communication totals.
double duration_lower_bound(const ModelPoint& point, const GpuSpec& gpu, const Triple& t,
                            const SearchConfig& cfg) {
  const PerfConfig& perf = cfg.perf;
  const double per_replica = static_cast<double>(point.critical_batch_tokens / t.dp);
  const double d = static_cast<double>(point.d_model);
  const double stage_layers = static_cast<double>(point.n_layers / t.pp);
  const Count n_gpu = t.tp * t.dp * t.pp * point.n_experts;

  const double ideal = flops_per_step(point) / (static_cast<double>(n_gpu) * gpu.peak_flops);
  const double tp_total = 4.0 * stage_layers *
                          allreduce_time(2.0 * per_replica * d * 2.0 * perf.comm_factor,
                                         gpu.nvlink_bandwidth, t.tp);
  const double ep_total = 2.0 * stage_layers *
                          alltoall_time(per_replica * d * 2.0 * perf.comm_factor,
                                        gpu.internode_bandwidth, point.n_experts);
  ParallelLayout layout{t.tp, t.dp, t.pp, point.n_experts, 1, 1};
  const double dp_full = allreduce_time(2.0 * params_per_rank(point, layout) * perf.comm_factor,
                                        gpu.internode_bandwidth, t.dp);
  const double step = ideal + tp_total + ep_total + (1.0 - perf.dp_overlap) * dp_full;
  return step * training_steps(point);
}

Evaluation evaluate_triple(const ModelPoint& point, const GpuSpec& gpu, const Triple& t,
                           const SearchConfig& cfg, const std::vector<Count>& batch_divisors,
                           double prune_above) {
  const Count per_replica = point.critical_batch_tokens / t.dp;
  if (per_replica < t.pp) return {std::nullopt, "pipeline_depth"};
  if (prune_above < kInf &&
      duration_lower_bound(point, gpu, t, cfg) * (1.0 - kPruneSlack) > prune_above) {
    return {std::nullopt, "pruned"};
  }

  const double steps = training_steps(point);
  const Count max_microbatch = per_replica / t.pp;
  std::optional<ParallelismPlan> best;
  ParallelLayout layout{t.tp, t.dp, t.pp, point.n_experts, 1, 1};
  for (Count mb : batch_divisors) {
    if (mb > max_microbatch) break;
    if (per_replica % mb != 0) continue;
    layout.microbatch_tokens = mb;
    layout.n_microbatches = per_replica / mb;
    const MemoryFootprint mem = memory_footprint(point, layout, cfg.perf);
    // Footprint grows with the microbatch, so nothing larger fits either.
    if (mem.total_bytes > gpu.hbm_capacity) break;
    ParallelismPlan plan;
    plan.n_gpu = layout.n_gpu();
    plan.layout = layout;
    plan.step = step_time(point, layout, gpu, cfg.perf);
    plan.duration_s = plan.step.total_s * steps;
    plan.utilization = utilization(point, layout, gpu, plan.step);
    plan.memory = mem;
    if (!best || plan_less(plan, *best)) best = std::move(plan);
  }
  if (!best) return {std::nullopt, "memory"};
  return {std::move(best), ""};
}

bool divides_four_square(Count tp, Count d_model) {
  const U128 four_sq = U128{4} * d_model * d_model;
  return four_sq % tp == 0;
}

void emit(const DiagnosticsSink& sink, Count n_gpu, const Triple& t, Count ep,
          const Evaluation& ev, double deadline) {
  CandidateRecord rec;
  rec.n_gpu = n_gpu;
  rec.tp = t.tp;
  rec.dp = t.dp;
  rec.pp = t.pp;
  rec.ep = ep;
  rec.reject_reason = ev.reason;
  if (ev.plan) {
    rec.microbatch_tokens = ev.plan->layout.microbatch_tokens;
    rec.duration_s = ev.plan->duration_s;
    rec.feasible = ev.plan->duration_s <= deadline;
    rec.reject_reason = rec.feasible ? "" : "deadline";
  }
  sink(rec);
}

}  // namespace

void write_candidate_header(std::ostream& os) {
  os << "n_gpu,n_tp,n_dp,n_pp,n_ep,microbatch_tokens,duration_s,feasible,reject_reason\n";
}

void write_candidate_row(std::ostream& os, const CandidateRecord& r) {
  os << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.n_gpu, r.tp, r.dp, r.pp, r.ep,
                    r.microbatch_tokens, r.duration_s, r.feasible ? 1 : 0, r.reject_reason);
}

Count ideal_gpu_count(const ModelPoint& point, const GpuSpec& gpu, double deadline_s,
                      bool round_to_experts) {
  if (!(deadline_s > 0)) throw std::invalid_argument("deadline must be positive");
  const double raw = std::ceil(point.compute / (deadline_s * gpu.peak_flops));
  if (!(raw < 1.8e19)) throw OverflowError("ideal GPU count exceeds uint64");
  const Count n = std::max<Count>(1, static_cast<Count>(raw));
  return round_to_experts ? round_up_to_multiple(n, std::max<Count>(1, point.n_experts)) : n;
}

std::vector<Triple> factorize_triples(Count q) {
  if (q == 0) throw std::invalid_argument("factorize_triples: q must be positive");
  const std::vector<Count> divs = divisors(q);
  std::vector<Triple> out;
  for (Count tp : divs) {
    const Count rest = q / tp;
    for (Count pp : divs) {
      if (pp > rest) break;
      if (rest % pp == 0) out.push_back({tp, rest / pp, pp});
    }
  }
  return out;
}

bool satisfies_divisibility(const ModelPoint& point, const Triple& t) {
  return t.tp > 0 && t.dp > 0 && t.pp > 0 && divides_four_square(t.tp, point.d_model) &&
         point.critical_batch_tokens % t.dp == 0 && point.n_layers % t.pp == 0;
}

bool plan_less(const ParallelismPlan& a, const ParallelismPlan& b) {
  // Larger microbatch wins the final tie, hence the swapped operands.
  return std::tie(a.duration_s, a.n_gpu, a.layout.tp, a.layout.pp, a.layout.dp,
                  b.layout.microbatch_tokens) <
         std::tie(b.duration_s, b.n_gpu, b.layout.tp, b.layout.pp, b.layout.dp,
                  a.layout.microbatch_tokens);
}

std::optional<ParallelismPlan> best_plan_for_triple(const ModelPoint& point, const GpuSpec& gpu,
                                                    const Triple& t, const SearchConfig& cfg,
                                                    std::string_view* reason) {
  if (!satisfies_divisibility(point, t)) {
    if (reason) *reason = "divisibility";
    return std::nullopt;
  }
  Evaluation ev =
      evaluate_triple(point, gpu, t, cfg, divisors(point.critical_batch_tokens), kInf);
  if (reason) *reason = ev.reason;
  return std::move(ev.plan);
}

std::vector<ParallelismPlan> feasible_plans_at(const ModelPoint& point, const GpuSpec& gpu,
                                               Count n_gpu, const SearchConfig& cfg) {
  const Count ep = point.n_experts;
  if (n_gpu == 0 || n_gpu % ep != 0) {
    throw std::invalid_argument(
        fmt::format("GPU count {} is not a positive multiple of E={}", n_gpu, ep));
  }
  const std::vector<Count> batch_divs = divisors(point.critical_batch_tokens);
  std::vector<ParallelismPlan> out;
  for (const Triple& t : factorize_triples(n_gpu / ep)) {
    if (!satisfies_divisibility(point, t)) continue;
    Evaluation ev = evaluate_triple(point, gpu, t, cfg, batch_divs, kInf);
    if (ev.plan) out.push_back(std::move(*ev.plan));
  }
  std::sort(out.begin(), out.end(), plan_less);
  return out;
}

ParallelismPlan search(const ModelPoint& point, const GpuSpec& gpu, const SearchConfig& cfg,
                       const DiagnosticsSink& sink) {
  const Count ep = point.n_experts;
  const double deadline = cfg.deadline_s;
  const Count q_start = ideal_gpu_count(point, gpu, deadline, true) / ep;
  Count cap = cfg.n_gpu_cap;
  if (cap == 0) cap = try_mul(Count{1} << 50, ep).value_or(UINT64_MAX);
  const Count q_cap = cap / ep;

  const std::vector<Count> tp_divs = divisors_of_four_square(point.d_model);
  const std::vector<Count> pp_divs = divisors(point.n_layers);
  const std::vector<Count> dp_divs = divisors(point.critical_batch_tokens);

  struct Pair {
    Count tp;
    Count pp;
    Count product;
  };
  std::vector<Pair> pairs;
  for (Count tp : tp_divs) {
    for (Count pp : pp_divs) {
      auto prod = try_mul(tp, pp);
      if (prod && *prod <= q_cap) pairs.push_back({tp, pp, *prod});
    }
  }

  // k-way merge over (tp, pp) pairs, each walking its ascending dp list, yields
  // every divisibility-valid triple in ascending GPU count. Counts with no
  // valid triple are never produced, which is where the naive loop would only
  // find assertion failures.
  struct Cursor {
    Count q;
    std::size_t pair;
    std::size_t dp_index;
    bool operator>(const Cursor& o) const {
      return std::tie(q, pair) > std::tie(o.q, o.pair);
    }
  };
  std::priority_queue<Cursor, std::vector<Cursor>, std::greater<>> heap;
  auto push_from = [&](std::size_t pair, std::size_t dp_index) {
    if (dp_index >= dp_divs.size()) return;
    auto q = try_mul(pairs[pair].product, dp_divs[dp_index]);
    if (q && *q <= q_cap) heap.push({*q, pair, dp_index});
  };
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Count need = q_start / pairs[i].product + (q_start % pairs[i].product != 0 ? 1 : 0);
    const auto it = std::lower_bound(dp_divs.begin(), dp_divs.end(), need);
    push_from(i, static_cast<std::size_t>(it - dp_divs.begin()));
  }

  std::vector<Triple> group;
  while (!heap.empty()) {
    const Count q = heap.top().q;
    group.clear();
    while (!heap.empty() && heap.top().q == q) {
      const Cursor c = heap.top();
      heap.pop();
      group.push_back({pairs[c.pair].tp, dp_divs[c.dp_index], pairs[c.pair].pp});
      push_from(c.pair, c.dp_index + 1);
    }
    if (group.size() > cfg.max_triples_per_count) {
      throw Error(fmt::format("search: {} candidate triples at n_gpu={} exceeds the limit of {}",
                              group.size(), q * ep, cfg.max_triples_per_count));
    }
    std::sort(group.begin(), group.end(), [](const Triple& a, const Triple& b) {
      return std::tie(a.tp, a.pp, a.dp) < std::tie(b.tp, b.pp, b.dp);
    });

    const Count n_gpu = q * ep;
    std::optional<ParallelismPlan> best;
    std::vector<Evaluation> evaluations;
    for (const Triple& t : group) {
      const double bound = sink ? kInf : std::min(deadline, best ? best->duration_s : kInf);
      Evaluation ev = evaluate_triple(point, gpu, t, cfg, dp_divs, bound);
      if (ev.plan && (!best || plan_less(*ev.plan, *best))) best = ev.plan;
      if (sink) evaluations.push_back(std::move(ev));
    }

    if (sink) {
      std::size_t next = 0;
      for (const Triple& t : factorize_triples(q)) {
        if (next < group.size() && group[next] == t) {
          emit(sink, n_gpu, t, ep, evaluations[next], deadline);
          ++next;
        } else {
          emit(sink, n_gpu, t, ep, {std::nullopt, "divisibility"}, deadline);
        }
      }
    }

    if (best && best->duration_s <= deadline) {
      check_plan_invariants(point, gpu, *best);
      return *best;
    }
  }
  throw InfeasibleError(fmt::format(
      "no feasible parallelism plan for d_model={} on {} within {} s (GPU cap {})",
      point.d_model, gpu.name, deadline, cap));
}

ParallelismPlan select_median(std::vector<ParallelismPlan> plans) {
  if (plans.empty()) throw std::invalid_argument("select_median: no plans");
  std::sort(plans.begin(), plans.end(), plan_less);
  return plans[(plans.size() - 1) / 2];
}

ParallelismPlan median_latency_plan(const ModelPoint& point, const GpuSpec& gpu,
                                    const SearchConfig& cfg) {
  const ParallelismPlan optimal = search(point, gpu, cfg);
  return select_median(feasible_plans_at(point, gpu, optimal.n_gpu, cfg));
}

void check_plan_invariants(const ModelPoint& point, const GpuSpec& gpu,
                           const ParallelismPlan& plan) {
  const ParallelLayout& l = plan.layout;
  auto fail = [&](const char* what) {
    throw std::logic_error(fmt::format("plan invariant violated: {} (n_gpu={}, tp={}, dp={}, "
                                       "pp={}, ep={}, mb={})",
                                       what, plan.n_gpu, l.tp, l.dp, l.pp, l.ep,
                                       l.microbatch_tokens));
  };
  const U128 product = U128{l.tp} * l.dp * l.pp * l.ep;
  if (product != plan.n_gpu) fail("n_gpu != tp*dp*pp*ep");
  if (l.ep != point.n_experts) fail("ep != E");
  if (!satisfies_divisibility(point, {l.tp, l.dp, l.pp})) fail("divisibility");
  if (U128{l.n_microbatches} * l.microbatch_tokens * l.dp != point.critical_batch_tokens) {
    fail("m * microbatch * dp != critical batch");
  }
  if (l.n_microbatches < l.pp) fail("fewer microbatches than pipeline stages");
  if (plan.memory.total_bytes > gpu.hbm_capacity) fail("memory exceeds HBM capacity");
  if (!(plan.duration_s > 0)) fail("non-positive duration");
  if (!(plan.utilization > 0 && plan.utilization <= 1)) fail("utilization outside (0, 1]");
}

}  // namespace carbonlaw
