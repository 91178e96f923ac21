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

#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include "carbonlaw/parallelism_search.hpp"
#include "oracle/brute_force_search.hpp"

using namespace carbonlaw;

namespace {

ModelPoint tiny_point() {
  ModelPoint p;
  p.d_model = 64;
  p.d_ff = 256;
  p.n_layers = 4;
  p.n_experts = 1;
  p.seq_len = 256;
  p.n_params = p.n_params_active = 4 * (4 * 64 * 64 + 2 * 64 * 256);
  p.dataset_tokens = 20 * p.n_params_active;
  p.compute = 6.0 * double(p.n_params_active) * double(p.dataset_tokens);
  p.critical_batch_tokens = 1024;
  p.predicted_loss = 3.0;
  return p;
}

}  // namespace

TEST_CASE("ideal gpu count") {
  ModelPoint p = tiny_point();
  GpuSpec g = builtin_gpu("A100");
  const double t = p.compute / g.peak_flops;
  CHECK(ideal_gpu_count(p, g, t) == 1);
  p.n_experts = 4;
  CHECK(ideal_gpu_count(p, g, t / 10) == 12);
  CHECK(ideal_gpu_count(p, g, t / 10, false) == 10);
  p.n_experts = 1;
  CHECK(ideal_gpu_count(p, g, t / 3 * (1 - 1e-9), false) == 4);
}

TEST_CASE("factorize triples") {
  CHECK(factorize_triples(1) == std::vector<Triple>{{1, 1, 1}});
  const auto four = factorize_triples(4);
  CHECK(four.size() == 6);
  std::set<std::tuple<Count, Count, Count>> seen;
  for (const Triple& t : four) {
    CHECK(t.tp * t.dp * t.pp == 4);
    seen.insert({t.tp, t.dp, t.pp});
  }
  CHECK(seen.size() == 6);
  CHECK(std::is_sorted(four.begin(), four.end(), [](const Triple& a, const Triple& b) {
    return std::tie(a.tp, a.pp, a.dp) < std::tie(b.tp, b.pp, b.dp);
  }));
  CHECK(factorize_triples(13).size() == 3);
  for (Count q = 1; q <= 96; ++q) {
    std::size_t brute = 0;
    for (Count a = 1; a <= q; ++a) {
      for (Count b = 1; b <= q; ++b) {
        if (q % (a * b) == 0) ++brute;
      }
    }
    CHECK(factorize_triples(q).size() == brute);
  }
  // Count of ordered triples is the product of C(e + 2, 2) over prime powers.
  CHECK(factorize_triples(360).size() == 10 * 6 * 3);
}

TEST_CASE("tiny model fits one gpu") {
  const ModelPoint p = tiny_point();
  const GpuSpec g = builtin_gpu("B100");
  SearchConfig cfg;
  cfg.deadline_s = 1e6;
  const ParallelismPlan plan = search(p, g, cfg);
  CHECK(plan.n_gpu == 1);
  CHECK(plan.layout.tp == 1);
  CHECK(plan.layout.dp == 1);
  CHECK(plan.layout.pp == 1);
  CHECK(plan.layout.ep == 1);
  CHECK(plan.duration_s <= cfg.deadline_s);
}

TEST_CASE("memory that never fits is infeasible") {
  const ModelPoint p = tiny_point();
  GpuSpec g = builtin_gpu("B100");
  g.hbm_capacity = 10;
  SearchConfig cfg;
  cfg.deadline_s = 1e6;
  cfg.n_gpu_cap = 256;
  CHECK_THROWS_AS(search(p, g, cfg), InfeasibleError);
}

TEST_CASE("deadline too tight at the cap") {
  const ModelPoint p = tiny_point();
  const GpuSpec g = builtin_gpu("B100");
  SearchConfig cfg;
  cfg.deadline_s = 1e-6;
  cfg.n_gpu_cap = 64;
  CHECK_THROWS_AS(search(p, g, cfg), InfeasibleError);
}

TEST_CASE("search matches the exhaustive oracle") {
  int found = 0;
  for (const auto& s : oracle::synthetic_instances(120, 0x5eed)) {
    const auto expected = oracle::brute_force_search(s.point, s.gpu, s.cfg, 64);
    std::optional<ParallelismPlan> got;
    try {
      got = search(s.point, s.gpu, s.cfg);
    } catch (const InfeasibleError&) {
    }
    REQUIRE(bool(expected) == bool(got));
    if (!expected) continue;
    ++found;
    CHECK(got->n_gpu == expected->n_gpu);
    CHECK(got->layout == expected->layout);
    CHECK(got->duration_s == expected->duration_s);
    CHECK_NOTHROW(check_plan_invariants(s.point, s.gpu, *got));
  }
  CHECK(found >= 50);
}

TEST_CASE("no smaller gpu count meets the deadline") {
  for (const auto& s : oracle::synthetic_instances(40, 99)) {
    std::optional<ParallelismPlan> plan;
    try {
      plan = search(s.point, s.gpu, s.cfg);
    } catch (const InfeasibleError&) {
      continue;
    }
    const Count e = s.point.n_experts;
    for (Count n = e; n < plan->n_gpu; n += e) {
      const auto durations = oracle::brute_force_durations_at(s.point, s.gpu, s.cfg, n);
      for (double d : durations) CHECK(d > s.cfg.deadline_s);
    }
  }
}

TEST_CASE("median plan") {
  auto make = [](double duration, Count tp) {
    ParallelismPlan p;
    p.duration_s = duration;
    p.layout.tp = tp;
    return p;
  };
  CHECK(select_median({make(5, 1)}).duration_s == 5);
  CHECK(select_median({make(9, 1), make(1, 2), make(2, 4)}).duration_s == 2);
  CHECK(select_median({make(4, 1), make(1, 2), make(3, 4), make(2, 8)}).duration_s == 2);
  CHECK_THROWS_AS(select_median({}), std::invalid_argument);
}

TEST_CASE("median plan against sorted brute force durations") {
  int checked = 0;
  for (const auto& s : oracle::synthetic_instances(30, 4242)) {
    std::optional<ParallelismPlan> optimal;
    try {
      optimal = search(s.point, s.gpu, s.cfg);
    } catch (const InfeasibleError&) {
      continue;
    }
    auto durations = oracle::brute_force_durations_at(s.point, s.gpu, s.cfg, optimal->n_gpu);
    std::sort(durations.begin(), durations.end());
    const ParallelismPlan median = median_latency_plan(s.point, s.gpu, s.cfg);
    CHECK(median.n_gpu == optimal->n_gpu);
    CHECK(median.duration_s == durations[(durations.size() - 1) / 2]);
    CHECK(median.duration_s >= optimal->duration_s);
    ++checked;
  }
  CHECK(checked > 5);
}

TEST_CASE("diagnostics stream") {
  const auto inst = oracle::synthetic_instances(10, 1234);
  for (const auto& s : inst) {
    std::vector<CandidateRecord> rows;
    std::optional<ParallelismPlan> plan;
    try {
      plan = search(s.point, s.gpu, s.cfg, [&](const CandidateRecord& r) { rows.push_back(r); });
    } catch (const InfeasibleError&) {
    }
    // Every triple of every visited count, divisible or not.
    std::size_t expected = 0;
    std::set<Count> counts;
    for (const auto& r : rows) counts.insert(r.n_gpu);
    for (Count n : counts) expected += factorize_triples(n / s.point.n_experts).size();
    CHECK(rows.size() == expected);
    for (const auto& r : rows) {
      if (r.feasible) {
        CHECK(r.reject_reason.empty());
        CHECK(r.duration_s <= s.cfg.deadline_s);
      } else {
        const std::set<std::string_view> reasons{"divisibility", "pipeline_depth", "memory",
                                                 "deadline"};
        CHECK(reasons.count(r.reject_reason) == 1);
      }
    }
    if (plan) {
      CHECK(counts.count(plan->n_gpu) == 1);
      CHECK(*counts.rbegin() == plan->n_gpu);
      // Running with a sink does not change the answer.
      CHECK(search(s.point, s.gpu, s.cfg).layout == plan->layout);
    }
  }
  std::ostringstream os;
  write_candidate_header(os);
  write_candidate_row(os, {8, 2, 2, 2, 1, 512, 12.5, true, ""});
  CHECK(os.str() ==
        "n_gpu,n_tp,n_dp,n_pp,n_ep,microbatch_tokens,duration_s,feasible,reject_reason\n"
        "8,2,2,2,1,512,12.5,1,\n");
}

TEST_CASE("repeated searches are identical") {
  const ModelPoint p = make_point(6144, 2048);
  const GpuSpec g = builtin_gpu("H100");
  const ParallelismPlan a = search(p, g);
  const ParallelismPlan b = search(p, g);
  CHECK(a.layout == b.layout);
  CHECK(a.duration_s == b.duration_s);
  CHECK(a.duration_s <= 90 * kSecondsPerDay);
  CHECK(a.n_gpu % p.n_experts == 0);
  CHECK_NOTHROW(check_plan_invariants(p, g, a));
}

TEST_CASE("plan invariants are enforced") {
  const ModelPoint p = make_point(6144, 2048);
  const GpuSpec g = builtin_gpu("H100");
  ParallelismPlan plan = search(p, g);
  ParallelismPlan broken = plan;
  broken.n_gpu += 1;
  CHECK_THROWS_AS(check_plan_invariants(p, g, broken), std::logic_error);
  broken = plan;
  broken.layout.n_microbatches += 1;
  CHECK_THROWS_AS(check_plan_invariants(p, g, broken), std::logic_error);
}
