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

#include <cmath>

#include "carbonlaw/carbon_model.hpp"
#include "carbonlaw/hardware_catalog.hpp"
#include "carbonlaw/parallelism_search.hpp"
#include "carbonlaw/scaling_laws.hpp"

using namespace carbonlaw;

namespace {

ModelPoint point_with_compute(double c) {
  ModelPoint p = make_point(6144, 2048);
  p.compute = c;
  return p;
}

}  // namespace

TEST_CASE("one A100 hour at full utilization") {
  const CarbonParams params;
  const OperationalCarbon op = operational_carbon({1, 3600.0, 1.0}, builtin_gpu("A100"), params);
  CHECK(op.gpu_t * 1e6 == doctest::Approx(55.88).epsilon(1e-9));
}

TEST_CASE("zero duration is zero carbon") {
  const CarbonReport r = total_carbon({64, 0.0, 0.5}, builtin_gpu("H100"), {});
  CHECK(r.total_t == 0.0);
  CHECK(r.op_gpu_t == 0.0);
  CHECK(r.op_other_t == 0.0);
  CHECK(r.embodied_t() == 0.0);
}

TEST_CASE("static power share") {
  const CarbonParams params;
  const GpuSpec g = builtin_gpu("B100");
  const double drop = 1.0 - gpu_power_w(g, params, 1.0 - 0.3722) / gpu_power_w(g, params, 1.0);
  CHECK(std::abs(drop - 0.0587) < 0.001);
}

TEST_CASE("embodied over one full lifetime") {
  const CarbonParams params;
  const GpuSpec b100 = builtin_gpu("B100");
  const EmbodiedCarbon e = embodied_carbon({1, params.lifetime_s, 1.0}, b100, params);
  CHECK(e.gpu_logic_t * 1e3 == doctest::Approx(33.6).epsilon(1e-9));
  CHECK(e.hbm_t * 1e3 == doctest::Approx(374.4).epsilon(1e-9));
  CHECK(e.ssd_t * 1e3 == doctest::Approx(589.824).epsilon(1e-9));
  CHECK(e.dram_t * 1e3 == doctest::Approx(256 * 1.8).epsilon(1e-9));
  CHECK(e.cpu_t * 1e3 == doctest::Approx(6 * 2.1).epsilon(1e-9));

  const EmbodiedCarbon half = embodied_carbon({1, params.lifetime_s / 2, 1.0}, b100, params);
  CHECK(half.gpu_logic_t == doctest::Approx(e.gpu_logic_t / 2));
  CHECK(half.hbm_t == doctest::Approx(e.hbm_t / 2));
  CHECK(half.cpu_t == doctest::Approx(e.cpu_t / 2));
  CHECK(half.dram_t == doctest::Approx(e.dram_t / 2));
  CHECK(half.ssd_t == doctest::Approx(e.ssd_t / 2));
}

TEST_CASE("nodes round up") {
  const CarbonParams params;
  CHECK(node_count(1, params) == 1);
  CHECK(node_count(8, params) == 1);
  CHECK(node_count(9, params) == 2);
  const GpuSpec g = builtin_gpu("A100");
  const double nine = operational_carbon({9, 3600, 0.5}, g, params).other_t;
  const double sixteen = operational_carbon({16, 3600, 0.5}, g, params).other_t;
  CHECK(nine == sixteen);
}

TEST_CASE("ideal carbon") {
  const CarbonParams params;
  const GpuSpec b100 = builtin_gpu("B100");
  const double deadline = 90 * kSecondsPerDay;
  const IdealCarbon ideal = ideal_carbon(point_with_compute(5.88e23), b100, params, deadline);
  CHECK(ideal.n_gpu == 39);
  const double gpu_hours = double(ideal.n_gpu) * ideal.duration_s / 3600;
  CHECK(gpu_hours == doctest::Approx(82491.58249158249).epsilon(1e-9));
  CHECK(ideal.carbon_t == doctest::Approx(8.066851851851853).epsilon(1e-9));

  const IdealCarbon doubled = ideal_carbon(point_with_compute(2 * 5.88e23), b100, params, deadline);
  CHECK(doubled.carbon_t == doctest::Approx(2 * ideal.carbon_t).epsilon(1e-12));

  // Same thing through the operational path.
  CarbonParams bare = params;
  bare.embodied_enabled = false;
  const ModelPoint big = point_with_compute(1e26);
  const IdealCarbon ib = ideal_carbon(big, b100, params, deadline);
  GpuSpec all_static = b100;
  all_static.static_fraction = 0.0;
  const OperationalCarbon op =
      operational_carbon({ib.n_gpu, ib.duration_s, 1.0}, all_static, bare);
  CHECK(op.gpu_t == doctest::Approx(ib.carbon_t).epsilon(1e-9));
}

TEST_CASE("ideal is reproduced with every overhead removed") {
  CarbonParams params;
  params.embodied_enabled = false;
  params.alpha = 1.0;
  GpuSpec g = builtin_gpu("H100");
  g.static_fraction = 1e-300;
  const ModelPoint p = point_with_compute(3e25);
  const IdealCarbon ideal = ideal_carbon(p, g, params, 90 * kSecondsPerDay);
  const CarbonReport r = total_carbon({ideal.n_gpu, ideal.duration_s, 1.0}, g, params);
  CHECK(r.op_gpu_t == doctest::Approx(ideal.carbon_t).epsilon(1e-9));
}

TEST_CASE("unit audit in joules and grams") {
  const CarbonParams params;
  const GpuSpec g = builtin_gpu("V100");
  const Deployment dep{1000, 40 * kSecondsPerDay, 0.37};
  const CarbonReport r = total_carbon(dep, g, params);

  const double ci_g_per_j = params.carbon_intensity / 3.6e6;
  const double gpu_w = g.static_fraction * g.tdp + (1 - g.static_fraction) * g.tdp * dep.utilization;
  const double gpu_g = 1000 * gpu_w * dep.duration_s * params.pue * ci_g_per_j;
  const double other_g = 125 * params.p_sys * dep.duration_s * params.pue * ci_g_per_j;
  const double share = dep.duration_s / params.lifetime_s;
  const double emb_kg = share * (1000 * (g.die_area * g.logic_cpa + 32 * g.hbm_cpa) +
                                 125 * (6 * g.logic_cpa + 256 * 1.8 + 32768 * 0.018));
  CHECK(r.op_gpu_t == doctest::Approx(gpu_g / 1e6).epsilon(1e-9));
  CHECK(r.op_other_t == doctest::Approx(other_g / 1e6).epsilon(1e-9));
  CHECK(r.embodied_t() == doctest::Approx(emb_kg / 1e3).epsilon(1e-9));
  CHECK(r.total_t == doctest::Approx((gpu_g + other_g) / 1e6 + emb_kg / 1e3).epsilon(1e-9));
}

TEST_CASE("report is additive and linear in duration") {
  const CarbonParams params;
  const GpuSpec g = builtin_gpu("A100");
  const CarbonReport a = total_carbon({512, 1e6, 0.4}, g, params);
  const CarbonReport b = total_carbon({512, 3e6, 0.4}, g, params);
  CHECK(a.total_t == doctest::Approx(a.operational_t() + a.embodied_t()));
  CHECK(b.op_gpu_t == doctest::Approx(3 * a.op_gpu_t));
  CHECK(b.embodied_t() == doctest::Approx(3 * a.embodied_t()));

  CarbonParams no_emb = params;
  no_emb.embodied_enabled = false;
  const CarbonReport c = total_carbon({512, 1e6, 0.4}, g, no_emb);
  CHECK(c.total_t == doctest::Approx(a.op_gpu_t + a.op_other_t));
  CHECK(c.total_t < a.total_t);
}

TEST_CASE("parameter validation") {
  CarbonParams p;
  CHECK_NOTHROW(validate(p));
  p.pue = 0.9;
  CHECK_THROWS_WITH_AS(validate(p), doctest::Contains("pue"), std::invalid_argument);
  p = {};
  p.alpha = 1.5;
  CHECK_THROWS_WITH_AS(validate(p), doctest::Contains("alpha"), std::invalid_argument);
  p = {};
  p.gpus_per_node = 0;
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
}
