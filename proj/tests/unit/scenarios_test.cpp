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
#include <sstream>
#include <utility>
#include <vector>

#include "carbonlaw/scenarios.hpp"

using namespace carbonlaw;

namespace {

std::vector<ModelPoint> small_sweep() {
  const std::vector<Count> ds{2048, 3072, 4096, 6144};
  return sweep(ds, 2048);
}

ScenarioConfig b100(std::string name = "default") {
  ScenarioConfig s;
  s.name = std::move(name);
  s.gpu = builtin_gpu("B100");
  return s;
}

}  // namespace

TEST_CASE("power law fit on exact data") {
  std::vector<std::pair<double, double>> pts;
  for (double co : {1e3, 1e4, 1e5, 1e6}) pts.emplace_back(co, 4.0 * std::pow(co, -0.05));
  const PowerLawFit f = fit_power_law(pts);
  CHECK(f.k == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(f.alpha_exp == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.n_points == 4);
  CHECK_FALSE(f.degenerate);
}

TEST_CASE("power law fit edge cases") {
  const std::vector<std::pair<double, double>> flat{{1, 2}, {10, 2}, {100, 2}};
  const PowerLawFit f = fit_power_law(flat);
  CHECK(f.degenerate);
  CHECK(f.alpha_exp == 0.0);
  CHECK(f.r_squared == 0.0);
  CHECK(f.k == doctest::Approx(2.0));

  const std::vector<std::pair<double, double>> two{{1, 2}, {10, 1}};
  CHECK_THROWS_AS(fit_power_law(two), std::invalid_argument);
  const std::vector<std::pair<double, double>> negative{{1, 2}, {-10, 1}, {100, 1}};
  CHECK_THROWS_AS(fit_power_law(negative), std::invalid_argument);
  const std::vector<std::pair<double, double>> zero{{1, 2}, {10, 0}, {100, 1}};
  CHECK_THROWS_AS(fit_power_law(zero), std::invalid_argument);
}

TEST_CASE("ideal mode equals ideal carbon") {
  const auto pts = small_sweep();
  RunContext ctx;
  ScenarioConfig s = b100("ideal");
  s.ideal_mode = true;
  const ScenarioResult r = run_scenario(pts, s, ctx);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const IdealCarbon ideal = ideal_carbon(pts[i], s.gpu, ctx.carbon, ctx.search.deadline_s);
    CHECK(r.rows[i].carbon.total_t == ideal.carbon_t);
    CHECK(r.rows[i].carbon.n_gpu == ideal.n_gpu);
  }
}

TEST_CASE("scenario toggles") {
  const auto pts = small_sweep();
  RunContext ctx;
  const ScenarioResult base = run_scenario(pts, b100(), ctx);
  REQUIRE(base.failures() == 0);

  ScenarioConfig no_emb = b100("no-embodied");
  no_emb.embodied_enabled = false;
  ScenarioConfig swap = b100("static-swap");
  swap.static_swap = true;
  ScenarioConfig median = b100("median");
  median.median_parallelism = true;
  ScenarioConfig ideal = b100("ideal");
  ideal.ideal_mode = true;

  const ScenarioResult r_no_emb = run_scenario(pts, no_emb, ctx);
  const ScenarioResult r_swap = run_scenario(pts, swap, ctx);
  const ScenarioResult r_median = run_scenario(pts, median, ctx);
  const ScenarioResult r_ideal = run_scenario(pts, ideal, ctx);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(r_no_emb.rows[i].carbon.total_t < base.rows[i].carbon.total_t);
    CHECK(r_swap.rows[i].carbon.total_t < base.rows[i].carbon.total_t);
    CHECK(r_median.rows[i].carbon.total_t >= base.rows[i].carbon.total_t);
    CHECK(base.rows[i].carbon.total_t >= r_ideal.rows[i].carbon.total_t);
  }
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(base.rows[i].carbon.total_t > base.rows[i - 1].carbon.total_t);
    CHECK(base.rows[i].point.predicted_loss < base.rows[i - 1].point.predicted_loss);
  }
}

TEST_CASE("toggles compose in either order") {
  const auto pts = small_sweep();
  RunContext ctx;
  ScenarioConfig a = b100();
  a.embodied_enabled = false;
  a.static_swap = true;
  ScenarioConfig b = b100();
  b.static_swap = true;
  b.embodied_enabled = false;
  const ScenarioResult ra = run_scenario(pts, a, ctx);
  const ScenarioResult rb = run_scenario(pts, b, ctx);
  std::ostringstream oa, ob;
  write_scenario_csv(oa, ra, "x");
  write_scenario_csv(ob, rb, "x");
  CHECK(oa.str() == ob.str());
}

TEST_CASE("aggressive batch exponent") {
  RunContext ctx;
  const std::vector<Count> ds{16384};
  const auto pts = sweep(ds, 2048);
  REQUIRE(pts.front().compute > 5.88e23);
  ScenarioConfig aggressive = b100("aggressive");
  aggressive.batch_exponent = kAggressiveBatchExponent;
  const ScenarioResult base = run_scenario(pts, b100(), ctx);
  const ScenarioResult fast = run_scenario(pts, aggressive, ctx);
  CHECK(fast.rows[0].point.critical_batch_tokens > base.rows[0].point.critical_batch_tokens);
  // Pass-through fields are untouched.
  CHECK(fast.rows[0].point.compute == base.rows[0].point.compute);
}

TEST_CASE("worker count does not change results") {
  const auto pts = small_sweep();
  RunContext one;
  RunContext many;
  many.workers = 4;
  std::ostringstream a, b;
  write_scenario_csv(a, run_scenario(pts, b100(), one), "d");
  write_scenario_csv(b, run_scenario(pts, b100(), many), "d");
  CHECK(a.str() == b.str());
}

TEST_CASE("infeasible points keep their row") {
  auto pts = small_sweep();
  RunContext ctx;
  ctx.search.deadline_s = 1.0;
  ctx.search.n_gpu_cap = 1024;
  const ScenarioResult r = run_scenario(pts, b100(), ctx);
  CHECK(r.failures() == pts.size());
  CHECK(r.rows[0].status.find("d_model=2048") != std::string::npos);
  CHECK(r.rows[0].carbon.total_t == 0.0);
  CHECK_THROWS_AS(fit_scenario(r), std::invalid_argument);
}

TEST_CASE("futures at zero years equal the base run") {
  const auto pts = small_sweep();
  RunContext ctx;
  const std::vector<double> years{0.0, 4.0, 8.0};
  const auto runs = compare_futures(pts, b100(), years, ctx);
  REQUIRE(runs.size() == 3);
  std::ostringstream a, b;
  write_scenario_csv(a, runs[0], "d");
  write_scenario_csv(b, run_scenario(pts, b100(), ctx), "d");
  CHECK(a.str() == b.str());
  CHECK(runs[1].gpu.name == "B100+4y");
}

TEST_CASE("generation breakdown") {
  const std::vector<Count> ds{4096};
  const auto pts = sweep(ds, 2048);
  RunContext ctx;
  std::vector<GpuSpec> gpus;
  for (const char* n : {"V100", "A100", "H100", "B100"}) gpus.push_back(builtin_gpu(n));
  const auto runs = compare_generations(pts, gpus, ctx);
  REQUIRE(runs.size() == 4);
  for (const auto& r : runs) {
    const GenerationBreakdown b = breakdown_of(r, 0);
    CHECK(b.per_gpu_t * double(b.n_gpu) == doctest::Approx(b.total_t));
    CHECK(b.embodied_share > 0.0);
    CHECK(b.embodied_share < 1.0);
  }
}

TEST_CASE("csv layout") {
  const auto pts = small_sweep();
  RunContext ctx;
  std::ostringstream os;
  write_scenario_csv(os, run_scenario(pts, b100(), ctx), "abc");
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == output_header("abc"));
  CHECK(line.rfind("# carbonlaw ", 0) == 0);
  std::getline(in, line);
  CHECK(line == "# scenario default gpu B100");
  std::getline(in, line);
  CHECK(line ==
        "d_model,N,N_active,D,C,loss,n_gpu,n_tp,n_dp,n_pp,n_ep,duration_s,utilization,"
        "op_gpu_t,op_other_t,emb_total_t,total_t,status");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(line.substr(line.size() - 3) == ",ok");
    ++rows;
  }
  CHECK(rows == 4);

  std::ostringstream fits;
  const std::vector<std::pair<std::string, PowerLawFit>> f{{"default", {2.0, 0.05, 0.99, 9, false}}};
  write_fits_csv(fits, f, "abc");
  CHECK(fits.str() == output_header("abc") +
                          "\nscenario,k,alpha_exp,r2,n_points,degenerate\ndefault,2,0.05,0.99,9,0\n");
}

TEST_CASE("scenario validation") {
  ScenarioConfig s = b100();
  s.sharding_comm_factor = 0.0;
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s = b100();
  s.batch_exponent = 1.0;
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s = b100();
  s.ideal_mode = s.median_parallelism = true;
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  CHECK_THROWS_AS(run_scenario({}, b100(), {}), std::invalid_argument);
}
