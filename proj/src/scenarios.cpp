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

#include "carbonlaw/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/ostream.h>

namespace carbonlaw {
namespace {

ScenarioRow evaluate_point(const ModelPoint& base, const ScenarioConfig& scenario,
                           const GpuSpec& gpu, const RunContext& ctx) {
  ScalingConfig law = ctx.law;
  law.batch_exponent = scenario.batch_exponent;

  ScenarioRow row;
  row.point = base;
  row.point.critical_batch_tokens = critical_batch_tokens(base.compute, base.seq_len, law);

  CarbonParams carbon = ctx.carbon;
  carbon.embodied_enabled = carbon.embodied_enabled && scenario.embodied_enabled;

  if (scenario.ideal_mode) {
    const IdealCarbon ideal = ideal_carbon(row.point, gpu, carbon, ctx.search.deadline_s);
    row.carbon.op_gpu_t = ideal.carbon_t;
    row.carbon.total_t = ideal.carbon_t;
    row.carbon.n_gpu = ideal.n_gpu;
    row.carbon.duration_s = ideal.duration_s;
    row.carbon.utilization = 1.0;
    return row;
  }

  SearchConfig search = ctx.search;
  search.perf.comm_factor *= scenario.sharding_comm_factor;
  search.perf.activation_factor *= scenario.eviction_mem_factor;

  try {
    row.plan = scenario.median_parallelism ? median_latency_plan(row.point, gpu, search)
                                           : carbonlaw::search(row.point, gpu, search);
  } catch (const InfeasibleError& e) {
    row.status = fmt::format("infeasible at d_model={}: {}", base.d_model, e.what());
    return row;
  }
  row.carbon = total_carbon(deployment_of(*row.plan), gpu, carbon);
  return row;
}

}  // namespace

void validate(const ScenarioConfig& s) {
  validate(s.gpu);
  if (!(s.years >= 0) || !std::isfinite(s.years)) {
    throw std::invalid_argument(fmt::format("scenario {}: years must be >= 0", s.name));
  }
  if (!(s.batch_exponent > 0 && s.batch_exponent < 1)) {
    throw std::invalid_argument(
        fmt::format("scenario {}: batch exponent must lie in (0, 1)", s.name));
  }
  auto factor = [&](double v, const char* what) {
    if (!(v > 0 && v <= 1)) {
      throw std::invalid_argument(fmt::format("scenario {}: {} must lie in (0, 1]", s.name, what));
    }
  };
  factor(s.sharding_comm_factor, "sharding factor");
  factor(s.eviction_mem_factor, "eviction factor");
  if (s.ideal_mode && s.median_parallelism) {
    throw std::invalid_argument(
        fmt::format("scenario {}: ideal and median modes are exclusive", s.name));
  }
}

GpuSpec scenario_gpu(const ScenarioConfig& scenario, const ScalingRates& rates) {
  GpuSpec gpu = project(scenario.gpu, scenario.years, rates);
  if (scenario.static_swap) gpu.static_fraction = 1.0 - gpu.static_fraction;
  return gpu;
}

std::size_t ScenarioResult::failures() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const ScenarioRow& r) { return !r.ok(); }));
}

ScenarioResult run_scenario(std::span<const ModelPoint> sweep, const ScenarioConfig& scenario,
                            const RunContext& ctx) {
  if (sweep.empty()) throw std::invalid_argument("run_scenario needs a nonempty sweep");
  validate(scenario);

  ScenarioResult result;
  result.name = scenario.name;
  result.gpu = scenario_gpu(scenario, ctx.rates);
  result.rows.resize(sweep.size());

  std::vector<std::exception_ptr> errors(sweep.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < sweep.size(); i = next++) {
      try {
        result.rows[i] = evaluate_point(sweep[i], scenario, result.gpu, ctx);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t n_workers =
      std::clamp<std::size_t>(ctx.workers, 1, sweep.size());
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

PowerLawFit fit_power_law(std::span<const std::pair<double, double>> carbon_loss) {
  if (carbon_loss.size() < 3) {
    throw std::invalid_argument(
        fmt::format("power-law fit needs at least 3 points (got {})", carbon_loss.size()));
  }
  const auto n = static_cast<Eigen::Index>(carbon_loss.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [co, loss] = carbon_loss[static_cast<std::size_t>(i)];
    if (!(co > 0) || !(loss > 0) || !std::isfinite(co) || !std::isfinite(loss)) {
      throw std::invalid_argument(
          fmt::format("power-law fit needs positive values (got carbon={}, loss={})", co, loss));
    }
    a(i, 0) = 1.0;
    a(i, 1) = std::log(co);
    y(i) = std::log(loss);
  }

  const Eigen::Vector2d beta = a.colPivHouseholderQr().solve(y);
  PowerLawFit fit;
  fit.k = std::exp(beta(0));
  fit.alpha_exp = -beta(1);
  fit.n_points = carbon_loss.size();

  const double ss_tot = (y.array() - y.mean()).square().sum();
  const double ss_res = (y - a * beta).squaredNorm();
  if (ss_tot <= 0.0) {
    fit.degenerate = true;
    fit.alpha_exp = 0.0;
    fit.k = std::exp(y.mean());
    fit.r_squared = 0.0;
  } else {
    fit.r_squared = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  }
  return fit;
}

PowerLawFit fit_scenario(const ScenarioResult& result) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : result.rows) {
    if (row.ok()) pts.emplace_back(row.carbon.total_t, row.point.predicted_loss);
  }
  return fit_power_law(pts);
}

GenerationBreakdown breakdown_of(const ScenarioResult& result, std::size_t row) {
  const ScenarioRow& r = result.rows.at(row);
  GenerationBreakdown out;
  out.gpu = result.gpu.name;
  out.n_gpu = r.carbon.n_gpu;
  out.total_t = r.carbon.total_t;
  if (r.carbon.n_gpu > 0) out.per_gpu_t = r.carbon.total_t / static_cast<double>(r.carbon.n_gpu);
  if (r.carbon.total_t > 0) out.embodied_share = r.carbon.embodied_t() / r.carbon.total_t;
  return out;
}

std::vector<ScenarioResult> compare_generations(std::span<const ModelPoint> sweep,
                                                std::span<const GpuSpec> gpus,
                                                const RunContext& ctx) {
  std::vector<ScenarioResult> out;
  out.reserve(gpus.size());
  for (const GpuSpec& gpu : gpus) {
    ScenarioConfig s;
    s.name = gpu.name;
    s.gpu = gpu;
    out.push_back(run_scenario(sweep, s, ctx));
  }
  return out;
}

std::vector<ScenarioResult> compare_futures(std::span<const ModelPoint> sweep,
                                            const ScenarioConfig& base,
                                            std::span<const double> years, const RunContext& ctx) {
  std::vector<ScenarioResult> out;
  out.reserve(years.size());
  for (double y : years) {
    ScenarioConfig s = base;
    s.years = base.years + y;
    s.name = y == 0 ? base.name : fmt::format("{}+{}y", base.name, y);
    out.push_back(run_scenario(sweep, s, ctx));
  }
  return out;
}

std::string output_header(std::string_view digest) {
  return fmt::format("# carbonlaw {} config-digest {}", CARBONLAW_VERSION, digest);
}

void write_scenario_csv(std::ostream& os, const ScenarioResult& result, std::string_view digest) {
  os << output_header(digest) << '\n';
  os << "# scenario " << result.name << " gpu " << result.gpu.name << '\n';
  os << "d_model,N,N_active,D,C,loss,n_gpu,n_tp,n_dp,n_pp,n_ep,duration_s,utilization,"
        "op_gpu_t,op_other_t,emb_total_t,total_t,status\n";
  for (const ScenarioRow& r : result.rows) {
    const ModelPoint& p = r.point;
    const ParallelLayout l = r.plan ? r.plan->layout : ParallelLayout{0, 0, 0, 0, 0, 0};
    fmt::print(os, "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", p.d_model,
               p.n_params, p.n_params_active, p.dataset_tokens, p.compute, p.predicted_loss,
               r.carbon.n_gpu, l.tp, l.dp, l.pp, l.ep, r.carbon.duration_s, r.carbon.utilization,
               r.carbon.op_gpu_t, r.carbon.op_other_t, r.carbon.embodied_t(), r.carbon.total_t,
               r.ok() ? std::string("ok") : "\"" + r.status + "\"");
  }
}

void write_fits_csv(std::ostream& os,
                    std::span<const std::pair<std::string, PowerLawFit>> fits,
                    std::string_view digest) {
  os << output_header(digest) << '\n';
  os << "scenario,k,alpha_exp,r2,n_points,degenerate\n";
  for (const auto& [name, f] : fits) {
    fmt::print(os, "{},{},{},{},{},{}\n", name, f.k, f.alpha_exp, f.r_squared, f.n_points,
               f.degenerate ? 1 : 0);
  }
}

}  // namespace carbonlaw
