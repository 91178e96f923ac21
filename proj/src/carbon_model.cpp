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

#include "carbonlaw/carbon_model.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace carbonlaw {
namespace {

constexpr double kGramsPerTonne = 1e6;
constexpr double kKgPerTonne = 1e3;

// Watts held for `seconds` -> tCO2e at the datacenter's PUE and intensity.
double operational_tonnes(double watts, double seconds, const CarbonParams& p) {
  const double kwh = watts * seconds / kJoulesPerKwh;
  return kwh * p.pue * p.carbon_intensity / kGramsPerTonne;
}

}  // namespace

void validate(const CarbonParams& p) {
  auto positive = [](double v, const char* field) {
    if (!(v > 0) || !std::isfinite(v)) {
      throw std::invalid_argument(fmt::format("carbon.{} must be positive (got {})", field, v));
    }
  };
  positive(p.pue, "pue");
  if (p.pue < 1.0) throw std::invalid_argument("carbon.pue must be >= 1");
  positive(p.carbon_intensity, "carbon_intensity");
  positive(p.lifetime_s, "lifetime");
  if (p.gpus_per_node == 0) throw std::invalid_argument("carbon.gpus_per_node must be positive");
  positive(p.node_ssd_gb, "node_ssd_gb");
  positive(p.node_dram_gb, "node_dram_gb");
  positive(p.p_sys, "p_sys");
  positive(p.dram_cpa, "dram_cpa");
  positive(p.cpu_area_cm2, "cpu_area_cm2");
  positive(p.ssd_cpa, "ssd_cpa");
  if (!(p.alpha > 0 && p.alpha <= 1)) {
    throw std::invalid_argument(fmt::format("carbon.alpha must lie in (0, 1] (got {})", p.alpha));
  }
}

Deployment deployment_of(const ParallelismPlan& plan) {
  return {plan.n_gpu, plan.duration_s, plan.utilization};
}

Count node_count(Count n_gpu, const CarbonParams& params) {
  return n_gpu / params.gpus_per_node + (n_gpu % params.gpus_per_node != 0 ? 1 : 0);
}

double gpu_power_w(const GpuSpec& gpu, const CarbonParams& params, double u) {
  const double p_static = gpu.static_fraction * gpu.tdp;
  const double p_dynamic = (1.0 - gpu.static_fraction) * gpu.tdp;
  return p_static + params.alpha * p_dynamic * u;
}

OperationalCarbon operational_carbon(const Deployment& dep, const GpuSpec& gpu,
                                     const CarbonParams& params) {
  OperationalCarbon out;
  out.gpu_t = static_cast<double>(dep.n_gpu) *
              operational_tonnes(gpu_power_w(gpu, params, dep.utilization), dep.duration_s, params);
  out.other_t = static_cast<double>(node_count(dep.n_gpu, params)) *
                operational_tonnes(params.p_sys, dep.duration_s, params);
  return out;
}

EmbodiedCarbon embodied_carbon(const Deployment& dep, const GpuSpec& gpu,
                               const CarbonParams& params) {
  EmbodiedCarbon out;
  if (!params.embodied_enabled) return out;
  const double share = dep.duration_s / params.lifetime_s / kKgPerTonne;
  const double gpus = static_cast<double>(dep.n_gpu);
  const double nodes = static_cast<double>(node_count(dep.n_gpu, params));
  out.gpu_logic_t = gpus * gpu.die_area * gpu.logic_cpa * share;
  out.hbm_t = gpus * (gpu.hbm_capacity / kBytesPerGb) * gpu.hbm_cpa * share;
  out.cpu_t = nodes * params.cpu_area_cm2 * gpu.logic_cpa * share;
  out.dram_t = nodes * params.node_dram_gb * params.dram_cpa * share;
  out.ssd_t = nodes * params.node_ssd_gb * params.ssd_cpa * share;
  return out;
}

CarbonReport total_carbon(const Deployment& dep, const GpuSpec& gpu, const CarbonParams& params) {
  const OperationalCarbon op = operational_carbon(dep, gpu, params);
  const EmbodiedCarbon emb = embodied_carbon(dep, gpu, params);
  CarbonReport r;
  r.op_gpu_t = op.gpu_t;
  r.op_other_t = op.other_t;
  r.emb_gpu_logic_t = emb.gpu_logic_t;
  r.emb_hbm_t = emb.hbm_t;
  r.emb_cpu_t = emb.cpu_t;
  r.emb_dram_t = emb.dram_t;
  r.emb_ssd_t = emb.ssd_t;
  r.total_t = r.operational_t() + r.embodied_t();
  r.duration_s = dep.duration_s;
  r.n_gpu = dep.n_gpu;
  r.utilization = dep.utilization;
  return r;
}

IdealCarbon ideal_carbon(const ModelPoint& point, const GpuSpec& gpu, const CarbonParams& params,
                         double deadline_s) {
  IdealCarbon out;
  out.n_gpu = ideal_gpu_count(point, gpu, deadline_s, false);
  out.duration_s = point.compute / (static_cast<double>(out.n_gpu) * gpu.peak_flops);
  out.carbon_t = static_cast<double>(out.n_gpu) * operational_tonnes(gpu.tdp, out.duration_s, params);
  return out;
}

}  // namespace carbonlaw
