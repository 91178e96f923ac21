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

#include "carbonlaw/hardware_catalog.hpp"
#include "carbonlaw/numeric.hpp"
#include "carbonlaw/parallelism_search.hpp"
#include "carbonlaw/scaling_laws.hpp"

namespace carbonlaw {

/// Datacenter and system composition. Carbon intensity in gCO2e/kWh, CPAs in
/// kgCO2 per GB (memory, storage) and per cm^2 (logic via the GPU's node).
struct CarbonParams {
  double pue = 1.1;
  double carbon_intensity = 127.0;
  double lifetime_s = 5.0 * kSecondsPerYear;
  Count gpus_per_node = 8;
  double node_ssd_gb = 32768.0;
  double node_dram_gb = 256.0;
  double p_sys = 600.0;  // watts per node outside the GPUs
  double dram_cpa = 1.8;
  double cpu_area_cm2 = 6.0;
  double ssd_cpa = 0.018;
  double alpha = 1.0;  // dynamic power coefficient
  bool embodied_enabled = true;
};

void validate(const CarbonParams& params);

/// What the carbon model needs from a plan.
struct Deployment {
  Count n_gpu = 0;
  double duration_s = 0.0;
  double utilization = 0.0;
};

Deployment deployment_of(const ParallelismPlan& plan);

struct OperationalCarbon {
  double gpu_t = 0.0;
  double other_t = 0.0;
};

struct EmbodiedCarbon {
  double gpu_logic_t = 0.0;
  double hbm_t = 0.0;
  double cpu_t = 0.0;
  double dram_t = 0.0;
  double ssd_t = 0.0;

  double total_t() const { return gpu_logic_t + hbm_t + cpu_t + dram_t + ssd_t; }
};

/// All values in tCO2e.
struct CarbonReport {
  double op_gpu_t = 0.0;
  double op_other_t = 0.0;
  double emb_gpu_logic_t = 0.0;
  double emb_hbm_t = 0.0;
  double emb_cpu_t = 0.0;
  double emb_dram_t = 0.0;
  double emb_ssd_t = 0.0;
  double total_t = 0.0;
  double duration_s = 0.0;
  Count n_gpu = 0;
  double utilization = 0.0;

  double operational_t() const { return op_gpu_t + op_other_t; }
  double embodied_t() const {
    return emb_gpu_logic_t + emb_hbm_t + emb_cpu_t + emb_dram_t + emb_ssd_t;
  }
};

/// Host nodes needed for n_gpu GPUs.
Count node_count(Count n_gpu, const CarbonParams& params);

/// Average draw of one GPU at utilization u: P_s + alpha * P_d * u.
double gpu_power_w(const GpuSpec& gpu, const CarbonParams& params, double u);

OperationalCarbon operational_carbon(const Deployment& dep, const GpuSpec& gpu,
                                     const CarbonParams& params);

/// Manufacturing emissions amortized by duration / lifetime. Zero when
/// params.embodied_enabled is false.
EmbodiedCarbon embodied_carbon(const Deployment& dep, const GpuSpec& gpu,
                               const CarbonParams& params);

CarbonReport total_carbon(const Deployment& dep, const GpuSpec& gpu, const CarbonParams& params);

struct IdealCarbon {
  Count n_gpu = 0;
  double duration_s = 0.0;
  double carbon_t = 0.0;
};

/// Lower bound: the unrounded ideal GPU count running at peak throughput and
/// full tdp, no system power, no embodied carbon.
IdealCarbon ideal_carbon(const ModelPoint& point, const GpuSpec& gpu, const CarbonParams& params,
                         double deadline_s);

}  // namespace carbonlaw
