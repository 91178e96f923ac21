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

#include <string>
#include <string_view>
#include <vector>

namespace carbonlaw {

/// One GPU generation. SI units throughout: FLOP/s, bytes, bytes/s, watts;
/// die area in cm^2, CPA in kgCO2/cm^2 (logic) and kgCO2/GB (HBM).
struct GpuSpec {
  std::string name;
  std::string process_node;
  double peak_flops = 0.0;           // dense FP16
  double hbm_capacity = 0.0;
  double hbm_bandwidth = 0.0;
  double nvlink_bandwidth = 0.0;     // per GPU
  double internode_bandwidth = 0.0;  // per GPU
  double tdp = 0.0;
  double static_fraction = 0.0;      // share of tdp drawn regardless of utilization
  double die_area = 0.0;
  double logic_cpa = 0.0;
  double hbm_cpa = 0.0;
  double sram_capacity_scale = 1.0;  // relative to the unprojected part
  double core_power_share = 0.7;     // share of tdp drawn by the cores; the rest is HBM
};

/// Annual multiplicative technology scaling rates.
struct ScalingRates {
  double core_throughput = 1.3;
  double sram = 1.4;
  double core_power = 1.03;
  double core_area = 1.05;
  double hbm_bandwidth = 1.25;
  double hbm_power = 1.03;
  double hbm_capacity = 1.24;
  double nvlink_bandwidth = 1.11;
};

constexpr double kDefaultInternodeBandwidth = 50e9;  // one 400 Gb/s NIC per GPU
constexpr double kDefaultStaticFraction = 0.842;

/// Logic CPA by process node: "12nm", "7nm", "5nm", "4nm"/"4NP".
double logic_cpa_for_node(std::string_view node);

/// Memory CPA by technology: "HBM2", "HBM2e", "HBM3", "HBM3e", "SSD".
double memory_cpa(std::string_view technology);

std::vector<std::string> builtin_gpu_names();

/// Built-in catalog entry (V100, A100, H100, B100). Throws std::invalid_argument
/// for unknown names.
GpuSpec builtin_gpu(std::string_view name);

/// Throws std::invalid_argument naming the first field that breaks a GpuSpec invariant.
void validate(const GpuSpec& gpu);

/// Projects a GPU `years` into the future. The core and HBM shares of tdp
/// scale by their own power rates and core_power_share is updated to match,
/// so project(project(g, a), b) == project(g, a + b). CPA values, internode
/// bandwidth and static fraction are held.
GpuSpec project(const GpuSpec& base, double years, const ScalingRates& rates = {});

}  // namespace carbonlaw
