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

#include "carbonlaw/hardware_catalog.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "carbonlaw/numeric.hpp"

namespace carbonlaw {
namespace {

struct CatalogRow {
  std::string_view name;
  double tflops;
  double hbm_gb;
  double hbm_gbps;
  double nvlink_gbps;
  double tdp_w;
  double area_mm2;
  std::string_view node;
  std::string_view hbm;
};

constexpr std::array<CatalogRow, 4> kCatalog{{
    {"V100", 119.2, 32, 900, 300, 250, 815, "12nm", "HBM2"},
    {"A100", 312, 40, 1555, 600, 400, 826, "7nm", "HBM2e"},
    {"H100", 989.4, 80, 3352, 900, 700, 814, "5nm", "HBM3"},
    {"B100", 1980, 192, 8200, 1800, 700, 1600, "4NP", "HBM3e"},
}};

}  // namespace

double logic_cpa_for_node(std::string_view node) {
  if (node == "12nm") return 1.2;
  if (node == "7nm") return 1.6;
  if (node == "5nm") return 1.9;
  if (node == "4nm" || node == "4NP") return 2.1;
  throw std::invalid_argument(fmt::format("unknown process node '{}'", node));
}

double memory_cpa(std::string_view technology) {
  if (technology == "HBM2") return 1.8;
  if (technology == "HBM2e") return 1.85;
  if (technology == "HBM3") return 1.9;
  if (technology == "HBM3e") return 1.95;
  if (technology == "SSD") return 0.018;
  throw std::invalid_argument(fmt::format("unknown memory technology '{}'", technology));
}

std::vector<std::string> builtin_gpu_names() {
  std::vector<std::string> out;
  for (const auto& row : kCatalog) out.emplace_back(row.name);
  return out;
}

GpuSpec builtin_gpu(std::string_view name) {
  for (const auto& row : kCatalog) {
    if (row.name != name) continue;
    GpuSpec g;
    g.name = std::string(row.name);
    g.process_node = std::string(row.node);
    g.peak_flops = row.tflops * 1e12;
    g.hbm_capacity = row.hbm_gb * kBytesPerGb;
    g.hbm_bandwidth = row.hbm_gbps * 1e9;
    g.nvlink_bandwidth = row.nvlink_gbps * 1e9;
    g.internode_bandwidth = kDefaultInternodeBandwidth;
    g.tdp = row.tdp_w;
    g.static_fraction = kDefaultStaticFraction;
    g.die_area = row.area_mm2 / 100.0;
    g.logic_cpa = logic_cpa_for_node(row.node);
    g.hbm_cpa = memory_cpa(row.hbm);
    g.sram_capacity_scale = 1.0;
    return g;
  }
  throw std::invalid_argument(fmt::format("unknown GPU '{}' (known: V100, A100, H100, B100)", name));
}

void validate(const GpuSpec& g) {
  auto positive = [&](double v, const char* field) {
    if (!(v > 0) || !std::isfinite(v)) {
      throw std::invalid_argument(
          fmt::format("GPU '{}': {} must be positive and finite (got {})", g.name, field, v));
    }
  };
  positive(g.peak_flops, "peak_flops");
  positive(g.hbm_capacity, "hbm_capacity");
  positive(g.hbm_bandwidth, "hbm_bandwidth");
  positive(g.nvlink_bandwidth, "nvlink_bandwidth");
  positive(g.internode_bandwidth, "internode_bandwidth");
  positive(g.tdp, "tdp");
  positive(g.die_area, "die_area");
  positive(g.logic_cpa, "logic_cpa");
  positive(g.hbm_cpa, "hbm_cpa");
  positive(g.sram_capacity_scale, "sram_capacity_scale");
  if (!(g.core_power_share >= 0 && g.core_power_share <= 1)) {
    throw std::invalid_argument(fmt::format(
        "GPU '{}': core_power_share must lie in [0, 1] (got {})", g.name, g.core_power_share));
  }
  if (!(g.static_fraction > 0 && g.static_fraction < 1)) {
    throw std::invalid_argument(fmt::format(
        "GPU '{}': static_fraction must lie in (0, 1) (got {})", g.name, g.static_fraction));
  }
}

GpuSpec project(const GpuSpec& base, double years, const ScalingRates& rates) {
  if (!(years >= 0) || !std::isfinite(years)) {
    throw std::invalid_argument(fmt::format("projection years must be >= 0 (got {})", years));
  }
  if (!(base.core_power_share >= 0 && base.core_power_share <= 1)) {
    throw std::invalid_argument("core_power_share must lie in [0, 1]");
  }
  if (years == 0) return base;

  GpuSpec g = base;
  g.name = fmt::format("{}+{}y", base.name, years);
  g.peak_flops *= std::pow(rates.core_throughput, years);
  const double core_w = base.tdp * base.core_power_share * std::pow(rates.core_power, years);
  const double hbm_w =
      base.tdp * (1.0 - base.core_power_share) * std::pow(rates.hbm_power, years);
  g.tdp = core_w + hbm_w;
  g.core_power_share = core_w / g.tdp;
  g.die_area *= std::pow(rates.core_area, years);
  g.hbm_capacity *= std::pow(rates.hbm_capacity, years);
  g.hbm_bandwidth *= std::pow(rates.hbm_bandwidth, years);
  g.nvlink_bandwidth *= std::pow(rates.nvlink_bandwidth, years);
  g.sram_capacity_scale *= std::pow(rates.sram, years);
  return g;
}

}  // namespace carbonlaw
