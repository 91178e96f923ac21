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

#include "carbonlaw/perf_model.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace carbonlaw {
namespace {

constexpr double kBytesPerValue = 2.0;  // fp16/bf16
constexpr double kTpAllreducesPerLayer = 4.0;
constexpr double kEpAlltoallsPerLayer = 2.0;
constexpr double kBackwardShare = 2.0 / 3.0;

double layers_per_stage(const ModelPoint& point, const ParallelLayout& layout) {
  if (layout.pp == 0 || point.n_layers % layout.pp != 0) {
    throw std::invalid_argument("pipeline degree must divide the layer count");
  }
  return static_cast<double>(point.n_layers / layout.pp);
}

// One hidden state per layer for one microbatch.
double activation_bytes_per_microbatch(const ModelPoint& point, const ParallelLayout& layout,
                                       const PerfConfig& perf) {
  return kBytesPerValue * static_cast<double>(layout.microbatch_tokens) *
         static_cast<double>(point.d_model) * layers_per_stage(point, layout) * 2.0 *
         perf.activation_factor;
}

}  // namespace

double allreduce_time(double bytes, double bandwidth, Count n) {
  if (n <= 1) return 0.0;
  const double nd = static_cast<double>(n);
  return 2.0 * bytes * (nd - 1.0) / (nd * bandwidth);
}

double alltoall_time(double bytes, double bandwidth, Count n) {
  if (n <= 1) return 0.0;
  const double nd = static_cast<double>(n);
  return bytes * (nd - 1.0) / (nd * bandwidth);
}

double gemm_efficiency(double tokens, double d_model, double sram_scale, double k) {
  const double x = tokens * d_model;
  return std::min(1.0, x / (x + k / sram_scale));
}

double pipeline_bubble_factor(Count n_microbatches, Count n_stages) {
  const double m = static_cast<double>(n_microbatches);
  return (m + static_cast<double>(n_stages) - 1.0) / m;
}

double params_per_rank(const ModelPoint& point, const ParallelLayout& layout) {
  const double d = static_cast<double>(point.d_model);
  const double layers = static_cast<double>(point.n_layers);
  const double tp_pp = static_cast<double>(layout.tp) * static_cast<double>(layout.pp);
  const double attention = 4.0 * d * d * layers / tp_pp;
  const double experts = static_cast<double>(point.n_experts) * 2.0 * d *
                         static_cast<double>(point.d_ff) * layers /
                         (tp_pp * static_cast<double>(layout.ep));
  return attention + experts;
}

double active_params_per_rank(const ModelPoint& point, const ParallelLayout& layout) {
  return static_cast<double>(point.n_params_active) /
         (static_cast<double>(layout.tp) * static_cast<double>(layout.pp) *
          static_cast<double>(layout.ep));
}

double training_steps(const ModelPoint& point) {
  return static_cast<double>(point.dataset_tokens) /
         static_cast<double>(point.critical_batch_tokens);
}

double flops_per_step(const ModelPoint& point) { return point.compute / training_steps(point); }

StepTimeBreakdown step_time(const ModelPoint& point, const ParallelLayout& layout,
                            const GpuSpec& gpu, const PerfConfig& perf) {
  const double stage_layers = layers_per_stage(point, layout);
  const double tokens = static_cast<double>(layout.microbatch_tokens);
  const double d = static_cast<double>(point.d_model);
  const double m = static_cast<double>(layout.n_microbatches);

  const double eff = gemm_efficiency(tokens, d, gpu.sram_capacity_scale, perf.gemm_k);
  const double flops_mb = 6.0 * active_params_per_rank(point, layout) * tokens;
  const double compute_mb = flops_mb / (gpu.peak_flops * eff);

  const double weight_bytes = kBytesPerValue * params_per_rank(point, layout);
  const double act_bytes = activation_bytes_per_microbatch(point, layout, perf);
  const double hbm_mb = (2.0 * weight_bytes + 4.0 * act_bytes) / gpu.hbm_bandwidth;

  const double tp_mb =
      kTpAllreducesPerLayer * stage_layers *
      allreduce_time(2.0 * tokens * d * kBytesPerValue * perf.comm_factor, gpu.nvlink_bandwidth,
                     layout.tp);
  const double ep_mb =
      kEpAlltoallsPerLayer * stage_layers *
      alltoall_time(tokens * d * kBytesPerValue * perf.comm_factor, gpu.internode_bandwidth,
                    layout.ep);

  const double stage_mb = std::max(compute_mb, hbm_mb) + tp_mb;

  StepTimeBreakdown out;
  out.compute_s = m * compute_mb;
  out.hbm_s = m * hbm_mb;
  out.tp_comm_s = m * tp_mb;
  out.ep_comm_s = m * ep_mb;
  out.pipeline_bubble_s = static_cast<double>(layout.pp - 1) * (stage_mb + ep_mb);

  const double dp_full = allreduce_time(weight_bytes * perf.comm_factor,
                                        gpu.internode_bandwidth, layout.dp);
  const double hidden = std::min(perf.dp_overlap * dp_full, kBackwardShare * out.compute_s);
  out.dp_comm_s = dp_full - hidden;

  out.total_s = m * std::max(compute_mb, hbm_mb) + out.tp_comm_s + out.ep_comm_s +
                out.pipeline_bubble_s + out.dp_comm_s;
  return out;
}

MemoryFootprint memory_footprint(const ModelPoint& point, const ParallelLayout& layout,
                                 const PerfConfig& perf) {
  const double params = params_per_rank(point, layout);
  MemoryFootprint out;
  out.weights_bytes = 2.0 * params;
  out.gradient_bytes = 2.0 * params;
  out.optimizer_bytes = 12.0 * params;
  out.activation_bytes =
      activation_bytes_per_microbatch(point, layout, perf) * static_cast<double>(layout.pp);
  out.total_bytes =
      out.weights_bytes + out.gradient_bytes + out.optimizer_bytes + out.activation_bytes;
  return out;
}

double utilization(const ModelPoint& point, const ParallelLayout& layout, const GpuSpec& gpu,
                   const StepTimeBreakdown& breakdown) {
  const double denom =
      static_cast<double>(layout.n_gpu()) * gpu.peak_flops * breakdown.total_s;
  const double u = flops_per_step(point) / denom;
  return std::clamp(u, std::numeric_limits<double>::min(), 1.0);
}

GemmCalibration calibrate_gemm_k(std::span<const GemmSample> samples, const GpuSpec& gpu) {
  if (samples.empty()) throw std::invalid_argument("calibration needs at least one sample");
  // measured * peak / flops = 1 / eff = 1 + (K / sram) / x
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::VectorXd z(n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const GemmSample& s = samples[static_cast<std::size_t>(i)];
    if (!(s.tokens > 0 && s.d_model > 0 && s.measured_s > 0)) {
      throw std::invalid_argument(fmt::format("calibration sample {} is not positive", i + 1));
    }
    const double x = s.tokens * s.d_model;
    const double flops = 2.0 * s.tokens * s.d_model * s.d_model;
    z(i) = 1.0 / x;
    y(i) = s.measured_s * gpu.peak_flops / flops - 1.0;
  }
  const double slope = z.dot(y) / z.squaredNorm();
  GemmCalibration out;
  out.k = slope * gpu.sram_capacity_scale;
  out.n_samples = samples.size();
  if (!(out.k > 0)) {
    throw std::invalid_argument("calibration produced a non-positive K; samples run faster than peak");
  }
  const double ss_tot = (y.array() - y.mean()).square().sum();
  const double ss_res = (y - slope * z).squaredNorm();
  out.r_squared = ss_tot > 0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return out;
}

}  // namespace carbonlaw
