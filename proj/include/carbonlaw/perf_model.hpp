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

#include <span>

#include "carbonlaw/hardware_catalog.hpp"
#include "carbonlaw/numeric.hpp"
#include "carbonlaw/scaling_laws.hpp"

// Analytical step-time model for one global batch of a data/tensor/pipeline/
// expert-parallel training job.
//
// Per microbatch and pipeline stage:
//   compute = 6 * active_params_per_rank * microbatch_tokens / (peak * eff)
//   hbm     = (2 * weight_bytes + 4 * activation_bytes) / hbm_bandwidth
//   tp      = 4 * layers_per_stage * allreduce(4 * tokens * d_model bytes, nvlink, tp)
//   ep      = 2 * layers_per_stage * alltoall(2 * tokens * d_model bytes, internode, ep)
//   stage   = max(compute, hbm) + tp
// Per step:
//   total   = (m + pp - 1) * (stage + ep) + exposed data-parallel all-reduce
// where the gradient all-reduce hides behind up to `dp_overlap` of itself,
// bounded by the backward share (2/3) of the step's compute.

namespace carbonlaw {

constexpr double kDefaultGemmK = 4194304.0;  // 2^22

struct PerfConfig {
  double gemm_k = kDefaultGemmK;  // half-saturation point of tokens * d_model
  double dp_overlap = 0.5;
  double comm_factor = 1.0;        // scales every communication volume
  double activation_factor = 1.0;  // scales activation memory and traffic
};

/// Decomposition of one training job onto n_gpu = tp * dp * pp * ep devices.
/// microbatch_tokens is the per-data-parallel-replica microbatch, so
/// n_microbatches * microbatch_tokens * dp = critical batch.
struct ParallelLayout {
  Count tp = 1;
  Count dp = 1;
  Count pp = 1;
  Count ep = 1;
  Count microbatch_tokens = 1;
  Count n_microbatches = 1;

  Count n_gpu() const { return tp * dp * pp * ep; }
  bool operator==(const ParallelLayout&) const = default;
};

/// Seconds per global batch step. dp_comm_s is the exposed part only.
struct StepTimeBreakdown {
  double compute_s = 0.0;
  double hbm_s = 0.0;
  double tp_comm_s = 0.0;
  double dp_comm_s = 0.0;
  double ep_comm_s = 0.0;
  double pipeline_bubble_s = 0.0;
  double total_s = 0.0;
};

/// Bytes resident per GPU.
struct MemoryFootprint {
  double weights_bytes = 0.0;
  double gradient_bytes = 0.0;
  double optimizer_bytes = 0.0;
  double activation_bytes = 0.0;
  double total_bytes = 0.0;
};

/// Ring all-reduce of `bytes` across n ranks: 2 * V * (n - 1) / (n * BW).
double allreduce_time(double bytes, double bandwidth, Count n);

/// All-to-all of `bytes` per rank across n ranks: V * (n - 1) / (n * BW).
double alltoall_time(double bytes, double bandwidth, Count n);

/// Saturating GEMM efficiency x / (x + K / sram_scale) with x = tokens * d_model.
double gemm_efficiency(double tokens, double d_model, double sram_scale,
                       double k = kDefaultGemmK);

/// (m + p - 1) / m.
double pipeline_bubble_factor(Count n_microbatches, Count n_stages);

/// Weights held by one GPU: attention sharded by tp * pp, experts additionally by ep.
double params_per_rank(const ModelPoint& point, const ParallelLayout& layout);

/// Active parameters one GPU multiplies per token of its replica's microbatch.
double active_params_per_rank(const ModelPoint& point, const ParallelLayout& layout);

/// Optimizer steps over the whole run, D / critical_batch (not rounded).
double training_steps(const ModelPoint& point);

/// FLOPs per global batch step, C / steps.
double flops_per_step(const ModelPoint& point);

StepTimeBreakdown step_time(const ModelPoint& point, const ParallelLayout& layout,
                            const GpuSpec& gpu, const PerfConfig& perf = {});

/// Mixed-precision Adam: 2 + 2 + 12 bytes per parameter; activations with full
/// recomputation, one hidden state per layer, pp microbatches in flight.
MemoryFootprint memory_footprint(const ModelPoint& point, const ParallelLayout& layout,
                                 const PerfConfig& perf = {});

/// Achieved FLOPs over peak FLOPs across all GPUs, clamped to (0, 1].
double utilization(const ModelPoint& point, const ParallelLayout& layout, const GpuSpec& gpu,
                   const StepTimeBreakdown& breakdown);

/// One measured GEMM: tokens x d_model by d_model x d_model.
struct GemmSample {
  double tokens = 0.0;
  double d_model = 0.0;
  double measured_s = 0.0;
};

struct GemmCalibration {
  double k = 0.0;
  double r_squared = 0.0;
  std::size_t n_samples = 0;
};

/// Least-squares fit of the efficiency constant K to measured GEMM times,
/// taking each GEMM as 2 * tokens * d_model^2 FLOPs at peak * efficiency.
GemmCalibration calibrate_gemm_k(std::span<const GemmSample> samples, const GpuSpec& gpu);

}  // namespace carbonlaw
