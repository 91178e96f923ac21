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
#include <vector>

#include "carbonlaw/numeric.hpp"

namespace carbonlaw {

/// Compute-optimal scaling law coefficients. Every field is overridable from
/// the run configuration (`law.*` keys).
struct ScalingConfig {
  // loss = loss_a * N^-n_exponent + loss_b * D^-d_exponent + loss_e
  double loss_a = 406.4;
  double loss_b = 410.7;
  double loss_e = 1.69;
  double n_exponent = 0.34;
  double d_exponent = 0.28;

  double tokens_per_param = 20.0;       // D = tokens_per_param * N_active
  double flops_per_token_param = 6.0;   // C = flops_per_token_param * N_active * D

  // critical_batch = batch_ref_tokens * (C / batch_ref_flops)^batch_exponent
  double batch_exponent = 1.0 / 6.0;
  double batch_ref_tokens = 1.5e6;
  double batch_ref_flops = 5.88e23;

  Count active_experts = 2;  // top-k routing

  // L = layer_coeff * d_model^layer_exponent; E = ref_experts * d_model / ref_d_model
  double layer_coeff = 0.402;
  double layer_exponent = 0.75;
  Count reference_d_model = 12288;
  Count reference_experts = 8;
};

/// One point on the scaling curve.
struct ModelPoint {
  Count d_model = 0;
  Count d_ff = 0;
  Count n_layers = 0;
  Count n_experts = 0;
  Count seq_len = 0;
  Count n_params = 0;         // every expert counted, embeddings excluded
  Count n_params_active = 0;  // parameters engaged per token
  Count dataset_tokens = 0;
  double compute = 0.0;         // FLOPs
  double predicted_loss = 0.0;  // nats
  Count critical_batch_tokens = 0;
};

struct ParameterCount {
  Count total = 0;
  Count active = 0;
};

constexpr Count kDModelAlignment = 64;

/// Architecture fields (d_ff, L, E) for one hidden size. Throws
/// std::invalid_argument unless d_model is a positive multiple of 64.
ModelPoint derive_architecture(Count d_model, Count seq_len, const ScalingConfig& cfg = {});

/// Exact parameter counts: per layer 4*d^2 attention plus 2*d*d_ff per expert.
/// Throws OverflowError if a count leaves uint64.
ParameterCount count_parameters(const ModelPoint& arch, const ScalingConfig& cfg = {});

/// Predicted loss for N active parameters trained on D tokens.
double chinchilla_loss(double n_params, double tokens, const ScalingConfig& cfg = {});

/// Critical batch size in tokens, rounded to the nearest positive multiple of seq_len.
Count critical_batch_tokens(double compute, Count seq_len, const ScalingConfig& cfg = {});

/// Fills dataset_tokens, compute, predicted_loss and critical_batch_tokens.
/// Expects the parameter counts to be populated already.
ModelPoint derive_training_requirements(ModelPoint point, const ScalingConfig& cfg = {});

/// derive_architecture + count_parameters + derive_training_requirements.
ModelPoint make_point(Count d_model, Count seq_len, const ScalingConfig& cfg = {});

/// One point per hidden size. The list must be nonempty and strictly
/// increasing; per-point failures are rethrown naming the offending d_model.
std::vector<ModelPoint> sweep(std::span<const Count> d_models, Count seq_len,
                              const ScalingConfig& cfg = {});

/// `count` hidden sizes spaced geometrically between lo and hi, each rounded
/// to a multiple of 64. Duplicates after rounding are dropped.
std::vector<Count> geometric_d_models(Count lo, Count hi, Count count);

/// The multiple-of-64 hidden size whose active parameter count is closest to
/// `target` on a log scale.
Count d_model_for_active_params(double target, const ScalingConfig& cfg = {});

}  // namespace carbonlaw
