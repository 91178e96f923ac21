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

#include "carbonlaw/scaling_laws.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace carbonlaw {

ModelPoint derive_architecture(Count d_model, Count seq_len, const ScalingConfig& cfg) {
  if (d_model < kDModelAlignment || d_model % kDModelAlignment != 0) {
    throw std::invalid_argument(fmt::format(
        "d_model={} must be a positive multiple of {}", d_model, kDModelAlignment));
  }
  if (seq_len == 0) throw std::invalid_argument("seq_len must be positive");

  ModelPoint p;
  p.d_model = d_model;
  p.seq_len = seq_len;
  p.d_ff = checked_mul(4, d_model, "d_ff");
  const double dm = static_cast<double>(d_model);
  p.n_layers = std::max<Count>(
      1, static_cast<Count>(std::llround(cfg.layer_coeff * std::pow(dm, cfg.layer_exponent))));
  const double experts = static_cast<double>(cfg.reference_experts) * dm /
                         static_cast<double>(cfg.reference_d_model);
  p.n_experts = std::max<Count>(1, static_cast<Count>(std::llround(experts)));
  return p;
}

ParameterCount count_parameters(const ModelPoint& arch, const ScalingConfig& cfg) {
  if (arch.d_model == 0 || arch.d_ff == 0 || arch.n_layers == 0 || arch.n_experts == 0) {
    throw std::invalid_argument("count_parameters: architecture fields not populated");
  }
  const Count d2 = checked_mul(arch.d_model, arch.d_model, "d_model^2");
  const Count attention = checked_mul(4, d2, "attention parameters");
  const Count expert =
      checked_mul(2, checked_mul(arch.d_model, arch.d_ff, "d_model*d_ff"), "expert parameters");
  const Count k_act = std::min(cfg.active_experts, arch.n_experts);

  auto per_layer = [&](Count experts, const char* what) {
    const Count ffn = checked_mul(experts, expert, what);
    if (ffn > UINT64_MAX - attention) {
      throw OverflowError(fmt::format("integer overflow computing {}", what));
    }
    return attention + ffn;
  };
  ParameterCount out;
  out.total = checked_mul(arch.n_layers, per_layer(arch.n_experts, "n_params"), "n_params");
  out.active =
      checked_mul(arch.n_layers, per_layer(k_act, "n_params_active"), "n_params_active");
  return out;
}

double chinchilla_loss(double n_params, double tokens, const ScalingConfig& cfg) {
  return cfg.loss_a * std::pow(n_params, -cfg.n_exponent) +
         cfg.loss_b * std::pow(tokens, -cfg.d_exponent) + cfg.loss_e;
}

Count critical_batch_tokens(double compute, Count seq_len, const ScalingConfig& cfg) {
  const double raw =
      cfg.batch_ref_tokens * std::pow(compute / cfg.batch_ref_flops, cfg.batch_exponent);
  return round_to_multiple(raw, seq_len);
}

ModelPoint derive_training_requirements(ModelPoint p, const ScalingConfig& cfg) {
  if (p.n_params_active == 0 || p.n_params == 0) {
    throw std::invalid_argument("derive_training_requirements: parameter counts not populated");
  }
  const double n_active = static_cast<double>(p.n_params_active);
  // Integral ratios stay exact; doubles lose integers above 2^53.
  if (cfg.tokens_per_param >= 1.0 && std::floor(cfg.tokens_per_param) == cfg.tokens_per_param &&
      cfg.tokens_per_param < 1e18) {
    p.dataset_tokens = checked_mul(static_cast<Count>(cfg.tokens_per_param), p.n_params_active,
                                   "dataset_tokens");
  } else {
    const double d = std::round(cfg.tokens_per_param * n_active);
    if (!(d >= 1.0) || d >= 1.8e19) throw OverflowError("dataset_tokens out of range");
    p.dataset_tokens = static_cast<Count>(d);
  }
  const double tokens = static_cast<double>(p.dataset_tokens);
  p.compute = cfg.flops_per_token_param * n_active * tokens;
  if (!std::isfinite(p.compute)) throw OverflowError("compute is not finite");
  p.predicted_loss = chinchilla_loss(n_active, tokens, cfg);
  p.critical_batch_tokens = critical_batch_tokens(p.compute, p.seq_len, cfg);
  return p;
}

ModelPoint make_point(Count d_model, Count seq_len, const ScalingConfig& cfg) {
  ModelPoint p = derive_architecture(d_model, seq_len, cfg);
  const ParameterCount counts = count_parameters(p, cfg);
  p.n_params = counts.total;
  p.n_params_active = counts.active;
  return derive_training_requirements(p, cfg);
}

std::vector<ModelPoint> sweep(std::span<const Count> d_models, Count seq_len,
                              const ScalingConfig& cfg) {
  if (d_models.empty()) throw std::invalid_argument("sweep: d_model list is empty");
  std::vector<ModelPoint> out;
  out.reserve(d_models.size());
  for (std::size_t i = 0; i < d_models.size(); ++i) {
    if (i > 0 && d_models[i] <= d_models[i - 1]) {
      throw std::invalid_argument(
          fmt::format("sweep: d_model list must be strictly increasing (d_model={} after {})",
                      d_models[i], d_models[i - 1]));
    }
    try {
      out.push_back(make_point(d_models[i], seq_len, cfg));
    } catch (const OverflowError& e) {
      throw OverflowError(fmt::format("d_model={}: {}", d_models[i], e.what()));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(fmt::format("d_model={}: {}", d_models[i], e.what()));
    }
  }
  return out;
}

std::vector<Count> geometric_d_models(Count lo, Count hi, Count count) {
  if (lo == 0 || hi < lo || count == 0) {
    throw std::invalid_argument("geometric_d_models: need 0 < lo <= hi and count >= 1");
  }
  std::vector<Count> out;
  const double ratio = count > 1 ? std::pow(static_cast<double>(hi) / static_cast<double>(lo),
                                            1.0 / static_cast<double>(count - 1))
                                 : 1.0;
  for (Count i = 0; i < count; ++i) {
    const double v = static_cast<double>(lo) * std::pow(ratio, static_cast<double>(i));
    const Count d = round_to_multiple(v, kDModelAlignment);
    if (out.empty() || d > out.back()) out.push_back(d);
  }
  return out;
}

Count d_model_for_active_params(double target, const ScalingConfig& cfg) {
  if (!(target > 0)) throw std::invalid_argument("target parameter count must be positive");
  auto active = [&](Count d) {
    ModelPoint arch = derive_architecture(d, 1, cfg);
    return static_cast<double>(count_parameters(arch, cfg).active);
  };
  // Active parameters grow monotonically with d_model; bisect on multiples of 64.
  Count lo = 1;
  Count hi = 1;
  while (active(hi * kDModelAlignment) < target) hi *= 2;
  while (lo < hi) {
    const Count mid = lo + (hi - lo) / 2;
    if (active(mid * kDModelAlignment) < target) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  Count best = lo;
  if (lo > 1) {
    const double above = std::log(active(lo * kDModelAlignment) / target);
    const double below = std::log(target / active((lo - 1) * kDModelAlignment));
    if (below < above) best = lo - 1;
  }
  return best * kDModelAlignment;
}

}  // namespace carbonlaw
