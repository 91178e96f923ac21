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

#include "carbonlaw/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include <fmt/format.h>

namespace carbonlaw {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto pos = s.find(sep);
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
  throw ConfigError(fmt::format("{}: invalid value '{}': {}", key, value, why));
}

double to_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    bad(key, text, "expected a number");
  }
  return v;
}

double to_positive(std::string_view key, std::string_view text) {
  const double v = to_double(key, text);
  if (!(v > 0)) bad(key, text, "must be positive");
  return v;
}

double to_fraction(std::string_view key, std::string_view text) {
  const double v = to_double(key, text);
  if (!(v > 0 && v <= 1)) bad(key, text, "must lie in (0, 1]");
  return v;
}

Count to_count(std::string_view key, std::string_view text) {
  text = trim(text);
  Count v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc() && ptr == text.data() + text.size()) return v;
  const double d = to_double(key, text);
  if (d < 0 || d >= 18446744073709551616.0 || std::floor(d) != d) {
    bad(key, text, "expected a non-negative integer");
  }
  return static_cast<Count>(d);
}

Count to_positive_count(std::string_view key, std::string_view text) {
  const Count v = to_count(key, text);
  if (v == 0) bad(key, text, "must be positive");
  return v;
}

bool to_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  for (auto t : {"true", "yes", "on", "1"}) {
    if (text == t) return true;
  }
  for (auto f : {"false", "no", "off", "0"}) {
    if (text == f) return false;
  }
  bad(key, text, "expected true or false");
}

// Values collected from every key before the pieces are assembled.
struct Scratch {
  std::string d_model_list;
  std::string d_model_range;
  std::string active_params;
  std::string gpu_name;
  std::string gpu_file;
  double gpu_years = 0.0;
  std::optional<double> internode_bandwidth;
  std::optional<double> static_fraction;
  std::optional<double> core_power_share;
  std::optional<double> sram_capacity_scale;
  std::string scenarios;
  double aggressive_beta = kAggressiveBatchExponent;
  double sharding = kFlexibleShardingFactor;
  double eviction = kDynamicEvictionFactor;
};

using Apply = std::function<void(ResolvedConfig&, Scratch&, std::string_view key, std::string_view)>;

struct KeyDef {
  ConfigKey key;
  Apply apply;
};

template <typename F>
KeyDef def(std::string name, std::string default_value, std::string help, F f) {
  return {{std::move(name), std::move(default_value), std::move(help)}, Apply(f)};
}

#define CARBONLAW_FIELD(NAME, DEFAULT, HELP, FIELD, PARSE)                            \
  def(NAME, DEFAULT, HELP, [](ResolvedConfig& r, Scratch&, std::string_view k,         \
                               std::string_view v) { r.FIELD = PARSE(k, v); })

const std::vector<KeyDef>& registry() {
  static const std::vector<KeyDef> defs = [] {
    std::vector<KeyDef> d;
    d.push_back(def("sweep.d_model", "", "comma-separated hidden sizes",
                    [](ResolvedConfig&, Scratch& s, auto, auto v) { s.d_model_list = v; }));
    d.push_back(def("sweep.d_model_range", "4096:32768:5", "lo:hi:count, geometric",
                    [](ResolvedConfig&, Scratch& s, auto, auto v) { s.d_model_range = v; }));
    d.push_back(def("sweep.active_params", "",
                    "lo:hi:count in active parameters, geometric",
                    [](ResolvedConfig&, Scratch& s, auto, auto v) { s.active_params = v; }));
    d.push_back(CARBONLAW_FIELD("seq_len", "2048", "tokens per sequence", seq_len,
                                 to_positive_count));

    d.push_back(def("gpu", "B100", "builtin GPU (V100, A100, H100, B100)",
                    [](ResolvedConfig&, Scratch& s, auto, auto v) { s.gpu_name = v; }));
    d.push_back(def("gpu.file", "", "custom GPU definition file",
                    [](ResolvedConfig&, Scratch& s, auto, auto v) { s.gpu_file = v; }));
    d.push_back(def("gpu.years", "0", "project the GPU this many years ahead",
                    [](ResolvedConfig&, Scratch& s, auto k, auto v) {
                      s.gpu_years = to_double(k, v);
                      if (s.gpu_years < 0) bad(k, v, "must be >= 0");
                    }));
    auto gpu_field = [&d](const char* name, const char* help,
                          std::optional<double> Scratch::*field, bool fraction) {
      d.push_back(def(name, "", help, [field, fraction](ResolvedConfig&, Scratch& s, auto k,
                                                         auto v) {
        if (trim(v).empty()) return;
        s.*field = fraction ? to_fraction(k, v) : to_positive(k, v);
      }));
    };
    gpu_field("gpu.internode_bandwidth", "bytes/s per GPU", &Scratch::internode_bandwidth,
              false);
    gpu_field("gpu.static_fraction", "share of tdp drawn when idle", &Scratch::static_fraction,
              true);
    gpu_field("gpu.core_power_share", "share of tdp drawn by the cores",
              &Scratch::core_power_share, true);
    gpu_field("gpu.sram_capacity_scale", "SRAM relative to the unprojected part",
              &Scratch::sram_capacity_scale, false);

    d.push_back(CARBONLAW_FIELD("rate.core_throughput", "1.3", "per year", ctx.rates.core_throughput, to_positive));
    d.push_back(CARBONLAW_FIELD("rate.sram", "1.4", "per year", ctx.rates.sram, to_positive));
    d.push_back(CARBONLAW_FIELD("rate.core_power", "1.03", "per year", ctx.rates.core_power, to_positive));
    d.push_back(CARBONLAW_FIELD("rate.core_area", "1.05", "per year", ctx.rates.core_area, to_positive));
    d.push_back(CARBONLAW_FIELD("rate.hbm_bandwidth", "1.25", "per year", ctx.rates.hbm_bandwidth, to_positive));
    d.push_back(CARBONLAW_FIELD("rate.hbm_power", "1.03", "per year", ctx.rates.hbm_power, to_positive));
    d.push_back(CARBONLAW_FIELD("rate.hbm_capacity", "1.24", "per year", ctx.rates.hbm_capacity, to_positive));
    d.push_back(CARBONLAW_FIELD("rate.nvlink_bandwidth", "1.11", "per year", ctx.rates.nvlink_bandwidth, to_positive));

    d.push_back(CARBONLAW_FIELD("law.loss_a", "406.4", "", ctx.law.loss_a, to_positive));
    d.push_back(CARBONLAW_FIELD("law.loss_b", "410.7", "", ctx.law.loss_b, to_positive));
    d.push_back(CARBONLAW_FIELD("law.loss_e", "1.69", "irreducible loss", ctx.law.loss_e, to_positive));
    d.push_back(CARBONLAW_FIELD("law.n_exponent", "0.34", "", ctx.law.n_exponent, to_positive));
    d.push_back(CARBONLAW_FIELD("law.d_exponent", "0.28", "", ctx.law.d_exponent, to_positive));
    d.push_back(CARBONLAW_FIELD("law.tokens_per_param", "20", "D / N", ctx.law.tokens_per_param, to_positive));
    d.push_back(CARBONLAW_FIELD("law.flops_per_token_param", "6", "C / (N D)", ctx.law.flops_per_token_param, to_positive));
    d.push_back(CARBONLAW_FIELD("law.batch_exponent", "0.16666666666666666", "critical batch exponent", ctx.law.batch_exponent, to_fraction));
    d.push_back(CARBONLAW_FIELD("law.batch_ref_tokens", "1500000", "", ctx.law.batch_ref_tokens, to_positive));
    d.push_back(CARBONLAW_FIELD("law.batch_ref_flops", "5.88e23", "", ctx.law.batch_ref_flops, to_positive));
    d.push_back(CARBONLAW_FIELD("law.active_experts", "2", "top-k routing", ctx.law.active_experts, to_positive_count));
    d.push_back(CARBONLAW_FIELD("law.layer_coeff", "0.402", "", ctx.law.layer_coeff, to_positive));
    d.push_back(CARBONLAW_FIELD("law.layer_exponent", "0.75", "", ctx.law.layer_exponent, to_positive));
    d.push_back(CARBONLAW_FIELD("law.reference_d_model", "12288", "", ctx.law.reference_d_model, to_positive_count));
    d.push_back(CARBONLAW_FIELD("law.reference_experts", "8", "", ctx.law.reference_experts, to_positive_count));

    d.push_back(CARBONLAW_FIELD("search.deadline", "90 days", "training deadline", ctx.search.deadline_s,
                                 [](auto k, auto v) {
                                   try {
                                     return parse_duration(v);
                                   } catch (const ConfigError& e) {
                                     bad(k, v, e.what());
                                   }
                                 }));
    d.push_back(CARBONLAW_FIELD("search.n_gpu_cap", "0", "0 means 2^50 * E", ctx.search.n_gpu_cap, to_count));
    d.push_back(CARBONLAW_FIELD("search.max_triples", "1000000", "per GPU count", ctx.search.max_triples_per_count, to_positive_count));
    d.push_back(CARBONLAW_FIELD("perf.gemm_k", "4194304", "GEMM efficiency half-saturation", ctx.search.perf.gemm_k, to_positive));
    d.push_back(def("perf.dp_overlap", "0.5", "hidden share of the gradient all-reduce",
                    [](ResolvedConfig& r, Scratch&, auto k, auto v) {
                      const double x = to_double(k, v);
                      if (!(x >= 0 && x <= 1)) bad(k, v, "must lie in [0, 1]");
                      r.ctx.search.perf.dp_overlap = x;
                    }));

    d.push_back(def("carbon.pue", "1.1", "", [](ResolvedConfig& r, Scratch&, auto k, auto v) {
      r.ctx.carbon.pue = to_double(k, v);
      if (!(r.ctx.carbon.pue >= 1)) bad(k, v, "must be >= 1");
    }));
    d.push_back(CARBONLAW_FIELD("carbon.ci", "127", "gCO2e/kWh", ctx.carbon.carbon_intensity, to_positive));
    d.push_back(CARBONLAW_FIELD("carbon.lifetime", "5 years", "hardware lifetime", ctx.carbon.lifetime_s,
                                 [](auto k, auto v) {
                                   try {
                                     const double s = parse_duration(v);
                                     if (!(s > 0)) bad(k, v, "must be positive");
                                     return s;
                                   } catch (const ConfigError& e) {
                                     bad(k, v, e.what());
                                   }
                                 }));
    d.push_back(CARBONLAW_FIELD("carbon.gpus_per_node", "8", "", ctx.carbon.gpus_per_node, to_positive_count));
    d.push_back(CARBONLAW_FIELD("carbon.node_ssd_gb", "32768", "", ctx.carbon.node_ssd_gb, to_positive));
    d.push_back(CARBONLAW_FIELD("carbon.node_dram_gb", "256", "", ctx.carbon.node_dram_gb, to_positive));
    d.push_back(CARBONLAW_FIELD("carbon.p_sys", "600", "watts per node", ctx.carbon.p_sys, to_positive));
    d.push_back(CARBONLAW_FIELD("carbon.dram_cpa", "1.8", "kgCO2/GB, assumed equal to HBM2", ctx.carbon.dram_cpa, to_positive));
    d.push_back(CARBONLAW_FIELD("carbon.cpu_area_cm2", "6", "", ctx.carbon.cpu_area_cm2, to_positive));
    d.push_back(CARBONLAW_FIELD("carbon.ssd_cpa", "0.018", "kgCO2/GB", ctx.carbon.ssd_cpa, to_positive));
    d.push_back(CARBONLAW_FIELD("carbon.alpha", "1", "dynamic power coefficient", ctx.carbon.alpha, to_fraction));
    d.push_back(CARBONLAW_FIELD("carbon.embodied", "true", "include embodied carbon", ctx.carbon.embodied_enabled, to_bool));

    d.push_back(def("scenarios", "default", "comma-separated scenario tokens",
                    [](ResolvedConfig&, Scratch& s, auto, auto v) { s.scenarios = v; }));
    d.push_back(def("scenario.aggressive_batch_exponent", "0.33", "",
                    [](ResolvedConfig&, Scratch& s, auto k, auto v) {
                      s.aggressive_beta = to_fraction(k, v);
                    }));
    d.push_back(def("scenario.sharding_factor", "0.8", "communication volume factor",
                    [](ResolvedConfig&, Scratch& s, auto k, auto v) {
                      s.sharding = to_fraction(k, v);
                    }));
    d.push_back(def("scenario.eviction_factor", "0.8", "activation memory factor",
                    [](ResolvedConfig&, Scratch& s, auto k, auto v) {
                      s.eviction = to_fraction(k, v);
                    }));

    d.push_back(def("output.dir", "out", "", [](ResolvedConfig& r, Scratch&, auto k, auto v) {
      if (trim(v).empty()) bad(k, v, "must not be empty");
      r.output_dir = trim(v);
    }));
    d.push_back(CARBONLAW_FIELD("output.ideal", "false", "also write the ideal curve", ideal_curve, to_bool));
    d.push_back(def("workers", "1", "threads per scenario",
                    [](ResolvedConfig& r, Scratch&, auto k, auto v) {
                      r.ctx.workers = static_cast<unsigned>(
                          std::min<Count>(to_positive_count(k, v), 1024));
                    }));
    return d;
  }();
  return defs;
}

#undef CARBONLAW_FIELD

const KeyDef* find_key(std::string_view name) {
  for (const auto& d : registry()) {
    if (d.key.name == name) return &d;
  }
  return nullptr;
}

std::vector<Count> parse_sweep(const Scratch& s, const ScalingConfig& law,
                               const RunConfig& cfg) {
  const bool by_list = !trim(s.d_model_list).empty();
  const bool by_active = !trim(s.active_params).empty();
  const bool range_set = cfg.overridden("sweep.d_model_range");
  if (int(by_list) + int(by_active) + int(range_set) > 1) {
    throw ConfigError(
        "sweep.d_model, sweep.d_model_range and sweep.active_params are exclusive");
  }
  if (by_list) {
    std::vector<Count> out;
    for (auto part : split(s.d_model_list, ',')) {
      out.push_back(to_positive_count("sweep.d_model", part));
    }
    return out;
  }
  const std::string_view key = by_active ? "sweep.active_params" : "sweep.d_model_range";
  const std::string_view text = by_active ? s.active_params : s.d_model_range;
  const auto parts = split(text, ':');
  if (parts.size() != 3) bad(key, text, "expected lo:hi:count");
  const Count count = to_positive_count(key, parts[2]);
  if (by_active) {
    const double lo = to_positive(key, parts[0]);
    const double hi = to_positive(key, parts[1]);
    if (!(hi >= lo)) bad(key, text, "hi must be >= lo");
    std::vector<Count> out;
    for (Count i = 0; i < count; ++i) {
      const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
      const Count d = d_model_for_active_params(lo * std::pow(hi / lo, t), law);
      if (out.empty() || d > out.back()) out.push_back(d);
    }
    return out;
  }
  const Count lo = to_positive_count(key, parts[0]);
  const Count hi = to_positive_count(key, parts[1]);
  if (hi < lo) bad(key, text, "hi must be >= lo");
  return geometric_d_models(lo, hi, count);
}

GpuSpec resolve_gpu(const Scratch& s) {
  GpuSpec gpu;
  if (!trim(s.gpu_file).empty()) {
    gpu = load_gpu_file(std::string(trim(s.gpu_file)));
  } else {
    try {
      gpu = builtin_gpu(trim(s.gpu_name));
    } catch (const std::invalid_argument& e) {
      bad("gpu", s.gpu_name, e.what());
    }
  }
  if (s.internode_bandwidth) gpu.internode_bandwidth = *s.internode_bandwidth;
  if (s.static_fraction) gpu.static_fraction = *s.static_fraction;
  if (s.core_power_share) gpu.core_power_share = *s.core_power_share;
  if (s.sram_capacity_scale) gpu.sram_capacity_scale = *s.sram_capacity_scale;
  try {
    validate(gpu);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("gpu: {}", e.what()));
  }
  return gpu;
}

double gpu_field_value(std::string_view source, std::string_view key, std::string_view value) {
  return to_double(fmt::format("{}: {}", source, key), value);
}

}  // namespace

double parse_duration(std::string_view text) {
  text = trim(text);
  std::size_t split_at = 0;
  while (split_at < text.size() &&
         (std::isdigit(static_cast<unsigned char>(text[split_at])) || text[split_at] == '.' ||
          text[split_at] == 'e' || text[split_at] == 'E' || text[split_at] == '+' ||
          text[split_at] == '-')) {
    // An 'e' is an exponent only when digits follow.
    if ((text[split_at] == 'e' || text[split_at] == 'E') &&
        (split_at + 1 >= text.size() ||
         !(std::isdigit(static_cast<unsigned char>(text[split_at + 1])) ||
           text[split_at + 1] == '-' || text[split_at + 1] == '+'))) {
      break;
    }
    ++split_at;
  }
  const std::string_view number = text.substr(0, split_at);
  const std::string_view unit = trim(text.substr(split_at));
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), v);
  if (number.empty() || ec != std::errc() || ptr != number.data() + number.size() ||
      !std::isfinite(v) || v < 0) {
    throw ConfigError(fmt::format("cannot parse duration '{}'", text));
  }
  struct Unit {
    std::string_view name;
    double seconds;
  };
  static constexpr Unit units[] = {
      {"", 1.0},           {"s", 1.0},
      {"sec", 1.0},        {"second", 1.0},
      {"seconds", 1.0},    {"min", 60.0},
      {"minute", 60.0},    {"minutes", 60.0},
      {"h", kSecondsPerHour},  {"hour", kSecondsPerHour},
      {"hours", kSecondsPerHour}, {"d", kSecondsPerDay},
      {"day", kSecondsPerDay},    {"days", kSecondsPerDay},
      {"week", 7 * kSecondsPerDay}, {"weeks", 7 * kSecondsPerDay},
      {"month", 30 * kSecondsPerDay}, {"months", 30 * kSecondsPerDay},
      {"y", kSecondsPerYear},     {"year", kSecondsPerYear},
      {"years", kSecondsPerYear},
  };
  for (const Unit& u : units) {
    if (unit == u.name) return v * u.seconds;
  }
  throw ConfigError(fmt::format("unknown duration unit '{}'", unit));
}

std::vector<ModelPoint> ResolvedConfig::points() const {
  return sweep(d_models, seq_len, ctx.law);
}

const std::vector<ConfigKey>& RunConfig::keys() {
  static const std::vector<ConfigKey> out = [] {
    std::vector<ConfigKey> k;
    for (const auto& d : registry()) k.push_back(d.key);
    return k;
  }();
  return out;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  if (!find_key(key)) throw ConfigError(fmt::format("unknown configuration key '{}'", key));
  overrides_[std::string(key)] = std::string(trim(value));
}

void RunConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(fmt::format("expected key=value, got '{}'", assignment));
  }
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfig::load(std::istream& in, std::string_view source) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("{}:{}: expected key = value", source, lineno));
    }
    try {
      set(v.substr(0, eq), v.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", source, lineno, e.what()));
    }
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config file '{}'", path));
  load(in, path);
}

std::string RunConfig::value(std::string_view key) const {
  const KeyDef* d = find_key(key);
  if (!d) throw ConfigError(fmt::format("unknown configuration key '{}'", key));
  const auto it = overrides_.find(key);
  return it != overrides_.end() ? it->second : d->key.default_value;
}

bool RunConfig::overridden(std::string_view key) const { return overrides_.contains(key); }

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& d : registry()) {
    // Keys that cannot change any output value stay out of the digest.
    if (d.key.name == "workers" || d.key.name == "output.dir") continue;
    out += fmt::format("{} = {}\n", d.key.name, value(d.key.name));
  }
  return out;
}

std::string RunConfig::provenance() const {
  std::string out;
  for (const auto& d : registry()) {
    out += fmt::format("{} = {}  # {}{}{}\n", d.key.name, value(d.key.name),
                       overridden(d.key.name) ? "override" : "default",
                       d.key.help.empty() ? "" : "; ", d.key.help);
  }
  return out;
}

std::string RunConfig::digest() const { return fnv1a_hex(canonical()); }

ResolvedConfig RunConfig::resolve() const {
  ResolvedConfig r;
  Scratch s;
  for (const auto& d : registry()) d.apply(r, s, d.key.name, value(d.key.name));

  r.gpu = resolve_gpu(s);
  try {
    validate(r.ctx.carbon);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  try {
    r.d_models = parse_sweep(s, r.ctx.law, *this);
    // Surface per-point problems (alignment, overflow) before any search runs.
    (void)r.points();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("sweep: {}", e.what()));
  }

  GpuSpec configured = r.gpu;
  if (s.gpu_years > 0) configured = project(configured, s.gpu_years, r.ctx.rates);
  for (auto token : split(s.scenarios, ',')) {
    if (token.empty()) continue;
    r.scenarios.push_back(parse_scenario(token, configured, s.aggressive_beta, s.sharding,
                                         s.eviction, r.ctx.law.batch_exponent));
  }
  if (r.scenarios.empty()) throw ConfigError("scenarios: at least one scenario is required");
  return r;
}

GpuSpec parse_gpu(std::istream& in, std::string_view source) {
  std::map<std::string, std::string, std::less<>> fields;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("{}:{}: expected key = value", source, lineno));
    }
    fields[std::string(trim(v.substr(0, eq)))] = std::string(trim(v.substr(eq + 1)));
  }

  GpuSpec gpu;
  bool have_base = false;
  if (auto it = fields.find("base"); it != fields.end()) {
    try {
      gpu = builtin_gpu(it->second);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("{}: base: {}", source, e.what()));
    }
    have_base = true;
    fields.erase(it);
  }

  struct Field {
    const char* name;
    double GpuSpec::*member;
  };
  static constexpr Field numeric[] = {
      {"peak_flops", &GpuSpec::peak_flops},
      {"hbm_capacity", &GpuSpec::hbm_capacity},
      {"hbm_bandwidth", &GpuSpec::hbm_bandwidth},
      {"nvlink_bandwidth", &GpuSpec::nvlink_bandwidth},
      {"internode_bandwidth", &GpuSpec::internode_bandwidth},
      {"tdp", &GpuSpec::tdp},
      {"static_fraction", &GpuSpec::static_fraction},
      {"die_area", &GpuSpec::die_area},
      {"logic_cpa", &GpuSpec::logic_cpa},
      {"hbm_cpa", &GpuSpec::hbm_cpa},
      {"sram_capacity_scale", &GpuSpec::sram_capacity_scale},
      {"core_power_share", &GpuSpec::core_power_share},
  };
  auto take = [&](std::string_view key) -> std::optional<std::string> {
    const auto it = fields.find(key);
    if (it == fields.end()) return std::nullopt;
    std::string v = it->second;
    fields.erase(it);
    return v;
  };
  auto require = [&](std::string_view key) {
    if (!have_base) throw ConfigError(fmt::format("{}: missing field '{}'", source, key));
  };

  if (auto v = take("name")) gpu.name = *v; else require("name");
  if (auto v = take("process_node")) {
    gpu.process_node = *v;
    if (!fields.contains("logic_cpa")) {
      try {
        gpu.logic_cpa = logic_cpa_for_node(gpu.process_node);
      } catch (const std::invalid_argument&) {
      }
    }
  } else {
    require("process_node");
  }
  const bool has_internode = fields.contains("internode_bandwidth");
  const bool has_static = fields.contains("static_fraction");
  for (const Field& f : numeric) {
    if (auto v = take(f.name)) {
      gpu.*f.member = gpu_field_value(source, f.name, *v);
    } else if (!have_base) {
      const std::string_view n = f.name;
      if (n == "sram_capacity_scale" || n == "core_power_share") continue;
      if (n == "internode_bandwidth" && !has_internode) {
        gpu.internode_bandwidth = kDefaultInternodeBandwidth;
        continue;
      }
      if (n == "static_fraction" && !has_static) {
        gpu.static_fraction = kDefaultStaticFraction;
        continue;
      }
      if (n == "logic_cpa" && gpu.logic_cpa > 0) continue;
      require(n);
    }
  }
  if (!fields.empty()) {
    throw ConfigError(fmt::format("{}: unknown GPU field '{}'", source, fields.begin()->first));
  }
  try {
    validate(gpu);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.what()));
  }
  return gpu;
}

GpuSpec load_gpu_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open GPU file '{}'", path));
  return parse_gpu(in, path);
}

ScenarioConfig parse_scenario(std::string_view token, const GpuSpec& configured,
                              double aggressive_beta, double sharding, double eviction,
                              double base_beta) {
  ScenarioConfig s;
  s.name = std::string(token);
  s.gpu = configured;
  s.batch_exponent = base_beta;

  std::string_view toggles = token;
  if (const auto at = token.find('@'); at != std::string_view::npos) {
    toggles = token.substr(0, at);
    std::string_view gpu = token.substr(at + 1);
    double years = 0.0;
    if (const auto plus = gpu.find('+'); plus != std::string_view::npos) {
      std::string_view y = gpu.substr(plus + 1);
      if (y.empty() || (y.back() != 'y' && y.back() != 'Y')) {
        bad("scenarios", token, "projection must look like NAME+Ny");
      }
      years = to_double("scenarios", y.substr(0, y.size() - 1));
      if (years < 0) bad("scenarios", token, "projection years must be >= 0");
      gpu = gpu.substr(0, plus);
    }
    GpuSpec base;
    if (gpu == configured.name) {
      base = configured;
    } else {
      try {
        base = builtin_gpu(gpu);
      } catch (const std::invalid_argument& e) {
        bad("scenarios", token, e.what());
      }
      base.internode_bandwidth = configured.internode_bandwidth;
    }
    s.gpu = base;
    s.years = years;
  }

  for (auto t : split(toggles, '+')) {
    if (t == "default" || t.empty()) continue;
    if (t == "no-embodied") s.embodied_enabled = false;
    else if (t == "static-swap") s.static_swap = true;
    else if (t == "ideal") s.ideal_mode = true;
    else if (t == "median") s.median_parallelism = true;
    else if (t == "aggressive-batch") s.batch_exponent = aggressive_beta;
    else if (t == "sharding") s.sharding_comm_factor = sharding;
    else if (t == "eviction") s.eviction_mem_factor = eviction;
    else bad("scenarios", token, fmt::format("unknown toggle '{}'", t));
  }
  try {
    validate(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("scenarios: {}", e.what()));
  }
  return s;
}

}  // namespace carbonlaw
