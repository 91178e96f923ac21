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

#include "carbonlaw/cli.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "carbonlaw/carbon_model.hpp"
#include "carbonlaw/config.hpp"
#include "carbonlaw/hardware_catalog.hpp"
#include "carbonlaw/parallelism_search.hpp"
#include "carbonlaw/perf_model.hpp"
#include "carbonlaw/scenarios.hpp"

namespace carbonlaw {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// Options every configuration-driven subcommand accepts.
struct CommonOptions {
  std::string config_file;
  std::vector<std::string> assignments;
  std::optional<std::string> gpu;
  std::optional<unsigned> workers;
  std::optional<std::string> out_dir;

  void attach(CLI::App* app, bool with_output) {
    app->add_option("-c,--config", config_file, "configuration file (key = value)");
    app->add_option("-s,--set", assignments, "override one key: KEY=VALUE (repeatable)");
    app->add_option("--gpu", gpu, "builtin GPU name, shorthand for --set gpu=NAME");
    if (with_output) {
      app->add_option("-j,--workers", workers, "worker threads")->check(CLI::PositiveNumber);
      app->add_option("-o,--out", out_dir, "output directory");
    }
  }

  RunConfig build() const {
    RunConfig cfg;
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& a : assignments) cfg.set_assignment(a);
    if (gpu) cfg.set("gpu", *gpu);
    if (workers) cfg.set("workers", std::to_string(*workers));
    if (out_dir) cfg.set("output.dir", *out_dir);
    return cfg;
  }
};

std::string file_stem(std::string_view name) {
  std::string out;
  for (char c : name) {
    out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_';
  }
  return out;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(fmt::format("cannot write '{}'", path.string()));
  return os;
}

void close_output(std::ofstream& os, const fs::path& path) {
  os.close();
  if (!os) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

ordered_json gpu_json(const GpuSpec& g) {
  return {{"name", g.name},
          {"process_node", g.process_node},
          {"peak_flops", g.peak_flops},
          {"hbm_capacity", g.hbm_capacity},
          {"hbm_bandwidth", g.hbm_bandwidth},
          {"nvlink_bandwidth", g.nvlink_bandwidth},
          {"internode_bandwidth", g.internode_bandwidth},
          {"tdp", g.tdp},
          {"static_fraction", g.static_fraction},
          {"die_area", g.die_area},
          {"logic_cpa", g.logic_cpa},
          {"hbm_cpa", g.hbm_cpa},
          {"sram_capacity_scale", g.sram_capacity_scale},
          {"core_power_share", g.core_power_share}};
}

ordered_json report_json(const CarbonReport& r) {
  return {{"n_gpu", r.n_gpu},
          {"duration_s", r.duration_s},
          {"utilization", r.utilization},
          {"op_gpu_t", r.op_gpu_t},
          {"op_other_t", r.op_other_t},
          {"emb_gpu_logic_t", r.emb_gpu_logic_t},
          {"emb_hbm_t", r.emb_hbm_t},
          {"emb_cpu_t", r.emb_cpu_t},
          {"emb_dram_t", r.emb_dram_t},
          {"emb_ssd_t", r.emb_ssd_t},
          {"total_t", r.total_t}};
}

ordered_json provenance_json(const RunConfig& cfg) {
  ordered_json out = ordered_json::array();
  for (const auto& k : RunConfig::keys()) {
    out.push_back({{"key", k.name},
                   {"value", cfg.value(k.name)},
                   {"source", cfg.overridden(k.name) ? "override" : "default"}});
  }
  return out;
}

void print_json_fields(std::ostream& out, const ordered_json& obj) {
  for (const auto& [k, v] : obj.items()) {
    if (v.is_string()) {
      fmt::print(out, "{} = {}\n", k, v.get<std::string>());
    } else if (v.is_number_float()) {
      fmt::print(out, "{} = {}\n", k, v.get<double>());
    } else {
      fmt::print(out, "{} = {}\n", k, v.dump());
    }
  }
}

// The GPU the configuration selects, after gpu.years.
GpuSpec configured_gpu(const ResolvedConfig& r, const RunConfig& cfg) {
  const double years = std::stod(cfg.value("gpu.years"));
  return years > 0 ? project(r.gpu, years, r.ctx.rates) : r.gpu;
}

int cmd_sweep(const RunConfig& cfg, bool ideal_flag, std::ostream& out, std::ostream& err) {
  const ResolvedConfig r = cfg.resolve();
  const std::vector<ModelPoint> points = r.points();
  const std::string digest = cfg.digest();

  const fs::path dir = r.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));

  std::vector<ScenarioResult> results;
  for (const ScenarioConfig& s : r.scenarios) results.push_back(run_scenario(points, s, r.ctx));
  if (ideal_flag || r.ideal_curve) {
    ScenarioConfig ideal;
    ideal.name = "ideal";
    ideal.gpu = configured_gpu(r, cfg);
    ideal.ideal_mode = true;
    ideal.batch_exponent = r.ctx.law.batch_exponent;
    results.push_back(run_scenario(points, ideal, r.ctx));
  }

  std::vector<std::pair<std::string, PowerLawFit>> fits;
  std::size_t failures = 0;
  for (const ScenarioResult& res : results) {
    const fs::path path = dir / (file_stem(res.name) + ".csv");
    std::ofstream os = open_output(path);
    write_scenario_csv(os, res, digest);
    close_output(os, path);
    fmt::print(out, "wrote {}\n", path.string());

    failures += res.failures();
    for (const ScenarioRow& row : res.rows) {
      if (!row.ok()) fmt::print(err, "{}: {}\n", res.name, row.status);
    }
    try {
      fits.emplace_back(res.name, fit_scenario(res));
    } catch (const std::invalid_argument& e) {
      fmt::print(err, "{}: no fit: {}\n", res.name, e.what());
    }
  }

  const fs::path fits_path = dir / "fits.csv";
  std::ofstream fits_os = open_output(fits_path);
  write_fits_csv(fits_os, fits, digest);
  close_output(fits_os, fits_path);
  fmt::print(out, "wrote {}\n", fits_path.string());

  const fs::path cfg_path = dir / "config.txt";
  std::ofstream cfg_os = open_output(cfg_path);
  cfg_os << output_header(digest) << '\n' << cfg.provenance();
  close_output(cfg_os, cfg_path);

  return failures > 0 ? kExitInfeasible : kExitOk;
}

int cmd_search(const RunConfig& cfg, Count d_model, const std::string& diagnostics, bool median,
               std::ostream& out) {
  const ResolvedConfig r = cfg.resolve();
  const GpuSpec gpu = configured_gpu(r, cfg);
  const ModelPoint point = make_point(d_model, r.seq_len, r.ctx.law);

  std::ofstream diag_file;
  std::ostream* diag = nullptr;
  if (diagnostics == "-") {
    diag = &out;
  } else if (!diagnostics.empty()) {
    diag_file = open_output(diagnostics);
    diag = &diag_file;
  }
  DiagnosticsSink sink;
  if (diag) {
    write_candidate_header(*diag);
    sink = [diag](const CandidateRecord& rec) { write_candidate_row(*diag, rec); };
  }

  const ParallelismPlan plan = search(point, gpu, r.ctx.search, sink);
  if (diag_file.is_open()) close_output(diag_file, diagnostics);
  const ParallelismPlan shown = median ? median_latency_plan(point, gpu, r.ctx.search) : plan;
  const ParallelLayout& l = shown.layout;

  fmt::print(out, "{}\n", output_header(cfg.digest()));
  fmt::print(out, "gpu = {}\n", gpu.name);
  fmt::print(out, "d_model = {}\nn_layers = {}\nn_experts = {}\nn_params = {}\n", point.d_model,
             point.n_layers, point.n_experts, point.n_params);
  fmt::print(out, "n_params_active = {}\ncompute = {}\ncritical_batch_tokens = {}\n",
             point.n_params_active, point.compute, point.critical_batch_tokens);
  fmt::print(out, "plan = {}\n", median ? "median" : "optimal");
  fmt::print(out, "n_gpu = {}\nn_tp = {}\nn_dp = {}\nn_pp = {}\nn_ep = {}\n", shown.n_gpu, l.tp,
             l.dp, l.pp, l.ep);
  fmt::print(out, "microbatch_tokens = {}\nn_microbatches = {}\n", l.microbatch_tokens,
             l.n_microbatches);
  fmt::print(out, "duration_s = {}\nduration_days = {}\nutilization = {}\n", shown.duration_s,
             shown.duration_s / kSecondsPerDay, shown.utilization);
  fmt::print(out, "memory_bytes = {}\nstep_s = {}\n", shown.memory.total_bytes,
             shown.step.total_s);
  return kExitOk;
}

int cmd_estimate(const RunConfig& cfg, Count n_gpu, const std::string& duration,
                 double utilization, const std::string& format, std::ostream& out) {
  const ResolvedConfig r = cfg.resolve();
  const GpuSpec gpu = configured_gpu(r, cfg);
  double duration_s = 0.0;
  try {
    duration_s = parse_duration(duration);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("--duration: {}", e.what()));
  }
  if (!(utilization >= 0 && utilization <= 1)) {
    throw ConfigError(fmt::format("--utilization must lie in [0, 1] (got {})", utilization));
  }
  const CarbonReport report = total_carbon({n_gpu, duration_s, utilization}, gpu, r.ctx.carbon);

  ordered_json doc;
  doc["version"] = CARBONLAW_VERSION;
  doc["config_digest"] = cfg.digest();
  doc["report"] = report_json(report);
  doc["gpu"] = gpu_json(gpu);
  doc["parameters"] = provenance_json(cfg);

  if (format == "json") {
    out << doc.dump(2) << '\n';
    return kExitOk;
  }
  fmt::print(out, "{}\n", output_header(cfg.digest()));
  print_json_fields(out, doc["report"]);
  fmt::print(out, "# gpu\n");
  print_json_fields(out, doc["gpu"]);
  fmt::print(out, "# parameters\n{}", cfg.provenance());
  return kExitOk;
}

int cmd_gpu_project(const RunConfig& cfg, const std::string& name, double years,
                    const std::string& format, std::ostream& out) {
  const ResolvedConfig r = cfg.resolve();
  GpuSpec base = r.gpu;
  if (!name.empty() && name != base.name) {
    try {
      base = builtin_gpu(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("--gpu: {}", e.what()));
    }
  }
  if (!(years >= 0)) throw ConfigError(fmt::format("--years must be >= 0 (got {})", years));
  const ordered_json doc = gpu_json(project(base, years, r.ctx.rates));
  if (format == "json") {
    out << doc.dump(2) << '\n';
  } else {
    print_json_fields(out, doc);
  }
  return kExitOk;
}

std::vector<GemmSample> read_gemm_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path));
  std::vector<GemmSample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 3) {
      throw ConfigError(fmt::format("{}:{}: expected tokens,d_model,measured_s", path, lineno));
    }
    if (!cells[0].empty() && std::isalpha(static_cast<unsigned char>(cells[0][0]))) continue;
    try {
      out.push_back({std::stod(cells[0]), std::stod(cells[1]), std::stod(cells[2])});
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("{}:{}: not a number", path, lineno));
    }
  }
  return out;
}

int cmd_calibrate(const RunConfig& cfg, const std::string& table, std::ostream& out) {
  const ResolvedConfig r = cfg.resolve();
  const GpuSpec gpu = configured_gpu(r, cfg);
  const std::vector<GemmSample> samples = read_gemm_table(table);
  GemmCalibration cal;
  try {
    cal = calibrate_gemm_k(samples, gpu);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", table, e.what()));
  }
  fmt::print(out, "gpu = {}\nsamples = {}\nperf.gemm_k = {}\nr2 = {}\n", gpu.name, cal.n_samples,
             cal.k, cal.r_squared);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Carbon footprint of compute-optimal LLM training", "carbonlaw"};
  app.set_version_flag("--version", std::string(CARBONLAW_VERSION));
  app.require_subcommand(1);

  CommonOptions sweep_opts;
  bool ideal_flag = false;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run every configured scenario over the sweep");
  sweep_opts.attach(sweep_cmd, true);
  sweep_cmd->add_flag("--ideal", ideal_flag, "also write the ideal curve");

  CommonOptions search_opts;
  Count d_model = 0;
  std::string diagnostics;
  bool median = false;
  CLI::App* search_cmd = app.add_subcommand("search", "optimal parallelism plan for one model");
  search_opts.attach(search_cmd, false);
  search_cmd->add_option("-d,--d-model", d_model, "hidden size")->required();
  search_cmd->add_option("--diagnostics", diagnostics,
                         "write every evaluated candidate as CSV to FILE ('-' for stdout)");
  search_cmd->add_flag("--median", median, "print the median-latency plan instead");

  CommonOptions estimate_opts;
  Count n_gpu = 0;
  std::string duration;
  double utilization = 0.0;
  std::string format = "text";
  CLI::App* estimate_cmd = app.add_subcommand("estimate", "carbon report for an explicit plan");
  estimate_opts.attach(estimate_cmd, false);
  estimate_cmd->add_option("-n,--n-gpu", n_gpu, "GPU count")->required();
  estimate_cmd->add_option("--duration", duration, "run length, e.g. '90 days' or '1 h'")
      ->required();
  estimate_cmd->add_option("-u,--utilization", utilization, "average utilization")->required();
  estimate_cmd->add_option("--format", format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  CommonOptions project_opts;
  std::string project_gpu;
  double years = 0.0;
  std::string project_format = "text";
  CLI::App* project_cmd = app.add_subcommand("gpu-project", "project a GPU into the future");
  project_cmd->add_option("-c,--config", project_opts.config_file, "configuration file");
  project_cmd->add_option("-s,--set", project_opts.assignments, "override one key: KEY=VALUE");
  project_cmd->add_option("--gpu", project_gpu, "builtin GPU name");
  project_cmd->add_option("-y,--years", years, "years ahead")->required();
  project_cmd->add_option("--format", project_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  CommonOptions calibrate_opts;
  std::string table;
  CLI::App* calibrate_cmd =
      app.add_subcommand("calibrate", "fit the GEMM efficiency constant to measured timings");
  calibrate_opts.attach(calibrate_cmd, false);
  calibrate_cmd->add_option("-t,--table", table, "CSV of tokens,d_model,measured_s")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts.build(), ideal_flag, out, err);
    if (search_cmd->parsed()) {
      return cmd_search(search_opts.build(), d_model, diagnostics, median, out);
    }
    if (estimate_cmd->parsed()) {
      return cmd_estimate(estimate_opts.build(), n_gpu, duration, utilization, format, out);
    }
    if (project_cmd->parsed()) {
      return cmd_gpu_project(project_opts.build(), project_gpu, years, project_format, out);
    }
    if (calibrate_cmd->parsed()) return cmd_calibrate(calibrate_opts.build(), table, out);
  } catch (const ConfigError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    fmt::print(err, "infeasible: {}\n", e.what());
    return kExitInfeasible;
  } catch (const IoError& e) {
    fmt::print(err, "i/o error: {}\n", e.what());
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(err, "internal error: {}\n", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace carbonlaw
