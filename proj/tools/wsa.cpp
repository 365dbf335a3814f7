#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wsa/bscan_io.hpp"
#include "wsa/gradcheck.hpp"
#include "wsa/graph.hpp"
#include "wsa/wavefield.hpp"

namespace {

using nlohmann::json;
using namespace wsa;

std::uint64_t env_seed() {
  if (const char* s = std::getenv("WSA_SEED")) {
    return std::strtoull(s, nullptr, 10);
  }
  return 0;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

ModelConfig load_model(const std::string& path) { return model_config_from_json(slurp(path)); }

struct SynthConfig {
  SynthesisSpec base;
  // Optional per-case randomization ranges.
  bool randomize = false;
  int random_targets = 1;
  std::array<double, 2> depth_m{0.4, 1.0};
  std::array<double, 2> eps_r{4.0, 16.0};
  std::array<double, 2> amplitude{0.6, 1.4};
  std::array<double, 2> beta_np_per_m{0.0, 0.4};
  std::array<double, 2> x0_frac{0.3, 0.7};
  std::optional<std::array<double, 2>> scr_target_db;
  std::optional<std::array<double, 2>> continuity_target;
};

std::array<double, 2> range_of(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2 || v[0] > v[1]) throw ValidationError("synth config: ranges are [lo, hi]");
  return {v[0], v[1]};
}

SynthConfig parse_synth_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("synth config parse failure: ") + e.what());
  }
  SynthConfig cfg;
  try {
    if (j.contains("grid")) {
      const json& jg = j["grid"];
      if (jg.contains("t_samples")) cfg.base.t_samples = jg["t_samples"].get<int>();
      if (jg.contains("x_traces")) cfg.base.x_traces = jg["x_traces"].get<int>();
      if (jg.contains("dt_ns")) cfg.base.dt_ns = jg["dt_ns"].get<double>();
      if (jg.contains("dx_m")) cfg.base.dx_m = jg["dx_m"].get<double>();
      if (jg.contains("t0_ns")) cfg.base.t0_ns = jg["t0_ns"].get<double>();
    }
    if (j.contains("fc_ghz")) cfg.base.fc_ghz = j["fc_ghz"].get<double>();
    if (j.contains("clutter")) {
      const json& jc = j["clutter"];
      if (jc.contains("scr_target_db")) cfg.base.scr_target_db = jc["scr_target_db"].get<double>();
      if (jc.contains("layered_fraction")) {
        cfg.base.layered_fraction = jc["layered_fraction"].get<double>();
      }
    }
    if (j.contains("frag") && j["frag"].contains("continuity_target")) {
      cfg.base.continuity_target = j["frag"]["continuity_target"].get<double>();
    }
    if (j.contains("targets")) {
      cfg.base.targets = annotations_from_json(json{{"targets", j["targets"]}}.dump());
    }
    if (j.contains("randomize")) {
      const json& jr = j["randomize"];
      cfg.randomize = true;
      if (jr.contains("count")) cfg.random_targets = jr["count"].get<int>();
      if (jr.contains("depth_m")) cfg.depth_m = range_of(jr["depth_m"]);
      if (jr.contains("eps_r")) cfg.eps_r = range_of(jr["eps_r"]);
      if (jr.contains("amplitude")) cfg.amplitude = range_of(jr["amplitude"]);
      if (jr.contains("beta_np_per_m")) cfg.beta_np_per_m = range_of(jr["beta_np_per_m"]);
      if (jr.contains("x0_frac")) cfg.x0_frac = range_of(jr["x0_frac"]);
      if (jr.contains("scr_target_db")) cfg.scr_target_db = range_of(jr["scr_target_db"]);
      if (jr.contains("continuity_target")) {
        cfg.continuity_target = range_of(jr["continuity_target"]);
      }
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("synth config structure failure: ") + e.what());
  }
  if (!cfg.randomize && cfg.base.targets.empty()) {
    throw ValidationError("synth config: provide explicit targets or a randomize block");
  }
  return cfg;
}

const char* const kLabels[4] = {"cavity", "void", "loose", "water-rich"};

SynthesisSpec spec_for_case(const SynthConfig& cfg, std::uint64_t case_seed) {
  SynthesisSpec spec = cfg.base;
  if (!cfg.randomize) return spec;

  SplitMix64 rng(case_seed ^ 0x5eedb15c001ULL);
  spec.targets.clear();
  const double width = (spec.x_traces - 1) * spec.dx_m;
  const double t_max = spec.t0_ns + (spec.t_samples - 1) * spec.dt_ns;
  for (int k = 0; k < cfg.random_targets; ++k) {
    TargetAnnotation tgt;
    for (int attempt = 0; attempt < 64; ++attempt) {
      tgt.depth_m = rng.next_uniform(cfg.depth_m[0], cfg.depth_m[1]);
      tgt.eps_r = rng.next_uniform(cfg.eps_r[0], cfg.eps_r[1]);
      tgt.amplitude = rng.next_uniform(cfg.amplitude[0], cfg.amplitude[1]);
      tgt.beta_np_per_m = rng.next_uniform(cfg.beta_np_per_m[0], cfg.beta_np_per_m[1]);
      tgt.x0_m = width * rng.next_uniform(cfg.x0_frac[0], cfg.x0_frac[1]);
      tgt.label = kLabels[rng.next_below(4)];
      // Keep the apex comfortably inside the time window.
      const double apex = hyperbola_travel_time(tgt.x0_m, tgt);
      if (apex > spec.t0_ns + 2.0 / spec.fc_ghz && apex < 0.85 * t_max) break;
    }
    spec.targets.push_back(tgt);
  }
  if (cfg.scr_target_db) {
    spec.scr_target_db = rng.next_uniform((*cfg.scr_target_db)[0], (*cfg.scr_target_db)[1]);
  }
  if (cfg.continuity_target) {
    spec.continuity_target =
        rng.next_uniform((*cfg.continuity_target)[0], (*cfg.continuity_target)[1]);
  }
  return spec;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir, int count,
              std::uint64_t seed) {
  const SynthConfig cfg = parse_synth_config(slurp(config_path));
  std::filesystem::create_directories(out_dir);

  std::vector<std::string> errors(count);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    try {
      const std::uint64_t case_seed = seed + static_cast<std::uint64_t>(i);
      const SynthesisSpec spec = spec_for_case(cfg, case_seed);
      const SynthesisResult result = synthesize_bscan(spec, case_seed);

      char name[32];
      std::snprintf(name, sizeof(name), "scan_%04d", i);
      const std::string base = (std::filesystem::path(out_dir) / name).string();
      bscan_write(result.bscan, spec.targets, base + ".bsc");
      std::ofstream truth(base + ".truth.json", std::ios::trunc);
      truth << report_to_json(result.ground_truth);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  int failed = 0;
  for (int i = 0; i < count; ++i) {
    if (!errors[i].empty()) {
      std::cerr << "case " << i << ": " << errors[i] << "\n";
      ++failed;
    }
  }
  std::cout << (count - failed) << "/" << count << " scans written to " << out_dir << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_metrics(const std::string& bscan_path, bool as_json) {
  auto [bscan, annotations] = bscan_read(bscan_path);
  if (annotations.empty()) {
    throw ValidationError("metrics: '" + bscan_path + ".json' holds no targets to measure");
  }
  std::vector<WeakSignalReport> reports;
  for (const TargetAnnotation& tgt : annotations) {
    reports.push_back(measure_and_classify(bscan, tgt, annotations));
  }
  if (as_json) {
    std::cout << report_to_json(reports);
  } else {
    std::cout << "target  contrast  scr_db  continuity  dissipation_db  depth_m  weak\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const WeakSignalReport& r = reports[i];
      std::printf("%6zu  %8.4f  %6.2f  %10.3f  %14.2f  %7.2f  %s\n", i, r.contrast, r.scr_db,
                  r.continuity, r.dissipation_db, r.depth_m, r.is_weak ? "yes" : "no");
    }
  }
  return 0;
}

int cmd_forward(const std::string& bscan_path, const std::string& model_path,
                const std::string& stats_path) {
  auto [bscan, annotations] = bscan_read(bscan_path);
  (void)annotations;
  const ModelConfig cfg = load_model(model_path);
  const LayerGraph graph = assemble_wsa_graph(cfg);

  Tensor x(Shape4{1, 1, bscan.t_samples, bscan.x_traces});
  std::copy(bscan.samples.begin(), bscan.samples.end(), x.data.begin());
  const ForwardResult result = forward_features(graph, x);

  json stats = json::array();
  for (const LayerStats& s : result.stats) {
    stats.push_back(
        {{"name", s.name}, {"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"l2", s.l2}});
  }
  json levels = json::array();
  for (const Tensor& t : result.level_outputs) {
    levels.push_back({t.shape.n, t.shape.c, t.shape.h, t.shape.w});
  }
  const json out = {{"levels", levels}, {"layers", stats}};
  std::ofstream f(stats_path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + stats_path + "' for writing");
  f << out.dump(2) << "\n";

  std::cout << "forward ok; " << result.level_outputs.size() << " feature levels:";
  for (const Tensor& t : result.level_outputs) std::cout << " " << t.shape.str();
  std::cout << "\nstats written to " << stats_path << "\n";
  return 0;
}

int cmd_flops(const std::string& model_path) {
  const ModelConfig cfg = load_model(model_path);
  const LayerGraph graph = assemble_wsa_graph(cfg);
  std::cout << cost_report_json(graph, cfg.reference_input) << "\n";
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  const auto registry = default_op_registry();
  const GradcheckReport report = gradcheck_suite(registry, seed);
  std::cout << gradcheck_report_json(report) << "\n";
  return report.all_pass ? 0 : 1;
}

int cmd_bench(const std::string& model_path, int iters) {
  if (iters < 1) throw ValidationError("bench: iters must be >= 1");
  const ModelConfig cfg = load_model(model_path);
  const LayerGraph graph = assemble_wsa_graph(cfg);
  SplitMix64 rng(cfg.seed);
  Tensor x = random_tensor(cfg.reference_input, rng);

  forward_features(graph, x);  // warm-up
  double total = 0.0, best = 0.0;
  for (int i = 0; i < iters; ++i) {
    const auto start = std::chrono::steady_clock::now();
    forward_features(graph, x);
    const double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    total += sec;
    best = (i == 0) ? sec : std::min(best, sec);
  }
  const json out = {{"input", cfg.reference_input.str()},
                    {"iters", iters},
                    {"mean_seconds_per_forward", total / iters},
                    {"best_seconds_per_forward", best}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WSA-Net mechanisms: synthetic B-scans, weak-signal metrics, "
               "assembled forward graphs and cost accounting"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", bscan_path, model_path, stats_path = "stats.json";
  int count = 1, iters = 10;
  std::uint64_t seed = env_seed();
  bool as_json = false;

  CLI::App* synth = app.add_subcommand("synth", "Generate synthetic B-scan datasets");
  synth->add_option("--config", config_path, "Synthesis config JSON")->required();
  synth->add_option("--out", out_dir, "Output directory");
  synth->add_option("--count", count, "Number of scans");
  synth->add_option("--seed", seed, "Base seed (default WSA_SEED or 0)");

  CLI::App* metrics = app.add_subcommand("metrics", "Measure weak-signal criteria of a scan");
  metrics->add_option("--bscan", bscan_path, "BSCAN1 file")->required();
  metrics->add_flag("--json", as_json, "Emit a WeakSignalReport JSON array");

  CLI::App* forward = app.add_subcommand("forward", "Run the model on a scan");
  forward->add_option("--bscan", bscan_path, "BSCAN1 file")->required();
  forward->add_option("--model", model_path, "Model config JSON")->required();
  forward->add_option("--stats", stats_path, "Activation statistics output path");

  CLI::App* flops = app.add_subcommand("flops", "Report per-layer parameters/MACs/FLOPs");
  flops->add_option("--model", model_path, "Model config JSON")->required();

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference VJP suite");
  gradcheck->add_option("--seed", seed, "Suite seed (default WSA_SEED or 0)");

  CLI::App* bench = app.add_subcommand("bench", "Wall-clock per forward pass");
  bench->add_option("--model", model_path, "Model config JSON")->required();
  bench->add_option("--iters", iters, "Forward passes to time");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(config_path, out_dir, count, seed);
    if (metrics->parsed()) return cmd_metrics(bscan_path, as_json);
    if (forward->parsed()) return cmd_forward(bscan_path, model_path, stats_path);
    if (flops->parsed()) return cmd_flops(model_path);
    if (gradcheck->parsed()) return cmd_gradcheck(seed);
    if (bench->parsed()) return cmd_bench(model_path, iters);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
