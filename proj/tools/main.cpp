// Experiment runner: offline profiling, trace-driven simulation, rate sweeps,
// and report comparison.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "morphsim/experiment.hpp"

namespace {

using morphsim::ExperimentConfig;

ExperimentConfig load_with_overrides(const std::string& config_path,
                                     const std::optional<uint64_t>& seed,
                                     const std::optional<double>& downscale) {
  if (config_path.empty()) throw std::invalid_argument("--config is required");
  ExperimentConfig cfg = morphsim::load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (downscale) cfg.downscale_factor = *downscale;
  cfg.validate();
  return cfg;
}

nlohmann::json load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report file: " + path);
  nlohmann::json doc;
  in >> doc;
  return doc;
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return morphsim::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return morphsim::kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven serving simulator with runtime layer morphing"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  std::string config_path;
  std::string out_dir = "out";
  std::optional<uint64_t> seed_override;
  std::optional<double> downscale_override;
  app.add_option("--config", config_path, "experiment config JSON");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed_override, "override the config seed");
  app.add_option("--downscale", downscale_override, "override the trace downscale factor");

  CLI::App* profile = app.add_subcommand("profile", "compute swap sequences and degradation curves");

  CLI::App* run = app.add_subcommand("run", "simulate one arm over the configured workload");
  std::string arm;
  run->add_option("--arm", arm, "static-full | static-quant | morph-accuracy | morph-performance")
      ->required();

  CLI::App* sweep = app.add_subcommand("sweep", "replay a homogeneous load at several rates");
  std::vector<double> rps_list;
  std::vector<std::string> sweep_arms = {"static-full", "morph-performance"};
  sweep->add_option("--rps", rps_list, "request rates to sweep")->required()->delimiter(',');
  sweep->add_option("--arms", sweep_arms, "arms to sweep")->delimiter(',');

  CLI::App* compare = app.add_subcommand("compare", "ratio table between two run reports");
  std::string report_a, report_b;
  bool force = false;
  compare->add_option("report_a", report_a)->required();
  compare->add_option("report_b", report_b)->required();
  compare->add_flag("--force", force, "compare even when config fingerprints differ");

  CLI11_PARSE(app, argc, argv);

  if (profile->parsed()) {
    return run_guarded([&] {
      ExperimentConfig cfg = load_with_overrides(config_path, seed_override, downscale_override);
      const morphsim::ProfileOutput output = morphsim::run_profile(cfg);
      morphsim::write_profile_files(output, out_dir);
      std::cout << "lis order:";
      for (int layer : output.lis.order) std::cout << " " << layer;
      std::cout << "\nwrote 4 sequence files and degradation_curves.csv to " << out_dir << "\n";
      return morphsim::kExitOk;
    });
  }

  if (run->parsed()) {
    return run_guarded([&] {
      ExperimentConfig cfg = load_with_overrides(config_path, seed_override, downscale_override);
      const morphsim::RunResult result = morphsim::run_arm(cfg, arm);
      morphsim::write_run_files(result, out_dir, arm);
      const auto& rep = result.report;
      std::printf("arm=%s completed=%lld violations=%lld p95_ttft_ms=%s throughput_rps=%.3f\n",
                  rep.arm.c_str(), static_cast<long long>(rep.completed_requests),
                  static_cast<long long>(rep.slo_violations),
                  rep.ttft_ms.p95 ? std::to_string(*rep.ttft_ms.p95).c_str() : "null",
                  rep.throughput_rps);
      return morphsim::kExitOk;
    });
  }

  if (sweep->parsed()) {
    return run_guarded([&] {
      ExperimentConfig cfg = load_with_overrides(config_path, seed_override, downscale_override);
      const morphsim::SweepOutput output = morphsim::run_sweep(cfg, rps_list, sweep_arms);
      std::filesystem::create_directories(out_dir);
      morphsim::write_text_file(out_dir + "/sweep.csv", morphsim::sweep_csv(output));
      std::printf("%-10s %-20s %-14s %-10s\n", "rps", "arm", "p95_ttft_ms", "violations");
      for (const auto& row : output.rows) {
        std::printf("%-10.4g %-20s %-14.3f %-10lld\n", row.rps, row.arm.c_str(),
                    row.p95_ttft_ms.value_or(0.0), static_cast<long long>(row.slo_violations));
      }
      nlohmann::json saturation;
      for (const auto& [arm_name, rps] : output.saturation_rps) {
        saturation[arm_name] = rps ? nlohmann::json(*rps) : nlohmann::json(nullptr);
        std::printf("saturation %s: %s\n", arm_name.c_str(),
                    rps ? std::to_string(*rps).c_str() : "not reached");
      }
      morphsim::write_text_file(out_dir + "/saturation.json", saturation.dump(2) + "\n");
      return morphsim::kExitOk;
    });
  }

  if (compare->parsed()) {
    return run_guarded([&] {
      const nlohmann::json a = load_report(report_a);
      const nlohmann::json b = load_report(report_b);
      const auto rows = morphsim::compare_reports(a, b, force);
      std::printf("%-26s %-14s %-14s %-10s\n", "metric", "a", "b", "b/a");
      for (const auto& row : rows) {
        std::printf("%-26s %-14.6g %-14.6g %-10.4g\n", row.metric.c_str(), row.value_a,
                    row.value_b, row.ratio);
      }
      return morphsim::kExitOk;
    });
  }

  return morphsim::kExitOk;
}
