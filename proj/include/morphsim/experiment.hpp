#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphsim/engine.hpp"
#include "morphsim/trace.hpp"

namespace morphsim {

// Exit codes shared by the CLI and the library entry points.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct ToyConfig {
  uint64_t seed = 7;
  int num_layers = 32;
  int hidden_dim = 16;
  int calibration_vectors = 32;
  LisWeights weights;
  int bits = 4;
  uint64_t random_baseline_seed = 1234;
};

// One experiment: engine calibration, workload source, controller configs
// for both morph modes, and profiling parameters.
struct ExperimentConfig {
  uint64_t seed = 7;
  double downscale_factor = 1.0;
  int quant_bits = 4;  // static-quant arm and morph target
  EngineConfig engine;  // slo_ms, model, kv, cost, budget live here
  ControllerConfig accuracy;
  ControllerConfig performance;
  ToyConfig toy;
  std::optional<std::string> trace_file;
  std::optional<BurstSpec> synth;
  std::optional<std::string> sequence_file;

  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

// Canonical form: defaults applied, keys sorted, no whitespace. Two configs
// that resolve to the same experiment fingerprint identically.
std::string canonical_config(const ExperimentConfig& config);
std::string config_fingerprint(const ExperimentConfig& config);
uint64_t fnv1a64(const std::string& data);

// Workload resolution: trace file or synthetic burst, then downscale.
Trace resolve_workload(const ExperimentConfig& config);

ArmSpec arm_spec(const ExperimentConfig& config, const std::string& arm_name);
bool is_morph_arm(const std::string& arm_name);
const std::vector<std::string>& all_arm_names();

// Runs one arm over the configured workload and stamps the fingerprint.
RunResult run_arm(const ExperimentConfig& config, const std::string& arm_name);
// Writes report_<arm>.json, timeline_<arm>.csv, events_<arm>.log under out_dir.
void write_run_files(const RunResult& result, const std::string& out_dir,
                     const std::string& arm_name);

struct ProfileOutput {
  SwapSequence lis;
  SwapSequence front_to_back;
  SwapSequence back_to_front;
  SwapSequence random;
  // curves[kind name] aligned with depth 0..L
  std::vector<std::pair<std::string, std::vector<double>>> curves;
};

ProfileOutput run_profile(const ExperimentConfig& config);
void write_profile_files(const ProfileOutput& output, const std::string& out_dir);

struct SweepRow {
  double rps = 0.0;
  std::string arm;
  std::optional<double> p95_ttft_ms;
  int64_t slo_violations = 0;
  double throughput_rps = 0.0;
};

struct SweepOutput {
  std::vector<SweepRow> rows;
  // First swept rate whose P95 TTFT exceeds the SLO; nullopt if none did.
  std::vector<std::pair<std::string, std::optional<double>>> saturation_rps;
};

SweepOutput run_sweep(const ExperimentConfig& config, const std::vector<double>& rps_list,
                      const std::vector<std::string>& arms);
std::string sweep_csv(const SweepOutput& output);

struct CompareRow {
  std::string metric;
  double value_a = 0.0;
  double value_b = 0.0;
  double ratio = 1.0;  // b over a; equal values (including 0/0) give 1.0
};

std::vector<CompareRow> compare_reports(const nlohmann::json& report_a,
                                        const nlohmann::json& report_b, bool force);

}  // namespace morphsim
