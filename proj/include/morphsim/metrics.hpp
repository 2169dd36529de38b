#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace morphsim {

// Nearest-rank percentile on a sample: ceil(p/100 * n)-th smallest value.
// Empty input yields nullopt.
std::optional<double> percentile_nearest_rank(std::vector<double> values, double p);

struct PercentileSummary {
  std::optional<double> p50, p95, p99, mean, max;
  int64_t count = 0;

  static PercentileSummary of(const std::vector<double>& values);
  nlohmann::json to_json() const;
};

// Right-continuous step series (value holds from t until the next change).
struct StepSeries {
  std::vector<std::pair<double, double>> points;

  void record(double t_ms, double value);
  double at(double t_ms) const;        // value in effect at t_ms
  double peak() const;
  double time_weighted_mean(double t_end_ms) const;
};

struct Timelines {
  StepSeries kv_capacity_blocks;
  StepSeries kv_used_blocks;
  StepSeries quantized_layers;
  StepSeries queue_depth;

  // Per-second samples: `t_ms,kv_capacity_blocks,kv_used_blocks,quantized_layers,queue_depth`.
  std::string to_csv(double t_end_ms) const;
};

struct PerRequestMetrics {
  int id = 0;
  int64_t arrival_ms = 0;
  int prompt_tokens = 0;
  int output_tokens = 0;
  double ttft_ms = 0.0;
  std::optional<double> tpot_ms;
  double e2e_ms = 0.0;
  double queue_ms = 0.0;
  int preemptions = 0;
  int64_t tokens_quantized = 0;
  int64_t token_layer_quant_sum = 0;
};

struct MetricsReport {
  std::string arm;
  std::string fingerprint;
  uint64_t seed = 0;
  double slo_ms = 0.0;

  int64_t total_requests = 0;
  int64_t completed_requests = 0;
  int64_t unserviceable_requests = 0;
  int64_t preemption_count = 0;

  PercentileSummary ttft_ms;
  PercentileSummary tpot_ms;
  PercentileSummary e2e_ms;
  PercentileSummary queue_ms;

  int64_t slo_violations = 0;
  double slo_violation_rate = 0.0;
  double throughput_rps = 0.0;
  double sim_end_ms = 0.0;

  int64_t kv_static_capacity_blocks = 0;
  int64_t kv_peak_capacity_blocks = 0;
  int64_t kv_peak_used_blocks = 0;
  double kv_mean_utilization = 0.0;

  int64_t swap_events = 0;
  int64_t restore_events = 0;
  int64_t peak_quantized_layers = 0;
  int64_t saturation_cap_events = 0;

  int64_t tokens_total = 0;
  int64_t tokens_quantized = 0;
  int64_t token_layer_quant_sum = 0;
  double exposure_fraction = 0.0;

  std::vector<PerRequestMetrics> per_request;

  nlohmann::json to_json() const;
};

// Append-only simulation event log; lines are fully deterministic.
struct EventLog {
  struct Entry {
    uint64_t seq;
    double t_ms;
    std::string text;
  };
  std::vector<Entry> entries;

  void append(double t_ms, const std::string& text) {
    entries.push_back({static_cast<uint64_t>(entries.size()), t_ms, text});
  }
  std::string to_text() const;
};

void write_text_file(const std::string& path, const std::string& content);

}  // namespace morphsim
