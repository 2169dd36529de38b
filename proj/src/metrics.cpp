#include "morphsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace morphsim {

std::optional<double> percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) return std::nullopt;
  if (p <= 0.0 || p > 100.0) throw std::invalid_argument("percentile must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const size_t rank = static_cast<size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::max<size_t>(rank, 1) - 1];
}

PercentileSummary PercentileSummary::of(const std::vector<double>& values) {
  PercentileSummary s;
  s.count = static_cast<int64_t>(values.size());
  if (values.empty()) return s;
  s.p50 = percentile_nearest_rank(values, 50.0);
  s.p95 = percentile_nearest_rank(values, 95.0);
  s.p99 = percentile_nearest_rank(values, 99.0);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.max = *std::max_element(values.begin(), values.end());
  return s;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

}  // namespace

nlohmann::json PercentileSummary::to_json() const {
  return {{"count", count}, {"p50", opt_json(p50)},   {"p95", opt_json(p95)},
          {"p99", opt_json(p99)}, {"mean", opt_json(mean)}, {"max", opt_json(max)}};
}

void StepSeries::record(double t_ms, double value) {
  if (!points.empty() && points.back().first == t_ms) {
    points.back().second = value;
    return;
  }
  if (!points.empty() && points.back().second == value) return;
  points.emplace_back(t_ms, value);
}

double StepSeries::at(double t_ms) const {
  double value = 0.0;
  for (const auto& [t, v] : points) {
    if (t > t_ms) break;
    value = v;
  }
  return value;
}

double StepSeries::peak() const {
  double best = 0.0;
  for (const auto& [t, v] : points) best = std::max(best, v);
  return best;
}

double StepSeries::time_weighted_mean(double t_end_ms) const {
  if (points.empty() || t_end_ms <= points.front().first) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < points.size(); ++i) {
    const double t0 = points[i].first;
    if (t0 >= t_end_ms) break;
    const double t1 = (i + 1 < points.size()) ? std::min(points[i + 1].first, t_end_ms) : t_end_ms;
    if (t1 > t0) acc += points[i].second * (t1 - t0);
  }
  const double span = t_end_ms - points.front().first;
  return span > 0.0 ? acc / span : 0.0;
}

std::string Timelines::to_csv(double t_end_ms) const {
  std::string out = "t_ms,kv_capacity_blocks,kv_used_blocks,quantized_layers,queue_depth\n";
  char line[160];
  for (int64_t t = 0; t <= static_cast<int64_t>(std::ceil(t_end_ms / 1000.0)) * 1000; t += 1000) {
    const double td = static_cast<double>(t);
    std::snprintf(line, sizeof(line), "%lld,%lld,%lld,%lld,%lld\n", static_cast<long long>(t),
                  static_cast<long long>(kv_capacity_blocks.at(td)),
                  static_cast<long long>(kv_used_blocks.at(td)),
                  static_cast<long long>(quantized_layers.at(td)),
                  static_cast<long long>(queue_depth.at(td)));
    out += line;
  }
  return out;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json doc;
  doc["arm"] = arm;
  doc["fingerprint"] = fingerprint;
  doc["seed"] = seed;
  doc["slo_ms"] = slo_ms;
  doc["requests"] = {{"total", total_requests},
                     {"completed", completed_requests},
                     {"unserviceable", unserviceable_requests},
                     {"preemptions", preemption_count}};
  doc["ttft_ms"] = ttft_ms.to_json();
  doc["tpot_ms"] = tpot_ms.to_json();
  doc["e2e_ms"] = e2e_ms.to_json();
  doc["queue_ms"] = queue_ms.to_json();
  doc["slo"] = {{"violations", slo_violations}, {"rate", slo_violation_rate}};
  doc["throughput_rps"] = throughput_rps;
  doc["sim_end_ms"] = sim_end_ms;
  doc["kv"] = {{"static_capacity_blocks", kv_static_capacity_blocks},
               {"peak_capacity_blocks", kv_peak_capacity_blocks},
               {"peak_used_blocks", kv_peak_used_blocks},
               {"mean_utilization", kv_mean_utilization}};
  doc["morph"] = {{"swap_events", swap_events},
                  {"restore_events", restore_events},
                  {"peak_quantized_layers", peak_quantized_layers},
                  {"saturation_cap_events", saturation_cap_events}};
  doc["exposure"] = {{"tokens_total", tokens_total},
                     {"tokens_quantized", tokens_quantized},
                     {"token_layer_quant_sum", token_layer_quant_sum},
                     {"fraction", exposure_fraction}};
  nlohmann::json reqs = nlohmann::json::array();
  for (const PerRequestMetrics& r : per_request) {
    nlohmann::json j = {{"id", r.id},
                        {"arrival_ms", r.arrival_ms},
                        {"prompt_tokens", r.prompt_tokens},
                        {"output_tokens", r.output_tokens},
                        {"ttft_ms", r.ttft_ms},
                        {"tpot_ms", r.tpot_ms ? nlohmann::json(*r.tpot_ms) : nlohmann::json(nullptr)},
                        {"e2e_ms", r.e2e_ms},
                        {"queue_ms", r.queue_ms},
                        {"preemptions", r.preemptions},
                        {"tokens_quantized", r.tokens_quantized},
                        {"token_layer_quant_sum", r.token_layer_quant_sum}};
    reqs.push_back(std::move(j));
  }
  doc["per_request"] = std::move(reqs);
  return doc;
}

std::string EventLog::to_text() const {
  std::string out;
  char prefix[64];
  for (const Entry& e : entries) {
    std::snprintf(prefix, sizeof(prefix), "%llu %.6f ", static_cast<unsigned long long>(e.seq),
                  e.t_ms);
    out += prefix;
    out += e.text;
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

}  // namespace morphsim
