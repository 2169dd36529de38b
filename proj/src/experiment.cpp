#include "morphsim/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace morphsim {

namespace {

template <typename T>
void read_field(const nlohmann::json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

std::array<int64_t, 4> read_layer_bytes(const nlohmann::json& doc,
                                        const std::array<int64_t, 4>& defaults) {
  std::array<int64_t, 4> bytes = defaults;
  if (doc.contains("layer_bytes")) {
    const auto& lb = doc.at("layer_bytes");
    read_field(lb, "full", bytes[0]);
    read_field(lb, "q8", bytes[1]);
    read_field(lb, "q4", bytes[2]);
    read_field(lb, "q3", bytes[3]);
  }
  return bytes;
}

ControllerConfig read_controller(const nlohmann::json& doc, ControllerConfig cfg) {
  read_field(doc, "kv_trigger", cfg.kv_trigger);
  read_field(doc, "kv_low", cfg.kv_low);
  read_field(doc, "queue_trigger_ms", cfg.queue_trigger_ms);
  read_field(doc, "hold_ms", cfg.hold_ms);
  read_field(doc, "max_swapped_layers", cfg.max_swapped_layers);
  read_field(doc, "swap_step", cfg.swap_step);
  read_field(doc, "telemetry_window_ms", cfg.telemetry_window_ms);
  read_field(doc, "target_bits", cfg.target_bits);
  return cfg;
}

nlohmann::json controller_to_json(const ControllerConfig& cfg) {
  return {{"kv_trigger", cfg.kv_trigger},
          {"kv_low", cfg.kv_low},
          {"queue_trigger_ms", cfg.queue_trigger_ms},
          {"hold_ms", cfg.hold_ms},
          {"max_swapped_layers", cfg.max_swapped_layers},
          {"swap_step", cfg.swap_step},
          {"telemetry_window_ms", cfg.telemetry_window_ms},
          {"target_bits", cfg.target_bits}};
}

}  // namespace

void ExperimentConfig::validate() const {
  engine.validate();
  accuracy.validate(engine.model.num_layers);
  performance.validate(engine.model.num_layers);
  if (accuracy.max_swapped_layers > performance.max_swapped_layers) {
    throw std::invalid_argument("accuracy mode may not swap more layers than performance mode");
  }
  if (accuracy.kv_trigger < performance.kv_trigger) {
    throw std::invalid_argument("accuracy mode kv trigger must be >= performance mode's");
  }
  if (quant_bits != 8 && quant_bits != 4 && quant_bits != 3) {
    throw std::invalid_argument("quant_bits must be one of 8, 4, 3");
  }
  if (!(downscale_factor > 0.0)) throw std::invalid_argument("downscale factor must be > 0");
  if (!trace_file && !synth) {
    throw std::invalid_argument("workload requires either trace_file or synth parameters");
  }
  if (trace_file && synth) {
    throw std::invalid_argument("workload must name exactly one of trace_file or synth");
  }
  if (toy.num_layers < 1 || toy.hidden_dim < 2 || toy.calibration_vectors < 1) {
    throw std::invalid_argument("invalid toy model parameters");
  }
  if (toy.weights.alpha1 < 0 || toy.weights.alpha2 < 0 || toy.weights.beta < 0 ||
      toy.weights.all_zero()) {
    throw std::invalid_argument("LIS weights must be non-negative and not all zero");
  }
  if (toy.bits != 8 && toy.bits != 4 && toy.bits != 3) {
    throw std::invalid_argument("toy bits must be one of 8, 4, 3");
  }
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  ExperimentConfig cfg;
  read_field(doc, "seed", cfg.seed);
  read_field(doc, "downscale", cfg.downscale_factor);
  read_field(doc, "quant_bits", cfg.quant_bits);
  read_field(doc, "slo_ms", cfg.engine.slo_ms);
  read_field(doc, "monitor_tick_ms", cfg.engine.monitor_tick_ms);

  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    read_field(m, "num_layers", cfg.engine.model.num_layers);
    cfg.engine.model.layer_bytes = read_layer_bytes(m, cfg.engine.model.layer_bytes);
  }
  if (doc.contains("kv")) {
    const auto& kv = doc.at("kv");
    read_field(kv, "block_tokens", cfg.engine.kv.block_tokens);
    read_field(kv, "block_bytes", cfg.engine.kv.block_bytes);
    read_field(kv, "static_capacity_blocks", cfg.engine.kv.static_capacity_blocks);
  }
  if (doc.contains("budget")) {
    const auto& b = doc.at("budget");
    read_field(b, "device_bytes", cfg.engine.budget.device_bytes);
    read_field(b, "reserve_bytes", cfg.engine.budget.reserve_bytes);
  }
  if (doc.contains("cost")) {
    const auto& c = doc.at("cost");
    read_field(c, "prefill_ms_per_token", cfg.engine.cost.prefill_ms_per_token);
    if (c.contains("decode_ms_per_layer")) {
      const auto& d = c.at("decode_ms_per_layer");
      read_field(d, "full", cfg.engine.cost.decode_ms_per_layer[0]);
      read_field(d, "q8", cfg.engine.cost.decode_ms_per_layer[1]);
      read_field(d, "q4", cfg.engine.cost.decode_ms_per_layer[2]);
      read_field(d, "q3", cfg.engine.cost.decode_ms_per_layer[3]);
    }
    read_field(c, "attn_ms_per_kv_block", cfg.engine.cost.attn_ms_per_kv_block);
    read_field(c, "pcie_gib_per_s", cfg.engine.cost.pcie_gib_per_s);
    read_field(c, "swap_fixed_overhead_ms", cfg.engine.cost.swap_fixed_overhead_ms);
    read_field(c, "max_batch_tokens", cfg.engine.cost.max_batch_tokens);
  }

  cfg.accuracy = ControllerConfig::defaults_for(ControllerMode::kAccuracy,
                                                cfg.engine.model.num_layers);
  cfg.performance = ControllerConfig::defaults_for(ControllerMode::kPerformance,
                                                   cfg.engine.model.num_layers);
  if (doc.contains("controller")) {
    const auto& ctrl = doc.at("controller");
    if (ctrl.contains("accuracy")) cfg.accuracy = read_controller(ctrl.at("accuracy"), cfg.accuracy);
    if (ctrl.contains("performance")) {
      cfg.performance = read_controller(ctrl.at("performance"), cfg.performance);
    }
  }
  cfg.accuracy.target_bits = cfg.quant_bits;
  cfg.performance.target_bits = cfg.quant_bits;

  if (doc.contains("toy")) {
    const auto& t = doc.at("toy");
    read_field(t, "seed", cfg.toy.seed);
    read_field(t, "num_layers", cfg.toy.num_layers);
    read_field(t, "hidden_dim", cfg.toy.hidden_dim);
    read_field(t, "calibration_vectors", cfg.toy.calibration_vectors);
    read_field(t, "bits", cfg.toy.bits);
    read_field(t, "random_baseline_seed", cfg.toy.random_baseline_seed);
    if (t.contains("weights")) {
      const auto& w = t.at("weights");
      read_field(w, "alpha1", cfg.toy.weights.alpha1);
      read_field(w, "alpha2", cfg.toy.weights.alpha2);
      read_field(w, "beta", cfg.toy.weights.beta);
    }
  }

  if (doc.contains("workload")) {
    const auto& w = doc.at("workload");
    if (w.contains("trace_file")) cfg.trace_file = w.at("trace_file").get<std::string>();
    if (w.contains("synth")) {
      const auto& s = w.at("synth");
      BurstSpec spec;
      read_field(s, "seed", spec.seed);
      read_field(s, "base_rps", spec.base_rps);
      read_field(s, "burst_rps", spec.burst_rps);
      read_field(s, "burst_start_ms", spec.burst_start_ms);
      read_field(s, "burst_len_ms", spec.burst_len_ms);
      read_field(s, "total_ms", spec.total_ms);
      read_field(s, "prompt_tokens", spec.prompt_tokens);
      read_field(s, "output_tokens", spec.output_tokens);
      cfg.synth = spec;
    }
  }
  if (doc.contains("sequence_file")) cfg.sequence_file = doc.at("sequence_file").get<std::string>();

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed config " + path + ": " + e.what());
  }
  return config_from_json(doc);
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json doc;
  doc["seed"] = cfg.seed;
  doc["downscale"] = cfg.downscale_factor;
  doc["quant_bits"] = cfg.quant_bits;
  doc["slo_ms"] = cfg.engine.slo_ms;
  doc["monitor_tick_ms"] = cfg.engine.monitor_tick_ms;
  doc["model"] = {{"num_layers", cfg.engine.model.num_layers},
                  {"layer_bytes",
                   {{"full", cfg.engine.model.layer_bytes[0]},
                    {"q8", cfg.engine.model.layer_bytes[1]},
                    {"q4", cfg.engine.model.layer_bytes[2]},
                    {"q3", cfg.engine.model.layer_bytes[3]}}}};
  doc["kv"] = {{"block_tokens", cfg.engine.kv.block_tokens},
               {"block_bytes", cfg.engine.kv.block_bytes},
               {"static_capacity_blocks", cfg.engine.kv.static_capacity_blocks}};
  doc["budget"] = {{"device_bytes", cfg.engine.budget.device_bytes},
                   {"reserve_bytes", cfg.engine.budget.reserve_bytes}};
  doc["cost"] = {{"prefill_ms_per_token", cfg.engine.cost.prefill_ms_per_token},
                 {"decode_ms_per_layer",
                  {{"full", cfg.engine.cost.decode_ms_per_layer[0]},
                   {"q8", cfg.engine.cost.decode_ms_per_layer[1]},
                   {"q4", cfg.engine.cost.decode_ms_per_layer[2]},
                   {"q3", cfg.engine.cost.decode_ms_per_layer[3]}}},
                 {"attn_ms_per_kv_block", cfg.engine.cost.attn_ms_per_kv_block},
                 {"pcie_gib_per_s", cfg.engine.cost.pcie_gib_per_s},
                 {"swap_fixed_overhead_ms", cfg.engine.cost.swap_fixed_overhead_ms},
                 {"max_batch_tokens", cfg.engine.cost.max_batch_tokens}};
  doc["controller"] = {{"accuracy", controller_to_json(cfg.accuracy)},
                       {"performance", controller_to_json(cfg.performance)}};
  doc["toy"] = {{"seed", cfg.toy.seed},
                {"num_layers", cfg.toy.num_layers},
                {"hidden_dim", cfg.toy.hidden_dim},
                {"calibration_vectors", cfg.toy.calibration_vectors},
                {"bits", cfg.toy.bits},
                {"random_baseline_seed", cfg.toy.random_baseline_seed},
                {"weights",
                 {{"alpha1", cfg.toy.weights.alpha1},
                  {"alpha2", cfg.toy.weights.alpha2},
                  {"beta", cfg.toy.weights.beta}}}};
  nlohmann::json workload;
  if (cfg.trace_file) workload["trace_file"] = *cfg.trace_file;
  if (cfg.synth) {
    workload["synth"] = {{"seed", cfg.synth->seed},
                         {"base_rps", cfg.synth->base_rps},
                         {"burst_rps", cfg.synth->burst_rps},
                         {"burst_start_ms", cfg.synth->burst_start_ms},
                         {"burst_len_ms", cfg.synth->burst_len_ms},
                         {"total_ms", cfg.synth->total_ms},
                         {"prompt_tokens", cfg.synth->prompt_tokens},
                         {"output_tokens", cfg.synth->output_tokens}};
  }
  doc["workload"] = workload;
  if (cfg.sequence_file) doc["sequence_file"] = *cfg.sequence_file;
  return doc;
}

std::string canonical_config(const ExperimentConfig& cfg) {
  // nlohmann::json keeps keys sorted, so a compact dump is canonical.
  return config_to_json(cfg).dump();
}

uint64_t fnv1a64(const std::string& data) {
  uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config(cfg))));
  return buf;
}

Trace resolve_workload(const ExperimentConfig& cfg) {
  Trace trace;
  if (cfg.trace_file) {
    trace = parse_trace(*cfg.trace_file);
  } else {
    trace = synth_burst(*cfg.synth);
  }
  if (cfg.downscale_factor != 1.0) trace = downscale(trace, cfg.downscale_factor);
  return trace;
}

const std::vector<std::string>& all_arm_names() {
  static const std::vector<std::string> names = {"static-full", "static-quant", "morph-accuracy",
                                                 "morph-performance"};
  return names;
}

bool is_morph_arm(const std::string& arm_name) {
  return arm_name == "morph-accuracy" || arm_name == "morph-performance";
}

ArmSpec arm_spec(const ExperimentConfig& cfg, const std::string& arm_name) {
  ArmSpec spec;
  spec.label = arm_name;
  if (arm_name == "static-full") {
    spec.initial_precision = Precision::kFull;
    spec.controller.enabled = false;
  } else if (arm_name == "static-quant") {
    spec.initial_precision = precision_from_bits(cfg.quant_bits);
    spec.controller.enabled = false;
  } else if (arm_name == "morph-accuracy" || arm_name == "morph-performance") {
    spec.initial_precision = Precision::kFull;
    spec.controller = arm_name == "morph-accuracy" ? cfg.accuracy : cfg.performance;
    spec.controller.enabled = true;
    spec.controller.mode = arm_name == "morph-accuracy" ? ControllerMode::kAccuracy
                                                        : ControllerMode::kPerformance;
    if (!cfg.sequence_file) {
      throw std::invalid_argument("morph arm requires sequence_file in the config");
    }
    spec.sequence = load_sequence(*cfg.sequence_file);
  } else {
    throw std::invalid_argument("unknown arm: " + arm_name);
  }
  return spec;
}

RunResult run_arm(const ExperimentConfig& cfg, const std::string& arm_name) {
  const ArmSpec spec = arm_spec(cfg, arm_name);
  const Trace trace = resolve_workload(cfg);
  RunResult result = run_simulation(cfg.engine, spec, trace, cfg.seed);
  result.report.fingerprint = config_fingerprint(cfg);
  return result;
}

void write_run_files(const RunResult& result, const std::string& out_dir,
                     const std::string& arm_name) {
  std::filesystem::create_directories(out_dir);
  const std::string stem = out_dir + "/";
  write_text_file(stem + "report_" + arm_name + ".json", result.report.to_json().dump(2) + "\n");
  write_text_file(stem + "timeline_" + arm_name + ".csv",
                  result.timelines.to_csv(result.report.sim_end_ms));
  write_text_file(stem + "events_" + arm_name + ".log", result.log.to_text());
}

ProfileOutput run_profile(const ExperimentConfig& cfg) {
  const ToyModel model = build_model(cfg.toy.seed, cfg.toy.num_layers, cfg.toy.hidden_dim);
  const std::vector<Vec> batch = calibration_batch(calibration_seed(cfg.toy.seed),
                                                   cfg.toy.calibration_vectors, cfg.toy.hidden_dim);
  ProfileOutput out;
  out.lis = greedy_sequence(model, batch, cfg.toy.weights, cfg.toy.bits);
  out.front_to_back = baseline_sequence(SequenceKind::kFrontToBack, cfg.toy.num_layers, 0,
                                        cfg.toy.bits);
  out.back_to_front = baseline_sequence(SequenceKind::kBackToFront, cfg.toy.num_layers, 0,
                                        cfg.toy.bits);
  out.random = baseline_sequence(SequenceKind::kRandom, cfg.toy.num_layers,
                                 cfg.toy.random_baseline_seed, cfg.toy.bits);
  for (const SwapSequence* seq : {&out.lis, &out.front_to_back, &out.back_to_front, &out.random}) {
    out.curves.emplace_back(sequence_kind_name(seq->kind),
                            degradation_curve(model, seq->order, batch, cfg.toy.bits));
  }
  return out;
}

void write_profile_files(const ProfileOutput& output, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  save_sequence(output.lis, out_dir + "/sequence_lis.json");
  save_sequence(output.front_to_back, out_dir + "/sequence_front_to_back.json");
  save_sequence(output.back_to_front, out_dir + "/sequence_back_to_front.json");
  save_sequence(output.random, out_dir + "/sequence_random.json");

  std::string csv = "kind,depth,delta\n";
  char line[96];
  for (const auto& [kind, curve] : output.curves) {
    for (size_t depth = 0; depth < curve.size(); ++depth) {
      std::snprintf(line, sizeof(line), "%s,%zu,%.12g\n", kind.c_str(), depth, curve[depth]);
      csv += line;
    }
  }
  write_text_file(out_dir + "/degradation_curves.csv", csv);
}

SweepOutput run_sweep(const ExperimentConfig& cfg, const std::vector<double>& rps_list,
                      const std::vector<std::string>& arms) {
  if (rps_list.empty()) throw std::invalid_argument("sweep requires a non-empty rps list");
  if (!cfg.synth) throw std::invalid_argument("sweep requires synth workload parameters");
  for (double rps : rps_list) {
    if (!(rps > 0.0)) throw std::invalid_argument("sweep rates must be > 0");
  }

  SweepOutput out;
  for (const std::string& arm : arms) {
    std::optional<double> saturation;
    for (double rps : rps_list) {
      ExperimentConfig point = cfg;
      point.synth->base_rps = rps;
      point.synth->burst_rps = rps;  // homogeneous load at each swept rate
      const RunResult result = run_arm(point, arm);
      SweepRow row;
      row.rps = rps;
      row.arm = arm;
      row.p95_ttft_ms = result.report.ttft_ms.p95;
      row.slo_violations = result.report.slo_violations;
      row.throughput_rps = result.report.throughput_rps;
      if (!saturation && row.p95_ttft_ms && *row.p95_ttft_ms > cfg.engine.slo_ms) {
        saturation = rps;
      }
      out.rows.push_back(row);
    }
    out.saturation_rps.emplace_back(arm, saturation);
  }
  return out;
}

std::string sweep_csv(const SweepOutput& output) {
  std::string csv = "rps,arm,p95_ttft_ms,slo_violations,throughput_rps\n";
  char line[160];
  for (const SweepRow& row : output.rows) {
    std::snprintf(line, sizeof(line), "%.6g,%s,%.6f,%lld,%.6f\n", row.rps, row.arm.c_str(),
                  row.p95_ttft_ms.value_or(0.0), static_cast<long long>(row.slo_violations),
                  row.throughput_rps);
    csv += line;
  }
  return csv;
}

namespace {

double metric_or_throw(const nlohmann::json& report, std::initializer_list<const char*> path) {
  const nlohmann::json* node = &report;
  std::string seen;
  for (const char* key : path) {
    seen += seen.empty() ? key : std::string(".") + key;
    if (!node->contains(key)) {
      throw std::invalid_argument("report schema mismatch: missing field " + seen);
    }
    node = &node->at(key);
  }
  if (node->is_null()) return 0.0;
  return node->get<double>();
}

}  // namespace

std::vector<CompareRow> compare_reports(const nlohmann::json& report_a,
                                        const nlohmann::json& report_b, bool force) {
  if (!report_a.contains("fingerprint") || !report_b.contains("fingerprint")) {
    throw std::invalid_argument("report schema mismatch: missing field fingerprint");
  }
  if (!force && report_a.at("fingerprint") != report_b.at("fingerprint")) {
    throw std::invalid_argument("config fingerprints differ; pass force to compare anyway");
  }

  const std::vector<std::pair<std::string, std::initializer_list<const char*>>> metrics = {
      {"p95_ttft_ms", {"ttft_ms", "p95"}},
      {"slo_rate", {"slo", "rate"}},
      {"throughput_rps", {"throughput_rps"}},
      {"kv_peak_capacity_blocks", {"kv", "peak_capacity_blocks"}},
      {"exposure_fraction", {"exposure", "fraction"}},
  };

  std::vector<CompareRow> rows;
  for (const auto& [name, path] : metrics) {
    CompareRow row;
    row.metric = name;
    row.value_a = metric_or_throw(report_a, path);
    row.value_b = metric_or_throw(report_b, path);
    if (row.value_a == row.value_b) {
      row.ratio = 1.0;
    } else if (row.value_a == 0.0) {
      row.ratio = std::numeric_limits<double>::infinity();
    } else {
      row.ratio = row.value_b / row.value_a;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace morphsim
