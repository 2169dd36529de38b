#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morphsim/controller.hpp"
#include "morphsim/kv_pool.hpp"
#include "morphsim/metrics.hpp"
#include "morphsim/profiler.hpp"
#include "morphsim/sim_config.hpp"
#include "morphsim/toy_model.hpp"
#include "morphsim/trace.hpp"

namespace morphsim {

enum class RequestState { kQueued, kPrefilling, kDecoding, kSwappedOut, kDone, kUnserviceable };

// Per-layer precision residency plus in-flight swap tracking. Tags and the
// memory ledger's model bytes change at swap completion, never at begin.
class MorphState {
 public:
  MorphState(const SimModelConfig& model, Precision initial);

  // Validates and registers an in-flight swap; returns its duration in ms.
  double begin_swap(int layer, Precision to, const CostModel& cost);
  // Flips the tag, returns the signed model-byte delta.
  int64_t complete_swap(int layer, Precision to);

  bool swap_in_flight(int layer) const { return in_flight_[layer]; }
  int in_flight_count() const { return in_flight_count_; }
  Precision tag(int layer) const { return tags_[layer]; }
  const std::vector<Precision>& tags() const { return tags_; }
  int quantized_count() const;
  int64_t model_bytes() const { return model_bytes_; }

 private:
  const SimModelConfig model_;
  std::vector<Precision> tags_;
  std::vector<bool> in_flight_;
  int in_flight_count_ = 0;
  int64_t model_bytes_ = 0;
};

// One experimental arm: what precision the model starts at and whether the
// morphing controller is active.
struct ArmSpec {
  std::string label = "static-full";
  Precision initial_precision = Precision::kFull;
  ControllerConfig controller;  // enabled only for morph arms
  std::optional<SwapSequence> sequence;
};

struct EngineConfig {
  SimModelConfig model;
  KvConfig kv;
  CostModel cost;
  MemoryBudget budget;
  double slo_ms = 2000.0;
  double monitor_tick_ms = 100.0;

  void validate() const;
  // Blocks that fit the device budget next to the full-precision model.
  int64_t auto_static_capacity_blocks() const;
};

struct RunResult {
  MetricsReport report;
  EventLog log;
  Timelines timelines;
};

// Deterministic discrete-event simulation of the serving loop over one
// arrival trace. The seed is recorded in the report; the loop itself draws
// no randomness.
RunResult run_simulation(const EngineConfig& config, const ArmSpec& arm, const Trace& trace,
                         uint64_t seed);

}  // namespace morphsim
