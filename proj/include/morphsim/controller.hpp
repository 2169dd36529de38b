#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace morphsim {

enum class ControllerMode { kAccuracy, kPerformance };

// Trigger/restore policy for runtime morphing. Accuracy mode swaps late and
// little; performance mode swaps early and deep.
struct ControllerConfig {
  bool enabled = false;
  ControllerMode mode = ControllerMode::kPerformance;
  double kv_trigger = 0.85;       // KV usage fraction that triggers swapping
  double kv_low = 0.70;           // usage below this (held) starts restores
  double queue_trigger_ms = 100;  // head-of-line wait trigger
  double hold_ms = 500;           // restore hysteresis window
  int max_swapped_layers = 1;
  int swap_step = 1;
  double telemetry_window_ms = 200;
  int target_bits = 4;

  void validate(int num_layers) const;
  static ControllerConfig defaults_for(ControllerMode mode, int num_layers);
};

struct TelemetrySample {
  double t_ms = 0.0;
  double kv_usage = 0.0;
  double queue_depth = 0.0;
  double hol_wait_ms = 0.0;
};

// Windowed means of recent samples; falls back to the last sample when the
// window is empty.
class TelemetryWindow {
 public:
  explicit TelemetryWindow(double window_ms) : window_ms_(window_ms) {}

  void push(const TelemetrySample& sample);
  double mean_kv_usage() const;
  double mean_queue_depth() const;
  double mean_hol_wait_ms() const;
  const TelemetrySample& last() const { return last_; }
  bool empty() const { return samples_.empty(); }

 private:
  double window_ms_;
  std::deque<TelemetrySample> samples_;
  TelemetrySample last_;
};

enum class CommandKind { kSwapNext, kRestoreNext, kAttach, kDetach };

struct Command {
  CommandKind kind;
  int count = 0;       // layers for swap/restore
  int64_t blocks = 0;  // blocks for attach/detach
};

// What the controller sees of the actuation state when deciding.
struct MorphView {
  int num_layers = 0;
  int commanded_depth = 0;            // layers commanded quantized (prefix length)
  bool transaction_in_flight = false; // a swap/restore batch not yet completed
  int64_t next_restore_attached_blocks = 0;  // attach record of the layer a restore would peel
};

struct DecideOutcome {
  std::vector<Command> commands;
  std::vector<std::string> notes;  // reason codes for the event log
};

// Serving monitor + morphing controller. Pure decision logic: the engine
// owns actuation (begin_swap, pool attach/detach) and reports completion.
class Controller {
 public:
  explicit Controller(const ControllerConfig& config);

  void observe(const TelemetrySample& sample);
  DecideOutcome decide(double now_ms, const MorphView& view);

  const ControllerConfig& config() const { return config_; }
  int64_t saturation_cap_events() const { return saturation_cap_events_; }

 private:
  ControllerConfig config_;
  TelemetryWindow window_;
  double last_observed_ms_ = -1.0;
  std::optional<double> below_low_since_ms_;
  std::optional<double> last_swap_cmd_ms_;
  std::optional<double> last_restore_cmd_ms_;
  int64_t saturation_cap_events_ = 0;
  bool cap_note_emitted_ = false;
};

}  // namespace morphsim
