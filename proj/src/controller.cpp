#include "morphsim/controller.hpp"

#include <algorithm>
#include <stdexcept>

namespace morphsim {

void ControllerConfig::validate(int num_layers) const {
  if (!enabled) return;
  if (!(kv_low > 0.0) || !(kv_low < kv_trigger) || !(kv_trigger <= 1.0)) {
    throw std::invalid_argument("controller: need 0 < kv_low < kv_trigger <= 1");
  }
  if (!(queue_trigger_ms > 0.0)) throw std::invalid_argument("controller: queue trigger must be > 0");
  if (!(hold_ms > 0.0)) throw std::invalid_argument("controller: hold_ms must be > 0");
  if (swap_step < 1 || swap_step > max_swapped_layers || max_swapped_layers > num_layers) {
    throw std::invalid_argument("controller: need 1 <= swap_step <= max_swapped_layers <= L");
  }
  if (!(telemetry_window_ms > 0.0)) {
    throw std::invalid_argument("controller: telemetry window must be > 0");
  }
  if (target_bits != 8 && target_bits != 4 && target_bits != 3) {
    throw std::invalid_argument("controller: target_bits must be one of 8, 4, 3");
  }
}

ControllerConfig ControllerConfig::defaults_for(ControllerMode mode, int num_layers) {
  ControllerConfig cfg;
  cfg.enabled = true;
  cfg.mode = mode;
  if (mode == ControllerMode::kAccuracy) {
    cfg.kv_trigger = 0.92;
    cfg.max_swapped_layers = std::max(1, num_layers / 4);
    cfg.swap_step = 1;
  } else {
    cfg.kv_trigger = 0.80;
    cfg.max_swapped_layers = std::max(1, num_layers / 2);
    cfg.swap_step = std::min(2, std::max(1, num_layers / 2));
  }
  return cfg;
}

void TelemetryWindow::push(const TelemetrySample& sample) {
  last_ = sample;
  samples_.push_back(sample);
  while (!samples_.empty() && samples_.front().t_ms < sample.t_ms - window_ms_) {
    samples_.pop_front();
  }
}

namespace {

template <typename Getter>
double window_mean(const std::deque<TelemetrySample>& samples, const TelemetrySample& last,
                   Getter get) {
  if (samples.empty()) return get(last);  // fallback: instantaneous last value
  double sum = 0.0;
  for (const TelemetrySample& s : samples) sum += get(s);
  return sum / static_cast<double>(samples.size());
}

}  // namespace

double TelemetryWindow::mean_kv_usage() const {
  return window_mean(samples_, last_, [](const TelemetrySample& s) { return s.kv_usage; });
}

double TelemetryWindow::mean_queue_depth() const {
  return window_mean(samples_, last_, [](const TelemetrySample& s) { return s.queue_depth; });
}

double TelemetryWindow::mean_hol_wait_ms() const {
  return window_mean(samples_, last_, [](const TelemetrySample& s) { return s.hol_wait_ms; });
}

Controller::Controller(const ControllerConfig& config)
    : config_(config), window_(config.telemetry_window_ms) {}

void Controller::observe(const TelemetrySample& sample) {
  if (sample.t_ms < last_observed_ms_) {
    throw std::logic_error("controller: out-of-order telemetry event");
  }
  last_observed_ms_ = sample.t_ms;
  window_.push(sample);
}

DecideOutcome Controller::decide(double now_ms, const MorphView& view) {
  DecideOutcome outcome;
  if (!config_.enabled) return outcome;

  const double kv_usage = window_.mean_kv_usage();
  const double hol_wait = window_.mean_hol_wait_ms();
  const bool pressure = kv_usage > config_.kv_trigger || hol_wait > config_.queue_trigger_ms;

  if (pressure) {
    below_low_since_ms_ = std::nullopt;
    if (view.transaction_in_flight) return outcome;
    if (last_restore_cmd_ms_ && now_ms - *last_restore_cmd_ms_ < config_.hold_ms) {
      outcome.notes.push_back("hysteresis_hold_after_restore");
      return outcome;
    }
    if (view.commanded_depth >= config_.max_swapped_layers) {
      ++saturation_cap_events_;
      if (!cap_note_emitted_) {
        // One note per saturated episode keeps the log readable.
        outcome.notes.push_back("swap_cap_reached");
        cap_note_emitted_ = true;
      }
      return outcome;
    }
    cap_note_emitted_ = false;
    const int step = std::min(config_.swap_step, config_.max_swapped_layers - view.commanded_depth);
    Command cmd;
    cmd.kind = CommandKind::kSwapNext;
    cmd.count = step;
    outcome.commands.push_back(cmd);
    outcome.notes.push_back(kv_usage > config_.kv_trigger ? "kv_usage_trigger" : "queue_wait_trigger");
    last_swap_cmd_ms_ = now_ms;
    return outcome;
  }

  cap_note_emitted_ = false;
  if (kv_usage < config_.kv_low) {
    if (!below_low_since_ms_) below_low_since_ms_ = now_ms;
    if (view.commanded_depth == 0 || view.transaction_in_flight) return outcome;
    if (now_ms - *below_low_since_ms_ < config_.hold_ms) return outcome;
    if (last_swap_cmd_ms_ && now_ms - *last_swap_cmd_ms_ < config_.hold_ms) {
      outcome.notes.push_back("hysteresis_hold_after_swap");
      return outcome;
    }
    if (last_restore_cmd_ms_ && now_ms - *last_restore_cmd_ms_ < config_.hold_ms) {
      return outcome;  // restores are rate-limited to one per hold window
    }
    if (view.next_restore_attached_blocks > 0) {
      Command detach;
      detach.kind = CommandKind::kDetach;
      detach.blocks = view.next_restore_attached_blocks;
      outcome.commands.push_back(detach);
    }
    Command restore;
    restore.kind = CommandKind::kRestoreNext;
    restore.count = 1;
    outcome.commands.push_back(restore);
    outcome.notes.push_back("kv_low_restore");
    last_restore_cmd_ms_ = now_ms;
    return outcome;
  }

  below_low_since_ms_ = std::nullopt;
  return outcome;
}

}  // namespace morphsim
