#include "morphsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <deque>
#include <queue>
#include <stdexcept>

namespace morphsim {

MorphState::MorphState(const SimModelConfig& model, Precision initial)
    : model_(model),
      tags_(model.num_layers, initial),
      in_flight_(model.num_layers, false),
      model_bytes_(static_cast<int64_t>(model.num_layers) * model.bytes(initial)) {}

double MorphState::begin_swap(int layer, Precision to, const CostModel& cost) {
  if (layer < 0 || layer >= static_cast<int>(tags_.size())) {
    throw std::invalid_argument("begin_swap: layer out of range");
  }
  if (in_flight_[layer]) throw std::invalid_argument("begin_swap: swap already in flight on layer");
  if (tags_[layer] == to) throw std::invalid_argument("begin_swap: layer already at target precision");
  in_flight_[layer] = true;
  ++in_flight_count_;
  return cost.swap_duration_ms(model_.bytes(to));
}

int64_t MorphState::complete_swap(int layer, Precision to) {
  if (!in_flight_[layer]) throw std::logic_error("complete_swap: no swap in flight on layer");
  in_flight_[layer] = false;
  --in_flight_count_;
  const int64_t delta = model_.bytes(to) - model_.bytes(tags_[layer]);
  tags_[layer] = to;
  model_bytes_ += delta;
  return delta;
}

int MorphState::quantized_count() const {
  int n = 0;
  for (Precision t : tags_) {
    if (t != Precision::kFull) ++n;
  }
  return n;
}

void EngineConfig::validate() const {
  model.validate();
  cost.validate();
  if (!(slo_ms > 0.0)) throw std::invalid_argument("engine: slo_ms must be > 0");
  if (!(monitor_tick_ms > 0.0)) throw std::invalid_argument("engine: monitor tick must be > 0");
  if (budget.device_bytes < 1) throw std::invalid_argument("engine: device budget must be positive");
  if (budget.reserve_bytes < 0) throw std::invalid_argument("engine: reserve must be >= 0");
  if (kv.block_tokens < 1 || kv.block_bytes < 1) {
    throw std::invalid_argument("engine: invalid kv block geometry");
  }
}

int64_t EngineConfig::auto_static_capacity_blocks() const {
  const int64_t free_for_kv =
      budget.device_bytes - model.model_bytes_at(Precision::kFull) - budget.reserve_bytes;
  return free_for_kv / kv.block_bytes;
}

namespace {

constexpr double kNever = -1.0;

enum class EventKind { kArrival, kPrefillDone, kDecodeDone, kSwapDone, kTick };

struct Event {
  double t_ms;
  uint64_t seq;
  EventKind kind;
  int subject = -1;  // request id or layer index
  Precision to = Precision::kFull;
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t_ms != b.t_ms) return a.t_ms > b.t_ms;
    return a.seq > b.seq;
  }
};

struct Req {
  int id = 0;
  int64_t arrival_ms = 0;
  int prompt_tokens = 0;
  int output_tokens = 0;
  RequestState state = RequestState::kQueued;
  int generated = 0;
  double first_token_ms = kNever;
  double done_ms = kNever;
  double first_admit_ms = kNever;
  int preemptions = 0;
  int64_t tokens_quantized = 0;
  int64_t token_layer_quant_sum = 0;
};

class Simulation {
 public:
  Simulation(const EngineConfig& config, const ArmSpec& arm, const Trace& trace, uint64_t seed)
      : cfg_(config),
        arm_(arm),
        seed_(seed),
        kv_config_(resolved_kv_config(config)),
        pool_(kv_config_),
        morph_(config.model, arm.initial_precision),
        controller_(arm.controller) {
    validate(trace);
    attach_record_.assign(cfg_.model.num_layers, 0);
    peak_quantized_ = morph_.quantized_count();
    reqs_.reserve(trace.events.size());
    for (const TraceEvent& ev : trace.events) {
      Req r;
      r.id = static_cast<int>(reqs_.size());
      r.arrival_ms = ev.arrival_ms;
      r.prompt_tokens = ev.prompt_tokens;
      r.output_tokens = ev.output_tokens;
      reqs_.push_back(r);
    }
  }

  RunResult run() {
    for (const Req& r : reqs_) {
      schedule(static_cast<double>(r.arrival_ms), EventKind::kArrival, r.id);
    }
    refresh_timelines(0.0);

    while (!events_.empty()) {
      const Event ev = events_.top();
      events_.pop();
      if (ev.t_ms < now_) throw std::logic_error("event processed out of timestamp order");
      now_ = ev.t_ms;
      process(ev);
      boundary();
    }
    return finalize();
  }

 private:
  static KvConfig resolved_kv_config(const EngineConfig& config) {
    KvConfig kv = config.kv;
    if (kv.static_capacity_blocks <= 0) {
      kv.static_capacity_blocks = config.auto_static_capacity_blocks();
    }
    return kv;
  }

  void validate(const Trace& trace) {
    cfg_.validate();
    if (arm_.controller.enabled) {
      arm_.controller.validate(cfg_.model.num_layers);
      if (!arm_.sequence.has_value()) {
        throw std::invalid_argument("morph arm requires a bound swap sequence");
      }
      if (arm_.sequence->num_layers() != cfg_.model.num_layers) {
        throw std::invalid_argument("swap sequence layer count does not match engine model");
      }
    }
    if (kv_config_.static_capacity_blocks < 1) {
      throw std::invalid_argument("engine: static KV capacity must be >= 1 block");
    }
    // Ledger must balance at t=0 with the arm's initial residency; the static
    // capacity itself is sized against the full-precision model.
    const int64_t full_bytes = cfg_.model.model_bytes_at(Precision::kFull);
    const int64_t kv_bytes = kv_config_.static_capacity_blocks * kv_config_.block_bytes;
    if (full_bytes + kv_bytes + cfg_.budget.reserve_bytes > cfg_.budget.device_bytes) {
      throw std::invalid_argument("engine: static capacity exceeds device budget");
    }
    (void)trace;
  }

  // ---- scheduling ----

  void schedule(double t_ms, EventKind kind, int subject = -1, Precision to = Precision::kFull) {
    events_.push(Event{t_ms, next_event_seq_++, kind, subject, to});
  }

  void logf(const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    log_.append(now_, buf);
  }

  // ---- ledger ----

  int64_t kv_bytes() const { return pool_.capacity_blocks() * kv_config_.block_bytes; }

  int64_t free_bytes() const {
    return cfg_.budget.device_bytes - morph_.model_bytes() - kv_bytes() - cfg_.budget.reserve_bytes;
  }

  void check_ledger() const {
    if (free_bytes() < 0) throw std::logic_error("memory ledger went negative");
  }

  // ---- event processing ----

  void process(const Event& ev) {
    switch (ev.kind) {
      case EventKind::kArrival: on_arrival(ev.subject); break;
      case EventKind::kPrefillDone: on_prefill_done(ev.subject); break;
      case EventKind::kDecodeDone: on_decode_done(); break;
      case EventKind::kSwapDone: on_swap_done(ev.subject, ev.to); break;
      case EventKind::kTick: on_tick(); break;
    }
  }

  void on_arrival(int id) {
    Req& r = reqs_[id];
    r.state = RequestState::kQueued;
    wait_queue_.push_back(id);
    logf("ARRIVE req=%d prompt=%d output=%d", id, r.prompt_tokens, r.output_tokens);
    arm_tick();
  }

  // Monitor sampling only runs while there is something to observe; the chain
  // parks across idle stretches and re-arms on the next arrival.
  bool quiescent() const {
    return wait_queue_.empty() && prefill_queue_.empty() && running_.empty() && !device_busy_ &&
           morph_.in_flight_count() == 0 && !pending_restore_ && commanded_depth_ == 0 &&
           pool_.attached_extra_blocks() == 0;
  }

  void arm_tick() {
    if (tick_armed_) return;
    schedule(now_ + cfg_.monitor_tick_ms, EventKind::kTick);
    tick_armed_ = true;
  }

  void on_tick() {
    tick_armed_ = false;
    if (all_terminal() || quiescent()) return;
    arm_tick();
  }

  void on_prefill_done(int id) {
    device_busy_ = false;
    Req& r = reqs_[id];
    logf("PREFILL_DONE req=%d", id);
    emit_token(r, prefill_quant_at_start_);
    if (r.state != RequestState::kDone) {
      r.state = RequestState::kDecoding;
      running_.push_back(id);
    }
  }

  void on_decode_done() {
    device_busy_ = false;
    for (int id : step_members_) {
      Req& r = reqs_[id];
      if (r.state != RequestState::kDecoding) continue;
      emit_token(r, step_quant_at_start_);
    }
    logf("STEP_DONE batch=%zu", step_members_.size());
    step_members_.clear();
  }

  void on_swap_done(int layer, Precision to) {
    const int64_t delta = morph_.complete_swap(layer, to);
    logf("SWAP_DONE layer=%d to=%s model_bytes=%lld", layer, precision_name(to).c_str(),
         static_cast<long long>(morph_.model_bytes()));
    if (delta < 0) {
      // Down-swap frees layer memory; the freed bytes become KV blocks now.
      ++swap_completions_;
      const int64_t freed = -delta;
      int64_t attach_n = freed / kv_config_.block_bytes;
      const int64_t headroom = (free_bytes() - pending_model_growth_) / kv_config_.block_bytes;
      if (attach_n > headroom) {
        logf("FAULT attach_clipped want=%lld headroom=%lld", static_cast<long long>(attach_n),
             static_cast<long long>(headroom));
        attach_n = std::max<int64_t>(headroom, 0);
      }
      if (attach_n > 0) {
        pool_.attach_blocks(attach_n);
        attach_record_[layer] += attach_n;
        logf("KV_ATTACH layer=%d blocks=%lld capacity=%lld", layer,
             static_cast<long long>(attach_n), static_cast<long long>(pool_.capacity_blocks()));
      }
    } else {
      ++restore_completions_;
      pending_model_growth_ -= delta;
    }
    peak_quantized_ = std::max(peak_quantized_, morph_.quantized_count());
    check_ledger();
  }

  void emit_token(Req& r, int quant_count) {
    ++r.generated;
    ++tokens_total_;
    if (r.first_token_ms == kNever) r.first_token_ms = now_;
    if (quant_count > 0) {
      ++r.tokens_quantized;
      r.token_layer_quant_sum += quant_count;
    }
    if (r.generated >= r.output_tokens) {
      r.state = RequestState::kDone;
      r.done_ms = now_;
      ++done_count_;
      live_tokens_ -= r.prompt_tokens + r.output_tokens;
      pool_.release(r.id);
      logf("DONE req=%d", r.id);
    }
  }

  // ---- boundary work: admission, control, dispatch ----

  bool all_terminal() const {
    return done_count_ + unserviceable_count_ == static_cast<int64_t>(reqs_.size());
  }

  void boundary() {
    try_admissions();
    if (arm_.controller.enabled) {
      controller_.observe(sample_now());
      const DecideOutcome outcome = controller_.decide(now_, morph_view());
      apply_commands(outcome);
      poll_pending_restore();
    }
    dispatch_device();
    refresh_timelines(now_);
    check_ledger();
  }

  TelemetrySample sample_now() const {
    TelemetrySample s;
    s.t_ms = now_;
    s.kv_usage = pool_.usage_fraction();
    s.queue_depth = static_cast<double>(wait_queue_.size());
    s.hol_wait_ms = wait_queue_.empty()
                        ? 0.0
                        : now_ - static_cast<double>(reqs_[wait_queue_.front()].arrival_ms);
    return s;
  }

  MorphView morph_view() const {
    MorphView view;
    view.num_layers = cfg_.model.num_layers;
    view.commanded_depth = commanded_depth_;
    view.transaction_in_flight = morph_.in_flight_count() > 0 || pending_restore_.has_value();
    if (commanded_depth_ > 0) {
      view.next_restore_attached_blocks = attach_record_[arm_.sequence->order[commanded_depth_ - 1]];
    }
    return view;
  }

  void apply_commands(const DecideOutcome& outcome) {
    for (const std::string& note : outcome.notes) logf("NOTE %s", note.c_str());
    for (const Command& cmd : outcome.commands) {
      switch (cmd.kind) {
        case CommandKind::kSwapNext: {
          const Precision target = precision_from_bits(arm_.controller.target_bits);
          for (int i = 0; i < cmd.count; ++i) {
            const int layer = arm_.sequence->order[commanded_depth_];
            begin_swap(layer, target);
            ++commanded_depth_;
          }
          break;
        }
        case CommandKind::kDetach: {
          const int64_t available =
              pool_.attached_extra_blocks() - pool_.pending_detach_blocks();
          if (cmd.blocks > available) {
            logf("FAULT detach_dropped want=%lld available=%lld",
                 static_cast<long long>(cmd.blocks), static_cast<long long>(available));
            break;
          }
          const DetachResult res = pool_.detach_blocks(cmd.blocks);
          logf("KV_DETACH blocks=%lld removed=%lld deferred=%lld capacity=%lld",
               static_cast<long long>(cmd.blocks), static_cast<long long>(res.removed_now),
               static_cast<long long>(res.deferred), static_cast<long long>(res.capacity_blocks));
          break;
        }
        case CommandKind::kRestoreNext: {
          for (int i = 0; i < cmd.count; ++i) {
            if (commanded_depth_ == 0) break;
            --commanded_depth_;
            const int layer = arm_.sequence->order[commanded_depth_];
            attach_record_[layer] = 0;
            pending_restore_ = layer;
            logf("RESTORE_PENDING layer=%d", layer);
          }
          break;
        }
        case CommandKind::kAttach:
          break;  // attach is driven by swap completion, not by decide()
      }
    }
  }

  void begin_swap(int layer, Precision to) {
    const double duration = morph_.begin_swap(layer, to, cfg_.cost);
    schedule(now_ + duration, EventKind::kSwapDone, layer, to);
    logf("SWAP_BEGIN layer=%d from=%s to=%s done_at=%.6f", layer,
         precision_name(morph_.tag(layer)).c_str(), precision_name(to).c_str(), now_ + duration);
  }

  // A commanded restore begins once its detach fully drained and the ledger
  // can host the full-precision variant again.
  void poll_pending_restore() {
    if (!pending_restore_) return;
    if (pool_.pending_detach_blocks() > 0) return;
    const int layer = *pending_restore_;
    const int64_t delta = cfg_.model.bytes(Precision::kFull) - cfg_.model.bytes(morph_.tag(layer));
    if (free_bytes() - pending_model_growth_ < delta) return;
    pending_model_growth_ += delta;
    pending_restore_.reset();
    begin_swap(layer, Precision::kFull);
  }

  void try_admissions() {
    while (!wait_queue_.empty()) {
      const int id = wait_queue_.front();
      Req& r = reqs_[id];
      const int64_t target_tokens = r.prompt_tokens + r.generated;
      const int64_t blocks_from_empty =
          (target_tokens + kv_config_.block_tokens - 1) / kv_config_.block_tokens;
      if (blocks_from_empty > max_possible_capacity_blocks() ||
          r.prompt_tokens + r.output_tokens > cfg_.cost.max_batch_tokens) {
        wait_queue_.pop_front();
        r.state = RequestState::kUnserviceable;
        ++unserviceable_count_;
        logf("UNSERVICEABLE req=%d blocks_needed=%lld", id,
             static_cast<long long>(blocks_from_empty));
        continue;
      }
      if (live_tokens_ + r.prompt_tokens + r.output_tokens > cfg_.cost.max_batch_tokens) break;
      pool_.admit(id);
      const auto granted = pool_.alloc_for_tokens(id, target_tokens);
      if (!granted) {
        pool_.release(id);  // drop the empty map; strict FIFO, head blocks the queue
        break;
      }
      wait_queue_.pop_front();
      live_tokens_ += r.prompt_tokens + r.output_tokens;
      if (r.first_admit_ms == kNever) r.first_admit_ms = now_;
      r.state = RequestState::kPrefilling;
      prefill_queue_.push_back(id);
      logf("ADMIT req=%d tokens=%lld blocks=%lld", id, static_cast<long long>(target_tokens),
           static_cast<long long>(granted->size()));
    }
  }

  int64_t max_possible_capacity_blocks() const {
    int64_t max_attach = 0;
    if (arm_.controller.enabled) {
      const Precision target = precision_from_bits(arm_.controller.target_bits);
      const int64_t per_layer =
          (cfg_.model.bytes(Precision::kFull) - cfg_.model.bytes(target)) / kv_config_.block_bytes;
      max_attach = per_layer * arm_.controller.max_swapped_layers;
    }
    return kv_config_.static_capacity_blocks + max_attach;
  }

  void dispatch_device() {
    if (device_busy_) return;
    if (start_prefill()) return;
    if (!running_.empty()) {
      if (start_decode_step()) return;
      // The whole batch was preempted; freed blocks may unblock the queue.
      try_admissions();
      start_prefill();
    }
  }

  bool start_prefill() {
    if (prefill_queue_.empty()) return false;
    const int id = prefill_queue_.front();
    prefill_queue_.pop_front();
    Req& r = reqs_[id];
    const int64_t tokens = r.prompt_tokens + r.generated;
    const double duration = static_cast<double>(tokens) * cfg_.cost.prefill_ms_per_token;
    prefill_quant_at_start_ = morph_.quantized_count();
    device_busy_ = true;
    schedule(now_ + duration, EventKind::kPrefillDone, id);
    logf("PREFILL_BEGIN req=%d tokens=%lld quant=%d dur=%.6f", id,
         static_cast<long long>(tokens), prefill_quant_at_start_, duration);
    return true;
  }

  bool start_decode_step() {
    const std::vector<int> members = running_;
    std::vector<int> batch;
    batch.reserve(members.size());
    for (int id : members) {
      Req& r = reqs_[id];
      if (r.state != RequestState::kDecoding) continue;
      const int64_t target = r.prompt_tokens + r.generated;
      const int64_t need = target - pool_.tokens_of(id);
      if (need > 0) {
        bool preempted_self = false;
        while (!pool_.alloc_for_tokens(id, need)) {
          logf("PRESSURE req=%d need_tokens=%lld free_blocks=%lld", id,
               static_cast<long long>(need), static_cast<long long>(pool_.free_blocks()));
          if (arm_.controller.enabled) {
            controller_.observe(sample_now());
            apply_commands(controller_.decide(now_, morph_view()));
          }
          const auto victim = pool_.preempt_victim([&](RequestId rid) {
            return reqs_[rid].state == RequestState::kDecoding;
          });
          if (!victim) throw std::logic_error("decode shortage with no preemptible victim");
          do_preempt(*victim);
          if (*victim == id) {
            preempted_self = true;
            break;
          }
        }
        if (preempted_self) continue;
      }
      batch.push_back(id);
    }
    if (batch.empty()) return false;

    int64_t batch_blocks = 0;
    for (int id : batch) batch_blocks += pool_.blocks_of(id);
    const double duration = cfg_.cost.decode_step_ms(morph_.tags(), batch_blocks);
    step_members_ = std::move(batch);
    step_quant_at_start_ = morph_.quantized_count();
    device_busy_ = true;
    schedule(now_ + duration, EventKind::kDecodeDone);
    logf("STEP_BEGIN batch=%zu blocks=%lld quant=%d dur=%.6f", step_members_.size(),
         static_cast<long long>(batch_blocks), step_quant_at_start_, duration);
    return true;
  }

  void do_preempt(int id) {
    Req& r = reqs_[id];
    r.state = RequestState::kSwappedOut;
    ++r.preemptions;
    ++preemption_count_;
    live_tokens_ -= r.prompt_tokens + r.output_tokens;
    running_.erase(std::remove(running_.begin(), running_.end(), id), running_.end());
    // LIFO victims under FIFO admission arrived no later than anything still
    // queued, so head insertion preserves arrival order.
    wait_queue_.push_front(id);
    logf("PREEMPT req=%d generated=%d", id, r.generated);
  }

  void refresh_timelines(double t_ms) {
    tl_.kv_capacity_blocks.record(t_ms, static_cast<double>(pool_.capacity_blocks()));
    tl_.kv_used_blocks.record(t_ms, static_cast<double>(pool_.used_blocks()));
    tl_.quantized_layers.record(t_ms, static_cast<double>(morph_.quantized_count()));
    tl_.queue_depth.record(t_ms, static_cast<double>(wait_queue_.size()));
  }

  // ---- report ----

  RunResult finalize() {
    MetricsReport rep;
    rep.arm = arm_.label;
    rep.seed = seed_;
    rep.slo_ms = cfg_.slo_ms;
    rep.total_requests = static_cast<int64_t>(reqs_.size());
    rep.completed_requests = done_count_;
    rep.unserviceable_requests = unserviceable_count_;
    rep.preemption_count = preemption_count_;

    std::vector<double> ttft, tpot, e2e, queue;
    double sim_end = 0.0;
    for (const Req& r : reqs_) {
      if (r.state != RequestState::kDone) continue;
      sim_end = std::max(sim_end, r.done_ms);
      PerRequestMetrics m;
      m.id = r.id;
      m.arrival_ms = r.arrival_ms;
      m.prompt_tokens = r.prompt_tokens;
      m.output_tokens = r.output_tokens;
      m.ttft_ms = r.first_token_ms - static_cast<double>(r.arrival_ms);
      m.e2e_ms = r.done_ms - static_cast<double>(r.arrival_ms);
      m.queue_ms = r.first_admit_ms - static_cast<double>(r.arrival_ms);
      if (r.output_tokens >= 2) {
        m.tpot_ms = (r.done_ms - r.first_token_ms) / static_cast<double>(r.output_tokens - 1);
        tpot.push_back(*m.tpot_ms);
      }
      m.preemptions = r.preemptions;
      m.tokens_quantized = r.tokens_quantized;
      m.token_layer_quant_sum = r.token_layer_quant_sum;
      ttft.push_back(m.ttft_ms);
      e2e.push_back(m.e2e_ms);
      queue.push_back(m.queue_ms);
      if (m.ttft_ms > cfg_.slo_ms) ++rep.slo_violations;
      rep.per_request.push_back(m);
    }
    // Exposure totals cover every emitted token, including progress made by
    // requests that were later flagged unserviceable.
    for (const Req& r : reqs_) {
      rep.tokens_quantized += r.tokens_quantized;
      rep.token_layer_quant_sum += r.token_layer_quant_sum;
    }
    rep.ttft_ms = PercentileSummary::of(ttft);
    rep.tpot_ms = PercentileSummary::of(tpot);
    rep.e2e_ms = PercentileSummary::of(e2e);
    rep.queue_ms = PercentileSummary::of(queue);
    rep.slo_violation_rate =
        rep.completed_requests > 0
            ? static_cast<double>(rep.slo_violations) / static_cast<double>(rep.completed_requests)
            : 0.0;
    rep.sim_end_ms = sim_end;
    rep.throughput_rps =
        sim_end > 0.0 ? static_cast<double>(rep.completed_requests) / (sim_end / 1000.0) : 0.0;

    rep.kv_static_capacity_blocks = kv_config_.static_capacity_blocks;
    rep.kv_peak_capacity_blocks = static_cast<int64_t>(tl_.kv_capacity_blocks.peak());
    rep.kv_peak_used_blocks = static_cast<int64_t>(tl_.kv_used_blocks.peak());
    const double cap_mean = tl_.kv_capacity_blocks.time_weighted_mean(sim_end);
    rep.kv_mean_utilization =
        cap_mean > 0.0 ? tl_.kv_used_blocks.time_weighted_mean(sim_end) / cap_mean : 0.0;

    rep.swap_events = swap_completions_;
    rep.restore_events = restore_completions_;
    rep.peak_quantized_layers = peak_quantized_;
    rep.saturation_cap_events = controller_.saturation_cap_events();

    rep.tokens_total = tokens_total_;
    rep.exposure_fraction =
        tokens_total_ > 0 ? static_cast<double>(rep.tokens_quantized) / static_cast<double>(tokens_total_)
                          : 0.0;

    RunResult result;
    result.report = std::move(rep);
    result.log = std::move(log_);
    result.timelines = std::move(tl_);
    return result;
  }

  // ---- members ----

  EngineConfig cfg_;
  ArmSpec arm_;
  uint64_t seed_;
  KvConfig kv_config_;
  KvBlockPool pool_;
  MorphState morph_;
  Controller controller_;

  double now_ = 0.0;
  uint64_t next_event_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, EventAfter> events_;

  std::vector<Req> reqs_;
  std::deque<int> wait_queue_;
  std::deque<int> prefill_queue_;
  std::vector<int> running_;  // decoding requests in admission order
  int64_t live_tokens_ = 0;

  bool device_busy_ = false;
  bool tick_armed_ = false;
  std::vector<int> step_members_;
  int step_quant_at_start_ = 0;
  int prefill_quant_at_start_ = 0;

  int commanded_depth_ = 0;
  std::vector<int64_t> attach_record_;
  std::optional<int> pending_restore_;
  int64_t pending_model_growth_ = 0;

  int64_t done_count_ = 0;
  int64_t unserviceable_count_ = 0;
  int64_t preemption_count_ = 0;
  int64_t tokens_total_ = 0;
  int64_t swap_completions_ = 0;
  int64_t restore_completions_ = 0;
  int peak_quantized_ = 0;

  EventLog log_;
  Timelines tl_;
};

}  // namespace

RunResult run_simulation(const EngineConfig& config, const ArmSpec& arm, const Trace& trace,
                         uint64_t seed) {
  Simulation sim(config, arm, trace, seed);
  return sim.run();
}

}  // namespace morphsim
