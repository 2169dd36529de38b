#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace morphsim {

// One inference request in an arrival trace.
struct TraceEvent {
  int64_t arrival_ms = 0;
  int prompt_tokens = 0;
  int output_tokens = 0;

  bool operator==(const TraceEvent&) const = default;
};

struct Trace {
  std::vector<TraceEvent> events;  // sorted by arrival_ms, stable
  std::string source_label;
  bool reordered_on_load = false;  // input was not sorted; a stable sort was applied
};

// Trace file format: one `arrival_ms,prompt_tokens,output_tokens` row per
// line, `#` starts a comment, blank lines ignored. Throws std::runtime_error
// with the offending line number on malformed input.
Trace parse_trace(const std::string& path);
Trace parse_trace_stream(std::istream& in, const std::string& label);

void serialize_trace(const Trace& trace, std::ostream& out);
void serialize_trace(const Trace& trace, const std::string& path);

// Multiplies inter-arrival gaps by `factor` (dividing the rate by it). The
// first arrival is unchanged; timestamps are rounded half-up to whole ms.
Trace downscale(const Trace& trace, double factor);

struct BurstSpec {
  uint64_t seed = 0;
  double base_rps = 1.0;
  double burst_rps = 1.0;
  int64_t burst_start_ms = 0;
  int64_t burst_len_ms = 0;
  int64_t total_ms = 0;
  int prompt_tokens = 1;
  int output_tokens = 1;
};

// Piecewise-homogeneous Poisson arrivals: base_rps outside the burst window,
// burst_rps inside it. Deterministic for a fixed seed.
Trace synth_burst(const BurstSpec& spec);

}  // namespace morphsim
