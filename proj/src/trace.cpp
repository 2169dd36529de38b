#include "morphsim/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "morphsim/random.hpp"

namespace morphsim {

namespace {

int64_t round_half_up(double x) { return static_cast<int64_t>(std::floor(x + 0.5)); }

[[noreturn]] void parse_fail(const std::string& label, int line_no, const std::string& why) {
  std::ostringstream os;
  os << label << ":" << line_no << ": " << why;
  throw std::runtime_error(os.str());
}

}  // namespace

Trace parse_trace_stream(std::istream& in, const std::string& label) {
  Trace trace;
  trace.source_label = label;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Trim trailing CR from CRLF inputs.
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;

    TraceEvent ev;
    char comma1 = 0, comma2 = 0;
    std::istringstream fields(line);
    if (!(fields >> ev.arrival_ms >> comma1 >> ev.prompt_tokens >> comma2 >> ev.output_tokens) ||
        comma1 != ',' || comma2 != ',') {
      parse_fail(label, line_no, "expected `arrival_ms,prompt_tokens,output_tokens`, got `" + line + "`");
    }
    std::string rest;
    if (fields >> rest) {
      parse_fail(label, line_no, "trailing data `" + rest + "`");
    }
    if (ev.arrival_ms < 0) parse_fail(label, line_no, "negative arrival_ms");
    if (ev.prompt_tokens < 1) parse_fail(label, line_no, "prompt_tokens must be >= 1");
    if (ev.output_tokens < 1) parse_fail(label, line_no, "output_tokens must be >= 1");
    trace.events.push_back(ev);
  }

  if (!std::is_sorted(trace.events.begin(), trace.events.end(),
                      [](const TraceEvent& a, const TraceEvent& b) { return a.arrival_ms < b.arrival_ms; })) {
    std::stable_sort(trace.events.begin(), trace.events.end(),
                     [](const TraceEvent& a, const TraceEvent& b) { return a.arrival_ms < b.arrival_ms; });
    trace.reordered_on_load = true;
  }
  return trace;
}

Trace parse_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  return parse_trace_stream(in, path);
}

void serialize_trace(const Trace& trace, std::ostream& out) {
  out << "# arrival_ms,prompt_tokens,output_tokens\n";
  for (const TraceEvent& ev : trace.events) {
    out << ev.arrival_ms << "," << ev.prompt_tokens << "," << ev.output_tokens << "\n";
  }
}

void serialize_trace(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  serialize_trace(trace, out);
}

Trace downscale(const Trace& trace, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("downscale factor must be > 0");
  Trace out = trace;
  if (out.events.empty()) return out;
  // Scale cumulative offsets from the first arrival, not per-gap, so rounding
  // error does not accumulate across events.
  const int64_t first = trace.events.front().arrival_ms;
  for (size_t i = 0; i < out.events.size(); ++i) {
    const double offset = static_cast<double>(trace.events[i].arrival_ms - first) * factor;
    out.events[i].arrival_ms = first + round_half_up(offset);
  }
  return out;
}

Trace synth_burst(const BurstSpec& spec) {
  if (!(spec.base_rps > 0.0) || !(spec.burst_rps > 0.0)) {
    throw std::invalid_argument("synth_burst: rates must be > 0");
  }
  if (spec.total_ms < 0 || spec.burst_len_ms < 0 || spec.burst_start_ms < 0 ||
      spec.burst_start_ms + spec.burst_len_ms > spec.total_ms) {
    throw std::invalid_argument("synth_burst: burst window must lie inside [0, total_ms]");
  }
  if (spec.prompt_tokens < 1 || spec.output_tokens < 1) {
    throw std::invalid_argument("synth_burst: token counts must be >= 1");
  }

  Trace trace;
  trace.source_label = "synth";
  if (spec.total_ms == 0) return trace;

  Rng rng(spec.seed);
  const double burst_start = static_cast<double>(spec.burst_start_ms);
  const double burst_end = static_cast<double>(spec.burst_start_ms + spec.burst_len_ms);
  const double total = static_cast<double>(spec.total_ms);

  auto rate_at = [&](double t_ms) {
    return (t_ms >= burst_start && t_ms < burst_end) ? spec.burst_rps : spec.base_rps;
  };
  auto next_boundary = [&](double t_ms) {
    if (t_ms < burst_start) return burst_start;
    if (t_ms < burst_end) return burst_end;
    return total;
  };

  // Inhomogeneous Poisson via exponential residual carried across rate
  // boundaries (memorylessness makes this exact).
  double t = 0.0;
  double residual = rng.next_exp();
  while (t < total) {
    const double rate_per_ms = rate_at(t) / 1000.0;
    const double boundary = next_boundary(t);
    const double span = (boundary - t) * rate_per_ms;
    if (residual <= span) {
      t += residual / rate_per_ms;
      if (t >= total) break;
      TraceEvent ev;
      ev.arrival_ms = round_half_up(t);
      ev.prompt_tokens = spec.prompt_tokens;
      ev.output_tokens = spec.output_tokens;
      trace.events.push_back(ev);
      residual = rng.next_exp();
    } else {
      residual -= span;
      t = boundary;
    }
  }
  return trace;
}

}  // namespace morphsim
