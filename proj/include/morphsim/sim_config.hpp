#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "morphsim/toy_model.hpp"

namespace morphsim {

constexpr int64_t kGiB = 1024LL * 1024 * 1024;
constexpr int64_t kMiB = 1024LL * 1024;

int64_t gib_to_bytes(double gib);

// Byte footprint of the served model, per layer and precision level.
struct SimModelConfig {
  int num_layers = 32;
  // Indexed by Precision; resident bytes of one decoder layer at that level.
  std::array<int64_t, 4> layer_bytes = {gib_to_bytes(0.4), gib_to_bytes(0.2), gib_to_bytes(0.1),
                                        gib_to_bytes(0.075)};

  int64_t bytes(Precision p) const { return layer_bytes[static_cast<int>(p)]; }
  int64_t model_bytes_at(Precision uniform) const {
    return static_cast<int64_t>(num_layers) * bytes(uniform);
  }
  void validate() const;
};

// Latency constants for the discrete-event cost model.
struct CostModel {
  double prefill_ms_per_token = 0.02;
  // Indexed by Precision.
  std::array<double, 4> decode_ms_per_layer = {0.3, 0.24, 0.18, 0.15};
  double attn_ms_per_kv_block = 0.00005;
  double pcie_gib_per_s = 26.0;
  double swap_fixed_overhead_ms = 2.0;
  int64_t max_batch_tokens = 100000;

  double decode_layer_ms(Precision p) const { return decode_ms_per_layer[static_cast<int>(p)]; }
  double decode_step_ms(const std::vector<Precision>& tags, int64_t batch_blocks) const;
  // Fixed overhead plus PCIe transfer of the incoming variant.
  double swap_duration_ms(int64_t variant_bytes) const;
  void validate() const;
};

struct MemoryBudget {
  int64_t device_bytes = 24 * kGiB;
  int64_t reserve_bytes = 4 * kGiB;
};

}  // namespace morphsim
