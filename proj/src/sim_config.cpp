#include "morphsim/sim_config.hpp"

#include <cmath>
#include <stdexcept>

namespace morphsim {

int64_t gib_to_bytes(double gib) {
  return static_cast<int64_t>(std::llround(gib * static_cast<double>(kGiB)));
}

void SimModelConfig::validate() const {
  if (num_layers < 1) throw std::invalid_argument("model: num_layers must be >= 1");
  for (int64_t b : layer_bytes) {
    if (b < 1) throw std::invalid_argument("model: layer byte sizes must be positive");
  }
  if (layer_bytes[0] < layer_bytes[1] || layer_bytes[1] < layer_bytes[2] ||
      layer_bytes[2] < layer_bytes[3]) {
    throw std::invalid_argument("model: layer bytes must be non-increasing with precision");
  }
}

double CostModel::decode_step_ms(const std::vector<Precision>& tags, int64_t batch_blocks) const {
  double ms = attn_ms_per_kv_block * static_cast<double>(batch_blocks);
  for (Precision tag : tags) ms += decode_layer_ms(tag);
  return ms;
}

double CostModel::swap_duration_ms(int64_t variant_bytes) const {
  const double transfer_ms =
      static_cast<double>(variant_bytes) / (pcie_gib_per_s * static_cast<double>(kGiB)) * 1000.0;
  return swap_fixed_overhead_ms + transfer_ms;
}

void CostModel::validate() const {
  if (!(prefill_ms_per_token > 0.0)) throw std::invalid_argument("cost: prefill rate must be > 0");
  for (double ms : decode_ms_per_layer) {
    if (!(ms > 0.0)) throw std::invalid_argument("cost: decode layer costs must be > 0");
  }
  if (decode_ms_per_layer[0] < decode_ms_per_layer[1] ||
      decode_ms_per_layer[1] < decode_ms_per_layer[2] ||
      decode_ms_per_layer[2] < decode_ms_per_layer[3]) {
    throw std::invalid_argument("cost: decode cost must be non-increasing as precision drops");
  }
  if (!(attn_ms_per_kv_block > 0.0)) throw std::invalid_argument("cost: attn term must be > 0");
  if (!(pcie_gib_per_s > 0.0)) throw std::invalid_argument("cost: pcie rate must be > 0");
  if (!(swap_fixed_overhead_ms > 0.0)) throw std::invalid_argument("cost: swap overhead must be > 0");
  if (max_batch_tokens < 1) throw std::invalid_argument("cost: max_batch_tokens must be >= 1");
}

}  // namespace morphsim
