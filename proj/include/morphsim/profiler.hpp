#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "morphsim/toy_model.hpp"

namespace morphsim {

struct LisWeights {
  double alpha1 = 0.25;  // layer transformation term
  double alpha2 = 0.25;  // layer replacement term
  double beta = 0.5;     // model degradation term

  bool all_zero() const { return alpha1 == 0.0 && alpha2 == 0.0 && beta == 0.0; }
};

enum class SequenceKind { kLisGreedy, kFrontToBack, kBackToFront, kRandom };

std::string sequence_kind_name(SequenceKind kind);
SequenceKind sequence_kind_from_name(const std::string& name);

// A prioritized layer swap order: order[0] is morphed first. Always a
// permutation of [0, L).
struct SwapSequence {
  std::vector<int> order;
  std::vector<double> per_step_lis;  // score of the selected layer at each step
  SequenceKind kind = SequenceKind::kLisGreedy;
  uint64_t random_seed = 0;  // only meaningful for kRandom
  int bits = 4;
  LisWeights weights;

  int num_layers() const { return static_cast<int>(order.size()); }
};

// Mean over the calibration batch of cos(layer output, layer input) under the
// full-precision forward. High values mean weak transformations.
std::vector<double> layer_transformation_scores(const ToyModel& model,
                                                const std::vector<Vec>& calib_batch);

// Mean cosine between a layer's full-precision output and its output with
// only that layer quantized, both on the same full-precision layer input.
std::vector<double> layer_replacement_scores(const ToyModel& model,
                                             const std::vector<Vec>& calib_batch, int bits);

// Mean cosine between final outputs with quantized set Q versus Q + {p}.
// Requires p not already in Q.
double model_degradation_score(const ToyModel& model, const std::set<int>& quantized,
                               int candidate, const std::vector<Vec>& calib_batch, int bits);

// Greedy sequence construction: LTS/LRS once up front, then L rounds of
// argmax over alpha1*LTS + alpha2*LRS + beta*MDS with ties broken toward the
// lowest layer index.
SwapSequence greedy_sequence(const ToyModel& model, const std::vector<Vec>& calib_batch,
                             const LisWeights& weights, int bits);

SwapSequence baseline_sequence(SequenceKind kind, int num_layers, uint64_t seed, int bits = 4);

// Degradation curve: for each depth k in [0, L], quantizes the first k layers
// of the order and records 1 - mean cosine(full output, mixed output).
std::vector<double> degradation_curve(const ToyModel& model, const std::vector<int>& order,
                                      const std::vector<Vec>& calib_batch, int bits);

void save_sequence(const SwapSequence& seq, const std::string& path);
SwapSequence load_sequence(const std::string& path);

}  // namespace morphsim
