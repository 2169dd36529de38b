#include "morphsim/profiler.hpp"

#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "morphsim/random.hpp"

namespace morphsim {

namespace {

void require_nonempty_batch(const std::vector<Vec>& batch) {
  if (batch.empty()) throw std::invalid_argument("profiler: calibration batch is empty");
}

}  // namespace

std::string sequence_kind_name(SequenceKind kind) {
  switch (kind) {
    case SequenceKind::kLisGreedy: return "lis_greedy";
    case SequenceKind::kFrontToBack: return "front_to_back";
    case SequenceKind::kBackToFront: return "back_to_front";
    case SequenceKind::kRandom: return "random";
  }
  throw std::logic_error("bad sequence kind");
}

SequenceKind sequence_kind_from_name(const std::string& name) {
  if (name == "lis_greedy") return SequenceKind::kLisGreedy;
  if (name == "front_to_back") return SequenceKind::kFrontToBack;
  if (name == "back_to_front") return SequenceKind::kBackToFront;
  if (name == "random") return SequenceKind::kRandom;
  throw std::invalid_argument("unknown sequence kind: " + name);
}

std::vector<double> layer_transformation_scores(const ToyModel& model,
                                                const std::vector<Vec>& calib_batch) {
  require_nonempty_batch(calib_batch);
  std::vector<double> scores(model.num_layers, 0.0);
  const PrecisionConfig full = PrecisionConfig::full(model.num_layers);
  for (const Vec& x : calib_batch) {
    const ActivationTrace trace = forward(model, full, x);
    for (int p = 0; p < model.num_layers; ++p) {
      scores[p] += cosine(trace.outputs[p], trace.inputs[p]).value;
    }
  }
  for (double& s : scores) s /= static_cast<double>(calib_batch.size());
  return scores;
}

std::vector<double> layer_replacement_scores(const ToyModel& model,
                                             const std::vector<Vec>& calib_batch, int bits) {
  require_nonempty_batch(calib_batch);
  const Precision tag = precision_from_bits(bits);
  std::vector<double> scores(model.num_layers, 0.0);
  const PrecisionConfig full = PrecisionConfig::full(model.num_layers);
  for (const Vec& x : calib_batch) {
    const ActivationTrace trace = forward(model, full, x);
    for (int p = 0; p < model.num_layers; ++p) {
      // Single-layer forward with quantized weights on the same input.
      const Matrix& w = model.weights(p, tag);
      const Vec& in = trace.inputs[p];
      Vec out(model.hidden_dim);
      for (int r = 0; r < model.hidden_dim; ++r) {
        double acc = model.layers[p].b[r];
        const double* row = &w.data[static_cast<size_t>(r) * w.cols];
        for (int c = 0; c < model.hidden_dim; ++c) acc += row[c] * in[c];
        out[r] = in[r] + std::tanh(acc);
      }
      scores[p] += cosine(trace.outputs[p], out).value;
    }
  }
  for (double& s : scores) s /= static_cast<double>(calib_batch.size());
  return scores;
}

double model_degradation_score(const ToyModel& model, const std::set<int>& quantized,
                               int candidate, const std::vector<Vec>& calib_batch, int bits) {
  require_nonempty_batch(calib_batch);
  if (quantized.count(candidate)) {
    throw std::invalid_argument("model_degradation_score: candidate already quantized");
  }
  if (candidate < 0 || candidate >= model.num_layers) {
    throw std::invalid_argument("model_degradation_score: candidate out of range");
  }
  const Precision tag = precision_from_bits(bits);
  const PrecisionConfig base = PrecisionConfig::with_quantized(model.num_layers, quantized, tag);
  std::set<int> extended = quantized;
  extended.insert(candidate);
  const PrecisionConfig with_candidate =
      PrecisionConfig::with_quantized(model.num_layers, extended, tag);

  double sum = 0.0;
  for (const Vec& x : calib_batch) {
    const Vec base_out = forward(model, base, x).final_output;
    const Vec cand_out = forward(model, with_candidate, x).final_output;
    sum += cosine(base_out, cand_out).value;
  }
  return sum / static_cast<double>(calib_batch.size());
}

SwapSequence greedy_sequence(const ToyModel& model, const std::vector<Vec>& calib_batch,
                             const LisWeights& weights, int bits) {
  require_nonempty_batch(calib_batch);
  if (weights.alpha1 < 0.0 || weights.alpha2 < 0.0 || weights.beta < 0.0 || weights.all_zero()) {
    throw std::invalid_argument("greedy_sequence: weights must be non-negative and not all zero");
  }

  const std::vector<double> lts = layer_transformation_scores(model, calib_batch);
  const std::vector<double> lrs = layer_replacement_scores(model, calib_batch, bits);

  SwapSequence seq;
  seq.kind = SequenceKind::kLisGreedy;
  seq.bits = bits;
  seq.weights = weights;

  std::set<int> quantized;
  for (int round = 0; round < model.num_layers; ++round) {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < model.num_layers; ++j) {
      if (quantized.count(j)) continue;
      const double mds = model_degradation_score(model, quantized, j, calib_batch, bits);
      const double lis = weights.alpha1 * lts[j] + weights.alpha2 * lrs[j] + weights.beta * mds;
      if (lis > best_score) {  // ties resolve to the lowest index
        best_score = lis;
        best = j;
      }
    }
    seq.order.push_back(best);
    seq.per_step_lis.push_back(best_score);
    quantized.insert(best);
  }
  return seq;
}

SwapSequence baseline_sequence(SequenceKind kind, int num_layers, uint64_t seed, int bits) {
  if (num_layers < 1) throw std::invalid_argument("baseline_sequence: num_layers must be >= 1");
  SwapSequence seq;
  seq.kind = kind;
  seq.bits = bits;
  seq.order.resize(num_layers);
  std::iota(seq.order.begin(), seq.order.end(), 0);
  switch (kind) {
    case SequenceKind::kFrontToBack:
      break;
    case SequenceKind::kBackToFront:
      std::reverse(seq.order.begin(), seq.order.end());
      break;
    case SequenceKind::kRandom: {
      Rng rng(seed);
      rng.shuffle(seq.order);
      seq.random_seed = seed;
      break;
    }
    case SequenceKind::kLisGreedy:
      throw std::invalid_argument("baseline_sequence: LIS order comes from greedy_sequence");
  }
  seq.per_step_lis.assign(num_layers, 0.0);
  return seq;
}

std::vector<double> degradation_curve(const ToyModel& model, const std::vector<int>& order,
                                      const std::vector<Vec>& calib_batch, int bits) {
  require_nonempty_batch(calib_batch);
  if (static_cast<int>(order.size()) != model.num_layers) {
    throw std::invalid_argument("degradation_curve: order length mismatch");
  }
  const Precision tag = precision_from_bits(bits);
  const PrecisionConfig full = PrecisionConfig::full(model.num_layers);

  std::vector<Vec> full_outputs;
  full_outputs.reserve(calib_batch.size());
  for (const Vec& x : calib_batch) {
    full_outputs.push_back(forward(model, full, x).final_output);
  }

  std::vector<double> curve;
  curve.reserve(order.size() + 1);
  curve.push_back(0.0);  // depth 0: nothing swapped, by definition
  std::set<int> quantized;
  for (int depth = 1; depth <= model.num_layers; ++depth) {
    quantized.insert(order[depth - 1]);
    const PrecisionConfig cfg = PrecisionConfig::with_quantized(model.num_layers, quantized, tag);
    double sum = 0.0;
    for (size_t i = 0; i < calib_batch.size(); ++i) {
      sum += cosine(full_outputs[i], forward(model, cfg, calib_batch[i]).final_output).value;
    }
    curve.push_back(1.0 - sum / static_cast<double>(calib_batch.size()));
  }
  return curve;
}

void save_sequence(const SwapSequence& seq, const std::string& path) {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["L"] = seq.num_layers();
  doc["bits"] = seq.bits;
  doc["weights"] = {{"alpha1", seq.weights.alpha1},
                    {"alpha2", seq.weights.alpha2},
                    {"beta", seq.weights.beta}};
  doc["provenance"] = sequence_kind_name(seq.kind);
  if (seq.kind == SequenceKind::kRandom) doc["random_seed"] = seq.random_seed;
  doc["order"] = seq.order;
  doc["per_step_lis"] = seq.per_step_lis;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sequence file: " + path);
  out << doc.dump(2) << "\n";
}

SwapSequence load_sequence(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sequence file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed sequence file " + path + ": " + e.what());
  }

  SwapSequence seq;
  try {
    seq.order = doc.at("order").get<std::vector<int>>();
    seq.per_step_lis = doc.at("per_step_lis").get<std::vector<double>>();
    seq.bits = doc.at("bits").get<int>();
    seq.kind = sequence_kind_from_name(doc.at("provenance").get<std::string>());
    const auto& w = doc.at("weights");
    seq.weights.alpha1 = w.at("alpha1").get<double>();
    seq.weights.alpha2 = w.at("alpha2").get<double>();
    seq.weights.beta = w.at("beta").get<double>();
    if (doc.contains("random_seed")) seq.random_seed = doc["random_seed"].get<uint64_t>();
    const int declared = doc.at("L").get<int>();
    if (declared != seq.num_layers()) {
      throw std::runtime_error("sequence file L does not match order length");
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed sequence file " + path + ": " + e.what());
  }

  // Must be a permutation of [0, L).
  std::vector<bool> seen(seq.order.size(), false);
  for (int layer : seq.order) {
    if (layer < 0 || layer >= seq.num_layers() || seen[layer]) {
      throw std::runtime_error("sequence file " + path + " is not a permutation of [0, L)");
    }
    seen[layer] = true;
  }
  if (seq.per_step_lis.size() != seq.order.size()) {
    throw std::runtime_error("sequence file " + path + " has mismatched per_step_lis length");
  }
  return seq;
}

}  // namespace morphsim
