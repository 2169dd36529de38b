#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace morphsim {

using Vec = std::vector<double>;

// Dense row-major matrix, just large enough for the profiling models.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  bool operator==(const Matrix&) const = default;
};

enum class Precision { kFull = 0, kQ8 = 1, kQ4 = 2, kQ3 = 3 };

constexpr std::array<Precision, 4> kAllPrecisions = {Precision::kFull, Precision::kQ8,
                                                     Precision::kQ4, Precision::kQ3};

int precision_bits(Precision p);         // 16 / 8 / 4 / 3
Precision precision_from_bits(int bits);  // accepts 16, 8, 4, 3
std::string precision_name(Precision p);  // "full" / "q8" / "q4" / "q3"

// Per-row symmetric uniform quantization at `bits`: scale = max|row| /
// (2^(bits-1) - 1), entries snapped to round(w/scale)*scale. An all-zero row
// keeps scale 1 and stays zero.
Matrix quantize_weights(const Matrix& w, int bits);
double quantize_row_scale(const Vec& row, int bits);

struct LayerWeights {
  Matrix w;
  Vec b;
};

// Small residual dense network: layer p maps x -> x + tanh(W_p x + b_p).
// Quantized realizations of every layer are materialized at construction.
struct ToyModel {
  int num_layers = 0;
  int hidden_dim = 0;
  uint64_t seed = 0;
  std::vector<LayerWeights> layers;
  // Indexed [layer][precision]; kFull aliases the unquantized weights.
  std::vector<std::array<Matrix, 4>> variants;

  const Matrix& weights(int layer, Precision p) const { return variants[layer][static_cast<int>(p)]; }
};

ToyModel build_model(uint64_t seed, int num_layers, int hidden_dim);
// Direct construction from explicit weights (tests and experiments).
ToyModel make_model(std::vector<LayerWeights> layers, uint64_t seed = 0);

// Per-layer precision assignment. The quantized set Q is every layer whose
// tag is not kFull.
struct PrecisionConfig {
  std::vector<Precision> tags;

  static PrecisionConfig full(int num_layers) {
    return PrecisionConfig{std::vector<Precision>(num_layers, Precision::kFull)};
  }
  static PrecisionConfig with_quantized(int num_layers, const std::set<int>& q, Precision p) {
    PrecisionConfig cfg = full(num_layers);
    for (int layer : q) cfg.tags.at(layer) = p;
    return cfg;
  }
  std::set<int> quantized_set() const {
    std::set<int> q;
    for (size_t i = 0; i < tags.size(); ++i) {
      if (tags[i] != Precision::kFull) q.insert(static_cast<int>(i));
    }
    return q;
  }
};

struct ActivationTrace {
  std::vector<Vec> inputs;   // inputs[p] is what layer p consumed
  std::vector<Vec> outputs;  // outputs[p] = inputs[p+1]
  Vec final_output;
};

ActivationTrace forward(const ToyModel& model, const PrecisionConfig& config, const Vec& x);

struct CosineResult {
  double value = 0.0;
  bool degenerate = false;  // one of the vectors had zero norm
};

// cos(a,b) = a.b / (|a||b|); zero-norm inputs yield 0 with the flag set.
CosineResult cosine(const Vec& a, const Vec& b);

// Fixed batch of pseudo-random unit vectors used as profiling inputs.
std::vector<Vec> calibration_batch(uint64_t seed, int count, int dim);
// The calibration seed conventionally derived from a model seed.
uint64_t calibration_seed(uint64_t model_seed);

}  // namespace morphsim
