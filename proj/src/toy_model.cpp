#include "morphsim/toy_model.hpp"

#include <cmath>
#include <stdexcept>

#include "morphsim/random.hpp"

namespace morphsim {

int precision_bits(Precision p) {
  switch (p) {
    case Precision::kFull: return 16;
    case Precision::kQ8: return 8;
    case Precision::kQ4: return 4;
    case Precision::kQ3: return 3;
  }
  throw std::logic_error("bad precision tag");
}

Precision precision_from_bits(int bits) {
  switch (bits) {
    case 16: return Precision::kFull;
    case 8: return Precision::kQ8;
    case 4: return Precision::kQ4;
    case 3: return Precision::kQ3;
  }
  throw std::invalid_argument("unsupported bit width: " + std::to_string(bits));
}

std::string precision_name(Precision p) {
  switch (p) {
    case Precision::kFull: return "full";
    case Precision::kQ8: return "q8";
    case Precision::kQ4: return "q4";
    case Precision::kQ3: return "q3";
  }
  throw std::logic_error("bad precision tag");
}

double quantize_row_scale(const Vec& row, int bits) {
  double max_abs = 0.0;
  for (double v : row) max_abs = std::max(max_abs, std::fabs(v));
  if (max_abs == 0.0) return 1.0;
  return max_abs / static_cast<double>((1 << (bits - 1)) - 1);
}

Matrix quantize_weights(const Matrix& w, int bits) {
  if (bits < 2) throw std::invalid_argument("quantize_weights: bits must be >= 2");
  Matrix q(w.rows, w.cols);
  for (int r = 0; r < w.rows; ++r) {
    double max_abs = 0.0;
    for (int c = 0; c < w.cols; ++c) max_abs = std::max(max_abs, std::fabs(w.at(r, c)));
    if (max_abs == 0.0) continue;  // all-zero row stays zero
    const double scale = max_abs / static_cast<double>((1 << (bits - 1)) - 1);
    for (int c = 0; c < w.cols; ++c) {
      q.at(r, c) = std::round(w.at(r, c) / scale) * scale;
    }
  }
  return q;
}

namespace {

void materialize_variants(ToyModel& model) {
  model.variants.clear();
  model.variants.reserve(model.layers.size());
  for (const LayerWeights& layer : model.layers) {
    std::array<Matrix, 4> v;
    v[static_cast<int>(Precision::kFull)] = layer.w;
    v[static_cast<int>(Precision::kQ8)] = quantize_weights(layer.w, 8);
    v[static_cast<int>(Precision::kQ4)] = quantize_weights(layer.w, 4);
    v[static_cast<int>(Precision::kQ3)] = quantize_weights(layer.w, 3);
    model.variants.push_back(std::move(v));
  }
}

}  // namespace

ToyModel build_model(uint64_t seed, int num_layers, int hidden_dim) {
  if (num_layers < 1) throw std::invalid_argument("build_model: num_layers must be >= 1");
  if (hidden_dim < 2) throw std::invalid_argument("build_model: hidden_dim must be >= 2");

  ToyModel model;
  model.num_layers = num_layers;
  model.hidden_dim = hidden_dim;
  model.seed = seed;

  // Layers get a log-uniform gain spread so they differ in transformation
  // strength and quantization footprint, the way real decoder blocks do.
  // Within a row the magnitude profile is fixed (shuffled positions, random
  // signs), so row norms and row maxima are pinned to the layer gain and all
  // sensitivity metrics track the same per-layer knob. Gains stay small
  // enough that tanh operates near-linearly and residual norms stay near one.
  Rng rng(seed);
  const double base = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  std::vector<double> profile(hidden_dim);
  for (int k = 0; k < hidden_dim; ++k) {
    profile[k] = 0.3 + 0.7 * static_cast<double>(k) / static_cast<double>(hidden_dim - 1);
  }
  model.layers.reserve(num_layers);
  for (int p = 0; p < num_layers; ++p) {
    const double gain = 0.05 * std::pow(8.0, rng.next_double());
    const double scale = gain * base;
    LayerWeights layer;
    layer.w = Matrix(hidden_dim, hidden_dim);
    layer.b.resize(hidden_dim);
    for (int r = 0; r < hidden_dim; ++r) {
      std::vector<double> magnitudes = profile;
      rng.shuffle(magnitudes);
      for (int c = 0; c < hidden_dim; ++c) {
        const double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
        layer.w.at(r, c) = sign * magnitudes[c] * scale;
      }
    }
    for (double& v : layer.b) v = rng.next_symmetric() * scale * 0.25;
    model.layers.push_back(std::move(layer));
  }
  materialize_variants(model);
  return model;
}

ToyModel make_model(std::vector<LayerWeights> layers, uint64_t seed) {
  if (layers.empty()) throw std::invalid_argument("make_model: need at least one layer");
  ToyModel model;
  model.num_layers = static_cast<int>(layers.size());
  model.hidden_dim = static_cast<int>(layers.front().b.size());
  model.seed = seed;
  for (const LayerWeights& l : layers) {
    if (l.w.rows != model.hidden_dim || l.w.cols != model.hidden_dim ||
        static_cast<int>(l.b.size()) != model.hidden_dim) {
      throw std::invalid_argument("make_model: inconsistent layer dimensions");
    }
  }
  model.layers = std::move(layers);
  materialize_variants(model);
  return model;
}

ActivationTrace forward(const ToyModel& model, const PrecisionConfig& config, const Vec& x) {
  if (static_cast<int>(x.size()) != model.hidden_dim) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  if (static_cast<int>(config.tags.size()) != model.num_layers) {
    throw std::invalid_argument("forward: precision config layer count mismatch");
  }

  ActivationTrace trace;
  trace.inputs.reserve(model.num_layers);
  trace.outputs.reserve(model.num_layers);

  Vec h = x;
  for (int p = 0; p < model.num_layers; ++p) {
    const Matrix& w = model.weights(p, config.tags[p]);
    const Vec& b = model.layers[p].b;
    Vec out(model.hidden_dim);
    for (int r = 0; r < model.hidden_dim; ++r) {
      double acc = b[r];
      const double* row = &w.data[static_cast<size_t>(r) * w.cols];
      for (int c = 0; c < model.hidden_dim; ++c) acc += row[c] * h[c];
      out[r] = h[r] + std::tanh(acc);
    }
    trace.inputs.push_back(h);
    trace.outputs.push_back(out);
    h = std::move(out);
  }
  trace.final_output = h;
  return trace;
}

CosineResult cosine(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return {0.0, true};
  return {dot / (std::sqrt(na) * std::sqrt(nb)), false};
}

std::vector<Vec> calibration_batch(uint64_t seed, int count, int dim) {
  if (count < 1) throw std::invalid_argument("calibration_batch: count must be >= 1");
  if (dim < 1) throw std::invalid_argument("calibration_batch: dim must be >= 1");
  Rng rng(seed);
  std::vector<Vec> batch;
  batch.reserve(count);
  while (static_cast<int>(batch.size()) < count) {
    Vec v(dim);
    double norm_sq = 0.0;
    for (double& e : v) {
      e = rng.next_symmetric();
      norm_sq += e * e;
    }
    if (norm_sq < 1e-12) continue;  // astronomically unlikely, redraw
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& e : v) e *= inv;
    batch.push_back(std::move(v));
  }
  return batch;
}

uint64_t calibration_seed(uint64_t model_seed) {
  // Fixed offset keeps calibration inputs decoupled from the weight stream.
  return model_seed ^ 0x9e3779b97f4a7c15ull;
}

}  // namespace morphsim
