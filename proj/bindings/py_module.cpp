#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "morphsim/engine.hpp"
#include "morphsim/experiment.hpp"
#include "morphsim/kv_pool.hpp"
#include "morphsim/profiler.hpp"
#include "morphsim/toy_model.hpp"
#include "morphsim/trace.hpp"

namespace py = pybind11;
using namespace morphsim;

namespace {

// Experiment configs and reports cross the boundary as JSON strings; the
// python package wraps them with dict-based helpers.
std::string run_arm_json(const std::string& config_json, const std::string& arm,
                         const std::string& out_dir) {
  const ExperimentConfig cfg = config_from_json(nlohmann::json::parse(config_json));
  const RunResult result = run_arm(cfg, arm);
  if (!out_dir.empty()) write_run_files(result, out_dir, arm);
  return result.report.to_json().dump();
}

std::string profile_json(const std::string& config_json, const std::string& out_dir) {
  const ExperimentConfig cfg = config_from_json(nlohmann::json::parse(config_json));
  const ProfileOutput output = run_profile(cfg);
  if (!out_dir.empty()) write_profile_files(output, out_dir);
  nlohmann::json doc;
  doc["lis_order"] = output.lis.order;
  doc["per_step_lis"] = output.lis.per_step_lis;
  for (const auto& [kind, curve] : output.curves) doc["curves"][kind] = curve;
  return doc.dump();
}

std::string sweep_json(const std::string& config_json, const std::vector<double>& rps_list,
                       const std::vector<std::string>& arms) {
  const ExperimentConfig cfg = config_from_json(nlohmann::json::parse(config_json));
  const SweepOutput output = run_sweep(cfg, rps_list, arms);
  nlohmann::json doc;
  doc["rows"] = nlohmann::json::array();
  for (const SweepRow& row : output.rows) {
    doc["rows"].push_back({{"rps", row.rps},
                           {"arm", row.arm},
                           {"p95_ttft_ms", row.p95_ttft_ms ? nlohmann::json(*row.p95_ttft_ms)
                                                           : nlohmann::json(nullptr)},
                           {"slo_violations", row.slo_violations},
                           {"throughput_rps", row.throughput_rps}});
  }
  for (const auto& [arm_name, rps] : output.saturation_rps) {
    doc["saturation_rps"][arm_name] = rps ? nlohmann::json(*rps) : nlohmann::json(nullptr);
  }
  return doc.dump();
}

std::string fingerprint_json(const std::string& config_json) {
  return config_fingerprint(config_from_json(nlohmann::json::parse(config_json)));
}

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("matrix needs at least one row");
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int r = 0; r < m.rows; ++r) {
    if (static_cast<int>(rows[r].size()) != m.cols) {
      throw std::invalid_argument("ragged matrix rows");
    }
    for (int c = 0; c < m.cols; ++c) m.at(r, c) = rows[r][c];
  }
  return m;
}

std::vector<std::vector<double>> matrix_to_rows(const Matrix& m) {
  std::vector<std::vector<double>> rows(m.rows, std::vector<double>(m.cols));
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) rows[r][c] = m.at(r, c);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Serving simulator core: traces, profiling, paged KV pool, engine";

  py::class_<TraceEvent>(m, "TraceEvent")
      .def(py::init<>())
      .def(py::init([](int64_t arrival_ms, int prompt, int output) {
             return TraceEvent{arrival_ms, prompt, output};
           }),
           py::arg("arrival_ms"), py::arg("prompt_tokens"), py::arg("output_tokens"))
      .def_readwrite("arrival_ms", &TraceEvent::arrival_ms)
      .def_readwrite("prompt_tokens", &TraceEvent::prompt_tokens)
      .def_readwrite("output_tokens", &TraceEvent::output_tokens)
      .def("__eq__", [](const TraceEvent& a, const TraceEvent& b) { return a == b; })
      .def("__repr__", [](const TraceEvent& e) {
        return "TraceEvent(" + std::to_string(e.arrival_ms) + ", " +
               std::to_string(e.prompt_tokens) + ", " + std::to_string(e.output_tokens) + ")";
      });

  py::class_<Trace>(m, "Trace")
      .def(py::init<>())
      .def_readwrite("events", &Trace::events)
      .def_readwrite("source_label", &Trace::source_label)
      .def_readwrite("reordered_on_load", &Trace::reordered_on_load);

  m.def("parse_trace", &parse_trace, py::arg("path"));
  m.def("serialize_trace",
        [](const Trace& t, const std::string& path) { serialize_trace(t, path); },
        py::arg("trace"), py::arg("path"));
  m.def("downscale", &downscale, py::arg("trace"), py::arg("factor"));
  m.def(
      "synth_burst",
      [](uint64_t seed, double base_rps, double burst_rps, int64_t burst_start_ms,
         int64_t burst_len_ms, int64_t total_ms, int prompt_tokens, int output_tokens) {
        BurstSpec spec{seed,     base_rps, burst_rps,     burst_start_ms,
                       burst_len_ms, total_ms, prompt_tokens, output_tokens};
        return synth_burst(spec);
      },
      py::arg("seed"), py::arg("base_rps"), py::arg("burst_rps"), py::arg("burst_start_ms"),
      py::arg("burst_len_ms"), py::arg("total_ms"), py::arg("prompt_tokens"),
      py::arg("output_tokens"));

  m.def(
      "quantize_weights",
      [](const std::vector<std::vector<double>>& rows, int bits) {
        return matrix_to_rows(quantize_weights(matrix_from_rows(rows), bits));
      },
      py::arg("weights"), py::arg("bits"));
  m.def("cosine", [](const Vec& a, const Vec& b) {
    const CosineResult r = cosine(a, b);
    return py::make_tuple(r.value, r.degenerate);
  });

  py::class_<ToyModel>(m, "ToyModel")
      .def_readonly("num_layers", &ToyModel::num_layers)
      .def_readonly("hidden_dim", &ToyModel::hidden_dim)
      .def_readonly("seed", &ToyModel::seed)
      .def("layer_weights",
           [](const ToyModel& model, int layer) { return matrix_to_rows(model.layers.at(layer).w); })
      .def("forward", [](const ToyModel& model, const std::vector<int>& quantized, int bits,
                         const Vec& x) {
        const std::set<int> q(quantized.begin(), quantized.end());
        const PrecisionConfig cfg =
            PrecisionConfig::with_quantized(model.num_layers, q, precision_from_bits(bits));
        return forward(model, cfg, x).final_output;
      });
  m.def("build_model", &build_model, py::arg("seed"), py::arg("num_layers"), py::arg("hidden_dim"));
  m.def("calibration_batch", &calibration_batch, py::arg("seed"), py::arg("count"), py::arg("dim"));
  m.def("calibration_seed", &calibration_seed, py::arg("model_seed"));

  py::class_<SwapSequence>(m, "SwapSequence")
      .def_readonly("order", &SwapSequence::order)
      .def_readonly("per_step_lis", &SwapSequence::per_step_lis)
      .def_readonly("bits", &SwapSequence::bits)
      .def_property_readonly("kind",
                             [](const SwapSequence& s) { return sequence_kind_name(s.kind); });

  m.def(
      "greedy_sequence",
      [](const ToyModel& model, const std::vector<Vec>& batch, double alpha1, double alpha2,
         double beta, int bits) {
        return greedy_sequence(model, batch, LisWeights{alpha1, alpha2, beta}, bits);
      },
      py::arg("model"), py::arg("calib_batch"), py::arg("alpha1") = 0.25, py::arg("alpha2") = 0.25,
      py::arg("beta") = 0.5, py::arg("bits") = 4);
  m.def(
      "baseline_sequence",
      [](const std::string& kind, int num_layers, uint64_t seed, int bits) {
        return baseline_sequence(sequence_kind_from_name(kind), num_layers, seed, bits);
      },
      py::arg("kind"), py::arg("num_layers"), py::arg("seed") = 0, py::arg("bits") = 4);
  m.def("degradation_curve", &degradation_curve, py::arg("model"), py::arg("order"),
        py::arg("calib_batch"), py::arg("bits"));
  m.def("lts_scores", &layer_transformation_scores, py::arg("model"), py::arg("calib_batch"));
  m.def("lrs_scores", &layer_replacement_scores, py::arg("model"), py::arg("calib_batch"),
        py::arg("bits"));
  m.def(
      "mds_score",
      [](const ToyModel& model, const std::vector<int>& quantized, int candidate,
         const std::vector<Vec>& batch, int bits) {
        return model_degradation_score(model, std::set<int>(quantized.begin(), quantized.end()),
                                       candidate, batch, bits);
      },
      py::arg("model"), py::arg("quantized"), py::arg("candidate"), py::arg("calib_batch"),
      py::arg("bits"));
  m.def("save_sequence", &save_sequence, py::arg("sequence"), py::arg("path"));
  m.def("load_sequence", &load_sequence, py::arg("path"));

  py::class_<KvConfig>(m, "KvConfig")
      .def(py::init([](int block_tokens, int64_t block_bytes, int64_t static_capacity_blocks) {
             return KvConfig{block_tokens, block_bytes, static_capacity_blocks};
           }),
           py::arg("block_tokens") = 16, py::arg("block_bytes") = 2 * 1024 * 1024,
           py::arg("static_capacity_blocks") = 1)
      .def_readwrite("block_tokens", &KvConfig::block_tokens)
      .def_readwrite("block_bytes", &KvConfig::block_bytes)
      .def_readwrite("static_capacity_blocks", &KvConfig::static_capacity_blocks);

  py::class_<KvBlockPool>(m, "KvBlockPool")
      .def(py::init<const KvConfig&>())
      .def("admit", &KvBlockPool::admit)
      .def("alloc_for_tokens", &KvBlockPool::alloc_for_tokens)
      .def("release", &KvBlockPool::release)
      .def("attach_blocks", &KvBlockPool::attach_blocks)
      .def("detach_blocks",
           [](KvBlockPool& pool, int64_t n) {
             const DetachResult r = pool.detach_blocks(n);
             return py::make_tuple(r.removed_now, r.deferred, r.capacity_blocks);
           })
      .def("capacity_blocks", &KvBlockPool::capacity_blocks)
      .def("free_blocks", &KvBlockPool::free_blocks)
      .def("used_blocks", &KvBlockPool::used_blocks)
      .def("tokens_of", &KvBlockPool::tokens_of)
      .def("blocks_of", &KvBlockPool::blocks_of)
      .def("check_invariants", &KvBlockPool::check_invariants);

  m.def("run_arm", &run_arm_json, py::arg("config_json"), py::arg("arm"), py::arg("out_dir") = "");
  m.def("profile", &profile_json, py::arg("config_json"), py::arg("out_dir") = "");
  m.def("sweep", &sweep_json, py::arg("config_json"), py::arg("rps_list"), py::arg("arms"));
  m.def("config_fingerprint", &fingerprint_json, py::arg("config_json"));
}
