"""Trace-driven serving simulator with runtime layer morphing.

The heavy lifting lives in the compiled `_core` extension; this package adds
dict-friendly wrappers around the JSON-string entry points.
"""

import json as _json

try:
    from . import _core
except ImportError:  # in-tree builds put the extension directly on sys.path
    import _core

TraceEvent = _core.TraceEvent
Trace = _core.Trace
ToyModel = _core.ToyModel
SwapSequence = _core.SwapSequence
KvConfig = _core.KvConfig
KvBlockPool = _core.KvBlockPool

parse_trace = _core.parse_trace
serialize_trace = _core.serialize_trace
downscale = _core.downscale
synth_burst = _core.synth_burst

quantize_weights = _core.quantize_weights
cosine = _core.cosine
build_model = _core.build_model
calibration_batch = _core.calibration_batch
calibration_seed = _core.calibration_seed

greedy_sequence = _core.greedy_sequence
baseline_sequence = _core.baseline_sequence
degradation_curve = _core.degradation_curve
lts_scores = _core.lts_scores
lrs_scores = _core.lrs_scores
mds_score = _core.mds_score
save_sequence = _core.save_sequence
load_sequence = _core.load_sequence


def _config_str(config):
    return config if isinstance(config, str) else _json.dumps(config)


def run_arm(config, arm, out_dir=""):
    """Simulates one arm over the configured workload; returns the report."""
    return _json.loads(_core.run_arm(_config_str(config), arm, out_dir))


def profile(config, out_dir=""):
    """Computes swap sequences and degradation curves for the toy model."""
    return _json.loads(_core.profile(_config_str(config), out_dir))


def sweep(config, rps_list, arms):
    """Replays a homogeneous load at each rate; returns rows and saturation."""
    return _json.loads(_core.sweep(_config_str(config), list(rps_list), list(arms)))


def config_fingerprint(config):
    """Hash of the canonicalized experiment config, as embedded in reports."""
    return _core.config_fingerprint(_config_str(config))


__all__ = [
    "TraceEvent", "Trace", "ToyModel", "SwapSequence", "KvConfig", "KvBlockPool",
    "parse_trace", "serialize_trace", "downscale", "synth_burst",
    "quantize_weights", "cosine", "build_model", "calibration_batch", "calibration_seed",
    "greedy_sequence", "baseline_sequence", "degradation_curve",
    "lts_scores", "lrs_scores", "mds_score", "save_sequence", "load_sequence",
    "run_arm", "profile", "sweep", "config_fingerprint",
]
