"""Synthetic continuous records of a bouncing-ball experiment."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .errors import DomainError
from .formats import write_trace
from .physics import BounceParams, SensorResponseParams, WaveformModel, modeled_arrivals
from .signal import TraceRecord


@dataclass
class SyntheticTruth:
    """Ground truth of a synthetic drop.

    ``responses`` maps sensor id to its response; sensors missing from it use
    ``default_response``.
    """

    bounce: BounceParams
    default_response: SensorResponseParams
    responses: dict = field(default_factory=dict)

    def response(self, sensor_id: int) -> SensorResponseParams:
        return self.responses.get(sensor_id, self.default_response)


def default_truth(cfg: ExperimentConfig, v0: float = 1.31, a: float = 0.61,
                  omega_s: float = 350.0, epsilon: float = 20.0) -> SyntheticTruth:
    """Same response on every sensor, gain from ``synthetic.c_gain_counts_m``."""
    resp = SensorResponseParams(omega_s, epsilon, cfg.synthetic["c_gain_counts_m"])
    return SyntheticTruth(BounceParams(v0, a, cfg.acquisition["n_bounces"]), resp)


def noise_rng(seed: int, sensor_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(sensor_id), 0x5A]))


def synthetic_channel(cfg: ExperimentConfig, truth: SyntheticTruth, sensor_id: int,
                      alpha: float, seed: int) -> tuple[TraceRecord, dict]:
    """One sensor's record plus its entry of the ground-truth manifest."""
    if alpha < 0 or not math.isfinite(alpha):
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    acq, syn = cfg.acquisition, cfg.synthetic
    fs = cfg.sample_rate
    geom = cfg.geometry
    idx = geom.index_of(sensor_id)
    bp = truth.bounce
    resp = truth.response(sensor_id)
    c_gain = resp.c_gain

    arrivals = modeled_arrivals(bp, geom, idx, cfg.sample, syn["first_impact_s"])
    n_total = int(math.ceil((arrivals[-1] + syn["segment_s"] + syn["tail_s"]) * fs))
    # each bounce is synthesized from its first sample at or after the P
    # arrival, so nothing (not even FFT leakage) precedes the onset
    starts = np.ceil(arrivals * fs - 1e-9).astype(int)
    n_seg = int(round(syn["segment_s"] * fs))
    model = WaveformModel(geom, cfg.sample, cfg.ball, idx, arrivals, starts / fs, n_seg, 1.0 / fs,
                          acq["frequency_convention"])
    segs = c_gain * model.unit_waveforms(bp.v0, bp.a, resp.omega_s, resp.epsilon)
    x = np.zeros(n_total)
    for s, seg in zip(starts, segs):
        x[s:s + n_seg] += seg

    n_win = int(round(acq["window_s"] * fs))
    win_starts = np.round((arrivals - acq["pre_s"]) * fs).astype(int)
    power = float(np.mean(np.concatenate([x[s:s + n_win] for s in win_starts]) ** 2))
    noise_sd = math.sqrt(alpha * power)
    if alpha > 0:
        x = x + noise_rng(seed, sensor_id).normal(0.0, noise_sd, n_total)

    tr = TraceRecord(sensor_id, fs, 0.0, x.astype(np.float32))
    entry = {
        "omega_s_khz": resp.omega_s, "epsilon_khz": resp.epsilon, "c_gain_counts_m": c_gain,
        "arrivals_s": arrivals.tolist(), "signal_power": power, "noise_sd": noise_sd,
        "distance_m": geom.distance(idx),
    }
    return tr, entry


def generate_synthetic(cfg: ExperimentConfig, truth: SyntheticTruth, alpha: float, seed: int,
                       sensor_ids=None) -> tuple[dict, dict]:
    """Records for the requested sensors (all by default) and a truth manifest.

    Noise is white Gaussian with variance ``alpha`` times the mean-square
    signal over the analysis windows; ``alpha = 0`` gives a noise-free record.
    """
    if alpha < 0 or not math.isfinite(alpha):
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    if sensor_ids is None:
        sensor_ids = [s.id for s in cfg.geometry.sensors]
    traces, sensors = {}, {}
    for sid in sensor_ids:
        traces[sid], sensors[str(sid)] = synthetic_channel(cfg, truth, sid, alpha, seed)
    manifest = {
        "pressure_label": cfg.pressure_label,
        "alpha": alpha,
        "seed": seed,
        "sample_rate_hz": cfg.sample_rate,
        "v0_m_s": truth.bounce.v0,
        "a": truth.bounce.a,
        "n_bounces": truth.bounce.n,
        "sensors": sensors,
    }
    return traces, manifest


def trace_name(sensor_id: int) -> str:
    return f"sensor_{sensor_id:02d}.aetr"


def write_synthetic(out_dir, traces: dict, manifest: dict) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for sid, tr in traces.items():
        write_trace(out / trace_name(sid), tr)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
