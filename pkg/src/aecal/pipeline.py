"""Glue from a trace and its picks to a calibrated sensor posterior."""
from __future__ import annotations

import numpy as np

from .config import ExperimentConfig
from .errors import DomainError
from .inference import ChainResult, SensorPosterior, chain_rng, run_chain
from .physics import WaveformModel
from .signal import PickSet, TraceRecord, noise_alpha, pick_bounces


def detect(tr: TraceRecord, cfg: ExperimentConfig) -> PickSet:
    a = cfg.acquisition
    return pick_bounces(tr, a["n_bounces"], a["sta_s"], a["lta_s"], a["threshold"], a["dead_time_s"],
                        a["xcorr_lead_s"], a["xcorr_window_s"], a["max_lag_s"])


def build_target(tr: TraceRecord, picks: PickSet, cfg: ExperimentConfig,
                 arrivals=None) -> SensorPosterior:
    """Posterior for one sensor from its record and P picks.

    Analysis windows start ``pre_s`` before each pick.  The noise variance is
    estimated from the stretch of ``noise_window_s`` that ends where the
    first analysis window begins.  ``arrivals`` replaces the picks as the
    modeled bounce placement (e.g. refined arrivals saved by a calibration).
    """
    a = cfg.acquisition
    fs = tr.sample_rate
    if abs(fs - cfg.sample_rate) > 1e-6 * cfg.sample_rate:
        raise DomainError(f"trace sample rate {fs} differs from the configured {cfg.sample_rate}")
    idx = cfg.geometry.index_of(tr.channel_id)
    n_win = int(round(a["window_s"] * fs))
    starts = np.array([tr.index_of(t - a["pre_s"]) for t in picks.arrivals])
    if starts[0] < 1 or starts[-1] + n_win > len(tr):
        raise DomainError(f"channel {tr.channel_id}: analysis windows run off the record")
    observed = np.stack([np.asarray(tr.samples[s:s + n_win], dtype=float) for s in starts])
    model = WaveformModel(cfg.geometry, cfg.sample, cfg.ball, idx, picks.arrivals, tr.time_of(starts),
                          n_win, tr.dt, a["frequency_convention"], a["decimation"])

    n_noise = int(round(a["noise_window_s"] * fs))
    noise = np.asarray(tr.samples[max(0, starts[0] - n_noise):starts[0]], dtype=float)
    if model.decimation > 1:
        # noise power after the same low-pass, measured in window-length blocks
        blocks = len(noise) // n_win
        if blocks == 0:
            raise DomainError(f"channel {tr.channel_id}: noise window shorter than one analysis window")
        noise = model.decimate(noise[:blocks * n_win].reshape(blocks, n_win))
        observed = model.decimate(observed)
    noise_var = float(np.mean(noise ** 2)) if noise.size else 0.0
    if not noise_var > 0:
        raise DomainError(f"channel {tr.channel_id}: zero noise variance before the first arrival")
    target = SensorPosterior(model, observed, noise_var, picks.intervals, cfg.prior,
                             cfg.geometry.gravity, tr.channel_id)
    if arrivals is not None:
        target.model = model.with_arrivals(arrivals)
    return target


def calibrate_sensor(tr: TraceRecord, picks: PickSet, cfg: ExperimentConfig,
                     chain_id: int = 0) -> tuple[SensorPosterior, ChainResult]:
    """Build the target, refine the arrival placement, then run one chain."""
    target = build_target(tr, picks, cfg)
    x0 = target.refine_arrivals()
    m = cfg.mcmc
    rng = chain_rng(m["seed"], tr.channel_id, chain_id)
    result = run_chain(target, m["n_iter"], m["burn_in"], m["seed"], x0=x0, eps0=m["eps0"],
                       adapt_start=m["adapt_start"], adapt_every=m["adapt_every"], thin=m["thin"],
                       init_scale=m["init_scale"], rng=rng)
    return target, result


def channel_alpha(tr: TraceRecord, target: SensorPosterior, cfg: ExperimentConfig) -> float:
    """Noise-to-data power ratio of a channel over its analysis windows."""
    a = cfg.acquisition
    fs = tr.sample_rate
    n_win = int(round(a["window_s"] * fs))
    starts = [tr.index_of(t) for t in target.model.window_starts]
    n_noise = int(round(a["noise_window_s"] * fs))
    noise = (max(0, starts[0] - n_noise), starts[0])
    return noise_alpha(tr, noise, [(s, s + n_win) for s in starts])
