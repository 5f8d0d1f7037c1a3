"""Event detection, onset picking and noise statistics for continuous records."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import signal as sps

from .errors import DomainError


@dataclass(frozen=True, eq=False)
class TraceRecord:
    channel_id: int
    sample_rate: float
    t0: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise DomainError(f"sample_rate must be > 0, got {self.sample_rate}")
        samples = np.asarray(self.samples)
        if samples.ndim != 1 or samples.size == 0:
            raise DomainError("samples must be a non-empty 1-D series")
        object.__setattr__(self, "samples", samples)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    def __len__(self):
        return len(self.samples)

    def time_of(self, index) -> float:
        return self.t0 + np.asarray(index) / self.sample_rate

    def index_of(self, t: float) -> int:
        return int(round((t - self.t0) * self.sample_rate))


@dataclass(frozen=True, eq=False)
class PickSet:
    """Absolute P arrival time of each bounce on one channel."""

    arrivals: np.ndarray
    channel_id: int = 0

    def __post_init__(self):
        arr = np.asarray(self.arrivals, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("arrivals must be a non-empty 1-D series")
        if np.any(np.diff(arr) <= 0):
            raise DomainError("arrivals must be strictly increasing")
        object.__setattr__(self, "arrivals", arr)

    @property
    def intervals(self) -> np.ndarray:
        return np.diff(self.arrivals)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# channel_id={self.channel_id}\n")
        buf.write("bounce,arrival_s,interval_s\n")
        iv = self.intervals
        for k, t in enumerate(self.arrivals):
            nxt = repr(float(iv[k])) if k < len(iv) else ""
            buf.write(f"{k + 1},{float(t)!r},{nxt}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PickSet":
        channel = 0
        arrivals = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "channel_id=" in line:
                    channel = int(line.split("channel_id=")[1])
                continue
            if line.startswith("bounce"):
                continue
            arrivals.append(float(line.split(",")[1]))
        return cls(np.array(arrivals), channel)


def _as_ranges(window) -> list[tuple[int, int]]:
    if len(window) == 2 and all(isinstance(v, (int, np.integer)) for v in window):
        window = [window]
    out = []
    for start, stop in window:
        start, stop = int(start), int(stop)
        if stop <= start:
            raise DomainError(f"empty window [{start}, {stop})")
        out.append((start, stop))
    return out


def _gather(samples: np.ndarray, window) -> np.ndarray:
    parts = []
    for start, stop in _as_ranges(window):
        if start < 0 or stop > len(samples):
            raise DomainError(f"window [{start}, {stop}) outside record of {len(samples)} samples")
        parts.append(np.asarray(samples[start:stop], dtype=float))
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# Detection and picking
# ---------------------------------------------------------------------------

def sta_lta_ratio(x: np.ndarray, nsta: int, nlta: int) -> np.ndarray:
    """Trailing-window STA/LTA of squared amplitude; zero before the LTA fills."""
    e = np.asarray(x, dtype=float) ** 2
    cs = np.concatenate([[0.0], np.cumsum(e)])
    i = np.arange(nlta - 1, len(e))
    sta = np.maximum(cs[i + 1] - cs[i + 1 - nsta], 0.0) / nsta
    lta = np.maximum(cs[i + 1] - cs[i + 1 - nlta], 0.0) / nlta
    ratio = np.zeros(len(e))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio[i] = np.where(lta > 0, sta / lta, np.where(sta > 0, np.inf, 0.0))
    return ratio


def sta_lta_detect(tr: TraceRecord, sta_len: float = 40e-6, lta_len: float = 400e-6,
                   threshold: float = 5.0, dead_time: float = 5e-3) -> list[int]:
    """Sample indices where the STA/LTA ratio first rises through ``threshold``.

    After each trigger, further crossings within ``dead_time`` are ignored.
    """
    nsta = int(round(sta_len * tr.sample_rate))
    nlta = int(round(lta_len * tr.sample_rate))
    if not 0 < nsta < nlta:
        raise DomainError(f"need 0 < sta_len < lta_len (got {nsta} and {nlta} samples)")
    if len(tr) <= nlta:
        raise DomainError("record is shorter than the LTA window")
    if not threshold > 0:
        raise DomainError("threshold must be positive")
    above = sta_lta_ratio(tr.samples, nsta, nlta) >= threshold
    rising = np.flatnonzero(above[1:] & ~above[:-1]) + 1
    dead = int(round(dead_time * tr.sample_rate))
    triggers: list[int] = []
    for idx in rising:
        if not triggers or idx - triggers[-1] >= dead:
            triggers.append(int(idx))
    return triggers


def aic_curve(window: np.ndarray) -> np.ndarray:
    """Two-segment variance AIC for every split point (``nan`` at the ends)."""
    x = np.asarray(window, dtype=float)
    x = x - x.mean()
    n = len(x)
    total = x.var()
    if total == 0:
        raise DomainError("window has zero variance")
    floor = total * 1e-30
    c1 = np.cumsum(x)
    c2 = np.cumsum(x * x)
    k = np.arange(1, n - 1)
    mean1 = c1[k - 1] / k
    var1 = c2[k - 1] / k - mean1 ** 2
    m = n - k
    mean2 = (c1[-1] - c1[k - 1]) / m
    var2 = (c2[-1] - c2[k - 1]) / m - mean2 ** 2
    # c2/k - mean**2 cancels to rounding noise on a constant stretch; treat
    # anything below 1e-12 of the segment mean square as zero variance
    var1 = np.maximum(var1, 1e-12 * c2[k - 1] / k)
    var2 = np.maximum(var2, 1e-12 * (c2[-1] - c2[k - 1]) / m)
    aic = np.full(n, np.nan)
    aic[k] = k * np.log(np.maximum(var1, floor)) + (n - k - 1) * np.log(np.maximum(var2, floor))
    return aic


def aic_pick(window: np.ndarray, guard: float = 0.05) -> int:
    """Index of the AIC minimum, ignoring ``guard`` of the window at each end."""
    window = np.asarray(window, dtype=float)
    n = len(window)
    if n < 32:
        raise DomainError(f"AIC window needs at least 32 samples, got {n}")
    aic = aic_curve(window)
    lo = max(1, int(math.ceil(guard * n)))
    hi = min(n - 2, n - 1 - int(math.ceil(guard * n)))
    return lo + int(np.nanargmin(aic[lo:hi + 1]))


def xcorr_align(template: np.ndarray, target: np.ndarray, max_lag: int) -> int:
    """Lag (samples) by which ``target`` trails ``template``.

    The lag maximizes the normalized cross-correlation over
    ``[-max_lag, max_lag]``; ``target[n] == template[n - k]`` gives ``k``.
    """
    a = np.asarray(template, dtype=float)
    b = np.asarray(target, dtype=float)
    if max_lag < 0 or len(a) <= max_lag or len(b) <= max_lag:
        raise DomainError("both series must be longer than max_lag")
    a = a - a.mean()
    b = b - b.mean()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DomainError("cross-correlation of a zero-energy series")
    cc = sps.correlate(b, a, mode="full") / (na * nb)
    lags = sps.correlation_lags(len(b), len(a), mode="full")
    keep = np.abs(lags) <= max_lag
    return int(lags[keep][np.argmax(cc[keep])])


# ---------------------------------------------------------------------------
# Noise statistics
# ---------------------------------------------------------------------------

def noise_alpha(tr: TraceRecord, noise_window, data_window) -> float:
    """Noise-to-data power ratio ``(N sum b^2) / (N_b sum d^2)``."""
    b = _gather(tr.samples, noise_window)
    d = _gather(tr.samples, data_window)
    return float(len(d) * np.sum(b * b) / (len(b) * np.sum(d * d)))


def noise_variance(tr: TraceRecord, noise_window) -> float:
    """Mean square of the pre-event noise samples."""
    b = _gather(tr.samples, noise_window)
    return float(np.mean(b * b))


def mean_square(tr: TraceRecord, window) -> float:
    d = _gather(tr.samples, window)
    return float(np.mean(d * d))


# ---------------------------------------------------------------------------
# Whole-channel picking
# ---------------------------------------------------------------------------

class TooFewBounces(DomainError):
    pass


def _best_match(template: np.ndarray, series: np.ndarray) -> int:
    """Offset in ``series`` where ``template`` fits best (per-lag Pearson correlation)."""
    t = np.asarray(template, dtype=float)
    x = np.asarray(series, dtype=float)
    m = len(t)
    t = t - t.mean()
    num = sps.correlate(x, t, mode="valid")
    c1 = np.concatenate([[0.0], np.cumsum(x)])
    c2 = np.concatenate([[0.0], np.cumsum(x * x)])
    local = (c2[m:] - c2[:-m]) - (c1[m:] - c1[:-m]) ** 2 / m
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(local > 0, num / np.sqrt(np.maximum(local, 0.0)), -np.inf)
    return int(np.argmax(score))


def pick_bounces(tr: TraceRecord, n_bounces: int = 3, sta_len: float = 40e-6,
                 lta_len: float = 400e-6, threshold: float = 5.0, dead_time: float = 5e-3,
                 xcorr_lead: float = 20e-6, xcorr_window: float = 35e-6,
                 max_lag: float = 10e-6) -> PickSet:
    """Detect bounces, AIC-pick the first, align later ones by cross-correlation.

    The correlation windows start ``xcorr_lead`` before the AIC pick of each
    bounce and last ``xcorr_window``.  They should end before the contact-end wave packet,
    which moves with the contact time from bounce to bounce; a window
    covering the whole event can lock onto the wrong cycle.

    Keeps at most ``n_bounces`` events.  Raises :class:`TooFewBounces` when
    fewer than two are found.
    """
    triggers = sta_lta_detect(tr, sta_len, lta_len, threshold, dead_time)[:n_bounces]
    if len(triggers) < 2:
        raise TooFewBounces(f"channel {tr.channel_id}: found {len(triggers)} bounce(s), need at least 2")
    fs = tr.sample_rate
    nsta = int(round(sta_len * fs))
    start = max(0, triggers[0] - 2 * nsta)
    stop = min(len(tr), triggers[0] + 2 * nsta)
    first = start + aic_pick(tr.samples[start:stop])

    lead = int(round(xcorr_lead * fs))
    n_win = int(round(xcorr_window * fs))
    lag_max = int(round(max_lag * fs))
    s0 = max(0, first - lead)
    template = tr.samples[s0:s0 + n_win]
    arrivals = [first]
    for trig in triggers[1:]:
        # coarse placement by sliding the onset template around the trigger
        lo = max(0, trig - 2 * nsta - lead)
        hi = min(len(tr), trig + 2 * nsta + n_win)
        s = lo + _best_match(template, tr.samples[lo:hi])
        s = min(max(0, s), len(tr) - n_win)
        lag = xcorr_align(template, tr.samples[s:s + n_win], lag_max)
        arrivals.append(first + (s - s0) + lag)
    return PickSet(tr.time_of(np.array(arrivals)), tr.channel_id)


def iter_windows(picks: PickSet, tr: TraceRecord, pre: float, length: float) -> Iterable[tuple[int, int]]:
    """Sample ranges of the analysis windows, one per picked bounce."""
    n = int(round(length * tr.sample_rate))
    for t in picks.arrivals:
        start = tr.index_of(t - pre)
        yield start, start + n
