"""Per-sensor Bayesian inversion with an adaptive Metropolis sampler.

The parameter vector is ``x = (v0 [m/s], a, omega_s [kHz], epsilon [kHz])``;
a fifth quantity, the interval noise variance ``sigma_t2`` (s^2), is sampled
jointly from an independence proposal equal to its prior.  The random-walk
proposal for ``x`` works in coordinates rescaled to the unit cube of the
uniform priors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Protocol

import numpy as np
from scipy import optimize, special

from .errors import ConvergenceError, DomainError, PreconditionError
from .physics import GRAVITY, WaveformModel, interval_model

PARAM_NAMES = ("v0", "a", "omega_s", "epsilon")
DIM = 4
S_D = 2.4 ** 2 / DIM


@dataclass(frozen=True)
class PriorSpec:
    v0: tuple[float, float] = (1.0, 1.5)
    a: tuple[float, float] = (0.5, 0.9)
    omega_s: tuple[float, float] = (100.0, 500.0)
    epsilon: tuple[float, float] = (10.0, 50.0)
    sigma_t2_mean: float = 1e-10
    sigma_t2_var: float = 1e-22

    def __post_init__(self):
        for name in PARAM_NAMES:
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise DomainError(f"prior bounds for {name} need lower < upper, got ({lo}, {hi})")
        if not self.sigma_t2_mean > 0:
            raise DomainError("sigma_t2 prior mean must be > 0")
        if not self.sigma_t2_var > 0:
            raise DomainError("sigma_t2 prior variance must be > 0")

    # cached: these sit on the sampler's hot path
    @cached_property
    def lower(self) -> np.ndarray:
        return np.array([getattr(self, n)[0] for n in PARAM_NAMES])

    @cached_property
    def upper(self) -> np.ndarray:
        return np.array([getattr(self, n)[1] for n in PARAM_NAMES])

    @cached_property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    @cached_property
    def _log_volume(self) -> float:
        return float(np.sum(np.log(self.span)))

    @cached_property
    def _sigma_t2_norm(self) -> float:
        # log(sd) + log(sqrt(2 pi)) + log mass kept by the zero truncation
        sd = math.sqrt(self.sigma_t2_var)
        return math.log(sd) + 0.5 * math.log(2 * math.pi) + float(special.log_ndtr(self.sigma_t2_mean / sd))

    def normalize(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.span

    def denormalize(self, u) -> np.ndarray:
        return self.lower + np.asarray(u, dtype=float) * self.span

    def in_support(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def log_sigma_t2(self, sigma_t2: float) -> float:
        """Log density of the zero-truncated normal prior on ``sigma_t2``."""
        if not sigma_t2 > 0:
            return -math.inf
        z = (sigma_t2 - self.sigma_t2_mean) / math.sqrt(self.sigma_t2_var)
        return -0.5 * z * z - self._sigma_t2_norm

    def sample_sigma_t2(self, rng: np.random.Generator) -> float:
        sd = math.sqrt(self.sigma_t2_var)
        while True:
            s = self.sigma_t2_mean + sd * rng.standard_normal()
            if s > 0:
                return float(s)


def log_prior(x, sigma_t2: float, spec: PriorSpec) -> float:
    """Uniform priors on ``x`` plus the truncated-normal prior on ``sigma_t2``."""
    if not spec.in_support(x):
        return -math.inf
    return -spec._log_volume + spec.log_sigma_t2(sigma_t2)


def loglik_intervals(observed, x, sigma_t2: float, g: float = GRAVITY) -> float:
    """Gaussian log-likelihood of observed bounce intervals, with normalizer."""
    observed = np.asarray(observed, dtype=float)
    if observed.size == 0:
        raise DomainError("no interval observations")
    if not sigma_t2 > 0:
        raise DomainError(f"sigma_t2 must be > 0, got {sigma_t2}")
    resid = observed - interval_model(x[0], x[1], len(observed), g)
    n = len(observed)
    return float(-0.5 * np.dot(resid, resid) / sigma_t2 - 0.5 * n * math.log(2 * math.pi * sigma_t2))


def profile_gain(observed: np.ndarray, unit: np.ndarray) -> float:
    """Least-squares scale ``C`` of ``unit`` onto ``observed`` (0 for a null model)."""
    mm = float(np.dot(unit, unit))
    if mm == 0.0:
        return 0.0
    return float(np.dot(observed, unit)) / mm


def gaussian_loglik(observed: np.ndarray, predicted: np.ndarray, noise_var: float) -> float:
    resid = observed - predicted
    n = observed.size
    return float(-0.5 * np.dot(resid, resid) / noise_var - 0.5 * n * math.log(2 * math.pi * noise_var))


def loglik_waveform(observed, x, model: WaveformModel, noise_var: float) -> float:
    """Waveform log-likelihood with the conversion constant profiled out."""
    observed = np.asarray(observed, dtype=float).ravel()
    if not noise_var > 0:
        raise DomainError("noise variance must be > 0")
    unit = model.unit_waveforms(*x).ravel()
    if unit.size != observed.size:
        raise PreconditionError(f"observed has {observed.size} samples, model has {unit.size}")
    return gaussian_loglik(observed, profile_gain(observed, unit) * unit, noise_var)


class Target(Protocol):
    prior: PriorSpec

    def log_posterior(self, x, sigma_t2: float) -> float: ...


class SensorPosterior:
    """Posterior of one sensor given its waveform windows and bounce intervals.

    The conversion gain ``C`` is profiled out by least squares.  With
    ``align=True`` a small timing offset per bounce is profiled as well,
    using the first-order expansion ``C u(t - tau) ~ C u(t) - C tau u'(t)``;
    picks are typically off by a sample or so, which at the sensor resonance
    is a large phase error compared with the noise.  Call
    :meth:`refine_arrivals` first so the remaining offsets are small.
    """

    def __init__(self, model: WaveformModel, observed: np.ndarray, noise_var: float,
                 intervals, prior: PriorSpec | None = None, gravity: float = GRAVITY,
                 sensor_id: int = 0, align: bool = True):
        self.model = model
        observed = np.asarray(observed, dtype=float)
        if observed.shape != (model.n_bounce, model.n_out):
            raise PreconditionError(f"observed windows must have shape {(model.n_bounce, model.n_out)}, got {observed.shape}")
        self.observed = observed
        self._flat = observed.ravel()
        if not noise_var > 0:
            raise DomainError("noise variance must be > 0")
        self.noise_var = float(noise_var)
        self.intervals = np.asarray(intervals, dtype=float)
        self.prior = prior or PriorSpec()
        self.gravity = gravity
        self.sensor_id = sensor_id
        self.align = align

    def unit(self, x) -> np.ndarray:
        return self.model.unit_waveforms(*x)

    def fit(self, x) -> tuple[np.ndarray, float, np.ndarray]:
        """Best-fit windows at ``x`` with the gain and timing offsets (s) used."""
        if not self.align:
            unit = self.unit(x)
            c = profile_gain(self._flat, unit.ravel())
            return c * unit, c, np.zeros(self.model.n_bounce)
        u, du = self.model.unit_and_slope(*x)
        d = self.observed
        k = len(u)
        gram = np.zeros((k + 1, k + 1))
        rhs = np.empty(k + 1)
        gram[0, 0] = np.sum(u * u)
        rhs[0] = np.sum(d * u)
        cross = np.einsum("ij,ij->i", u, du)
        gram[0, 1:] = gram[1:, 0] = cross
        gram[1:, 1:] = np.diag(np.einsum("ij,ij->i", du, du))
        rhs[1:] = np.einsum("ij,ij->i", d, du)
        if gram[0, 0] == 0.0:
            return np.zeros_like(d), 0.0, np.zeros(k)
        coef = np.linalg.lstsq(gram, rhs, rcond=None)[0]
        pred = coef[0] * u + coef[1:, None] * du
        tau = -coef[1:] / coef[0] if coef[0] != 0 else np.zeros(k)
        return pred, float(coef[0]), tau

    def gain(self, x) -> float:
        return self.fit(x)[1]

    def predict(self, x) -> np.ndarray:
        """Best-fit waveform windows at ``x``."""
        return self.fit(x)[0]

    def loglik_waveform(self, x) -> float:
        return gaussian_loglik(self._flat, self.fit(x)[0].ravel(), self.noise_var)

    def loglik_intervals(self, x, sigma_t2: float) -> float:
        return loglik_intervals(self.intervals, x, sigma_t2, self.gravity)

    def log_posterior(self, x, sigma_t2: float) -> float:
        lp = log_prior(x, sigma_t2, self.prior)
        if lp == -math.inf:
            return lp
        return lp + self.loglik_intervals(x, sigma_t2) + self.loglik_waveform(x)

    def refine_arrivals(self, iterations: int = 3, max_shift: float = 2e-6) -> np.ndarray:
        """Move the modeled arrivals by the fitted timing offsets (Gauss-Newton).

        Returns the starting point found on the final pass.  Offsets are
        clipped to ``max_shift`` per pass.
        """
        x0 = self.start_point()
        if not self.align:
            return x0
        for _ in range(iterations):
            tau = np.clip(self.fit(x0)[2], -max_shift, max_shift)
            self.model = self.model.with_arrivals(self.model.arrival_times + tau)
            x0 = self.start_point()
        return x0

    def start_point(self, n_omega: int = 81, n_eps: int = 21) -> np.ndarray:
        """Deterministic starting point near the posterior mode.

        ``v0`` and ``a`` come from the observed intervals in closed form, the
        response parameters from a grid search, and all four are then
        polished by Nelder-Mead on the log posterior.
        """
        spec = self.prior
        inner = spec.lower + 1e-3 * spec.span, spec.upper - 1e-3 * spec.span
        mid = 0.5 * (spec.lower + spec.upper)
        v0, a = mid[0], mid[1]
        if len(self.intervals) >= 2:
            a = self.intervals[1] / self.intervals[0]
        if len(self.intervals) >= 1:
            a = float(np.clip(a, inner[0][1], inner[1][1]))
            v0 = self.gravity * self.intervals[0] / (2 * a)
        v0 = float(np.clip(v0, inner[0][0], inner[1][0]))
        best = (-math.inf, mid[2], mid[3])
        for ws in np.linspace(inner[0][2], inner[1][2], n_omega):
            for eps in np.linspace(inner[0][3], inner[1][3], n_eps):
                ll = self.loglik_waveform((v0, a, ws, eps))
                if ll > best[0]:
                    best = (ll, ws, eps)
        x0 = np.array([v0, a, best[1], best[2]])
        s2 = spec.sigma_t2_mean

        def cost(u):
            lp = self.log_posterior(spec.denormalize(u), s2)
            return 1e300 if lp == -math.inf else -lp

        res = optimize.minimize(cost, spec.normalize(x0), method="Nelder-Mead",
                                options={"xatol": 1e-9, "fatol": 1e-6, "maxiter": 4000,
                                         "initial_simplex": spec.normalize(x0) + np.vstack([np.zeros(DIM), 1e-3 * np.eye(DIM)])})
        x = spec.denormalize(res.x)
        return x if spec.in_support(x) and cost(res.x) <= cost(spec.normalize(x0)) else x0


# ---------------------------------------------------------------------------
# Adaptive Metropolis
# ---------------------------------------------------------------------------

def am_update_cov(history, eps0: float = 1e-10) -> np.ndarray:
    """``s_d Cov(history) + s_d eps0 I`` with ``s_d = 2.4**2 / d``.

    With fewer than two rows there is no covariance yet and the initial
    diagonal proposal is returned.
    """
    h = np.asarray(history, dtype=float)
    if h.ndim == 1:
        h = h[None, :] if h.size else h.reshape(0, DIM)
    if h.shape[0] < 2:
        return initial_proposal_cov()[:h.shape[1], :h.shape[1]]
    d = h.shape[1]
    sd = 2.4 ** 2 / d
    cov = np.atleast_2d(np.cov(h, rowvar=False))
    return sd * cov + sd * eps0 * np.eye(d)


class RunningCovariance:
    """Streaming mean and covariance (Welford) of a sequence of vectors."""

    def __init__(self, dim: int):
        self.n = 0
        self.mean = np.zeros(dim)
        self._m2 = np.zeros((dim, dim))

    def push(self, v) -> None:
        v = np.asarray(v, dtype=float)
        self.n += 1
        delta = v - self.mean
        self.mean += delta / self.n
        self._m2 += np.outer(delta, v - self.mean)

    @property
    def cov(self) -> np.ndarray:
        if self.n < 2:
            raise PreconditionError("need at least two samples")
        return self._m2 / (self.n - 1)

    def proposal(self, eps0: float) -> np.ndarray:
        d = len(self.mean)
        sd = 2.4 ** 2 / d
        c = sd * self.cov + sd * eps0 * np.eye(d)
        return 0.5 * (c + c.T)


@dataclass
class ChainState:
    x: np.ndarray
    sigma_t2: float
    log_post: float
    step: int
    proposal_cov: np.ndarray
    accept_count: int = 0
    chol: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.proposal_cov = np.asarray(self.proposal_cov, dtype=float)
        if self.chol is None:
            self.chol = np.linalg.cholesky(self.proposal_cov)

    @property
    def acceptance_rate(self) -> float:
        return self.accept_count / self.step if self.step else 0.0

    def with_cov(self, cov: np.ndarray) -> "ChainState":
        return replace(self, proposal_cov=cov, chol=np.linalg.cholesky(cov))


def initial_proposal_cov(scale: float = 0.01) -> np.ndarray:
    """Diagonal proposal with std ``scale`` of each prior range (unit-cube units)."""
    return np.eye(DIM) * scale ** 2


def mh_step(state: ChainState, target: Target, rng: np.random.Generator,
            proposal: tuple[np.ndarray, float] | None = None) -> ChainState:
    """One joint Metropolis-Hastings update of ``(x, sigma_t2)``.

    ``x`` moves by a Gaussian random walk in unit-cube coordinates and
    ``sigma_t2`` is drawn from its prior.  ``proposal`` overrides both draws.
    """
    spec = target.prior
    z = rng.standard_normal(DIM)
    s_draw = spec.sample_sigma_t2(rng)
    log_u = math.log(max(rng.random(), 1e-300))
    if proposal is None:
        x_new = spec.denormalize(spec.normalize(state.x) + state.chol @ z)
        s_new = s_draw
    else:
        x_new = np.asarray(proposal[0], dtype=float)
        s_new = float(proposal[1])
    lp_new = target.log_posterior(x_new, s_new)
    log_alpha = -math.inf
    if lp_new > -math.inf:
        log_alpha = lp_new - state.log_post + spec.log_sigma_t2(state.sigma_t2) - spec.log_sigma_t2(s_new)
    if log_u < log_alpha:
        return replace(state, x=x_new, sigma_t2=s_new, log_post=lp_new,
                       step=state.step + 1, accept_count=state.accept_count + 1)
    return replace(state, step=state.step + 1)


def chain_rng(seed: int, sensor_id: int = 0, chain_id: int = 0) -> np.random.Generator:
    """Independent stream for each (seed, sensor, chain) triple."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(sensor_id), int(chain_id)]))


@dataclass(frozen=True)
class PosteriorSummary:
    mean: dict
    std: dict
    acceptance_rate: float
    ess: dict
    c_gain: float = float("nan")
    n_samples: int = 0

    def row(self) -> list[float]:
        """Values in table order: sigma_t2, v0, a, omega_s, epsilon (mean, std each)."""
        out = []
        for name in ("sigma_t2",) + PARAM_NAMES:
            out += [self.mean[name], self.std[name]]
        return out


@dataclass
class ChainResult:
    samples: np.ndarray          # post burn-in, columns v0, a, omega_s, epsilon, sigma_t2
    trace: np.ndarray            # log posterior at every iteration (index 0 = start)
    summary: PosteriorSummary
    final_state: ChainState


COLUMNS = PARAM_NAMES + ("sigma_t2",)


def effective_sample_size(x: np.ndarray) -> float:
    """ESS from the autocorrelation, summed over the initial positive pairs."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 4:
        return float(n)
    xc = x - x.mean()
    var = np.dot(xc, xc) / n
    if var == 0:
        return float(n)
    f = np.fft.rfft(xc, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (n * var)
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = acf[k] + acf[k + 1]
        if pair <= 0:
            break
        tau += 2 * pair
    return float(n / max(tau, 1.0))


def summarize(samples: np.ndarray, acceptance_rate: float, c_gain: float = float("nan")) -> PosteriorSummary:
    samples = np.asarray(samples, dtype=float)
    mean = {c: float(samples[:, i].mean()) for i, c in enumerate(COLUMNS)}
    std = {c: float(samples[:, i].std(ddof=1)) if len(samples) > 1 else 0.0 for i, c in enumerate(COLUMNS)}
    ess = {c: effective_sample_size(samples[:, i]) for i, c in enumerate(COLUMNS)}
    return PosteriorSummary(mean, std, float(acceptance_rate), ess, float(c_gain), len(samples))


def run_chain(target: Target, n_iter: int, burn_in: int, seed: int = 0, *,
              x0=None, sigma_t2_0: float | None = None, eps0: float = 1e-10,
              adapt_start: int = 1000, adapt_every: int = 100, thin: int = 1,
              init_scale: float = 0.01, rng: np.random.Generator | None = None) -> ChainResult:
    """Run one adaptive Metropolis chain and summarize the post burn-in part."""
    if not n_iter > burn_in >= 0:
        raise PreconditionError(f"need n_iter > burn_in >= 0, got {n_iter}, {burn_in}")
    spec = target.prior
    rng = rng if rng is not None else chain_rng(seed)
    if x0 is None:
        x0 = target.start_point() if hasattr(target, "start_point") else 0.5 * (spec.lower + spec.upper)
    s0 = spec.sigma_t2_mean if sigma_t2_0 is None else sigma_t2_0
    lp0 = target.log_posterior(x0, s0)
    if lp0 == -math.inf:
        raise DomainError("starting point has zero posterior density")
    state = ChainState(np.asarray(x0, dtype=float), s0, lp0, 0, initial_proposal_cov(init_scale))

    running = RunningCovariance(DIM)
    running.push(spec.normalize(state.x))
    kept = (n_iter - burn_in + thin - 1) // thin
    samples = np.empty((kept, DIM + 1))
    trace = np.empty(n_iter + 1)
    trace[0] = lp0
    j = 0
    accepted_after_warmup = 0
    for it in range(1, n_iter + 1):
        before = state.accept_count
        state = mh_step(state, target, rng)
        if it > adapt_start and state.accept_count > before:
            accepted_after_warmup += 1
        running.push(spec.normalize(state.x))
        if it >= adapt_start and it % adapt_every == 0:
            state = state.with_cov(running.proposal(eps0))
        trace[it] = state.log_post
        if it > burn_in and (it - burn_in - 1) % thin == 0:
            samples[j, :DIM] = state.x
            samples[j, DIM] = state.sigma_t2
            j += 1
    if n_iter > adapt_start and accepted_after_warmup == 0:
        raise ConvergenceError("chain rejected every proposal after the adaptation warm-up")
    c_gain = float("nan")
    if hasattr(target, "gain"):
        c_gain = target.gain(samples[:, :DIM].mean(axis=0))
    summary = summarize(samples, state.acceptance_rate, c_gain)
    return ChainResult(samples, trace, summary, state)


# ---------------------------------------------------------------------------
# Posterior predictive
# ---------------------------------------------------------------------------

@dataclass
class PredictiveEnvelope:
    times: np.ndarray         # (n_bounce, n_out) absolute sample times
    observed: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    interval_observed: np.ndarray
    interval_mean: np.ndarray
    interval_sd: np.ndarray       # parameter uncertainty only
    interval_pred_sd: np.ndarray  # including sigma_t2

    def band(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return self.mean - k * self.sd, self.mean + k * self.sd

    def coverage(self, k: int = 2) -> float:
        lo, hi = self.band(k)
        return float(np.mean((self.observed >= lo) & (self.observed <= hi)))


def draw_indices(n_samples: int, m_draws: int) -> np.ndarray:
    """Evenly spaced sample indices (deterministic thinning)."""
    if m_draws < 1 or m_draws > n_samples:
        raise PreconditionError(f"need 1 <= m_draws <= {n_samples}, got {m_draws}")
    return np.linspace(0, n_samples - 1, m_draws).round().astype(int)


def posterior_predictive(samples, target: SensorPosterior, m_draws: int,
                         include_noise: bool = True) -> PredictiveEnvelope:
    """Forward-model posterior draws and summarize them per time step.

    The band half-widths combine the spread of the draws with the waveform
    noise variance (unless ``include_noise`` is false); interval predictions
    likewise add the sampled ``sigma_t2``.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or len(samples) == 0:
        raise PreconditionError("no posterior samples")
    idx = draw_indices(len(samples), m_draws)
    n_iv = len(target.intervals)
    sums = np.zeros(target.observed.size)
    sq = np.zeros(target.observed.size)
    ivs = np.empty((len(idx), n_iv))
    first = None
    for j, i in enumerate(idx):
        pred = target.predict(samples[i, :DIM]).ravel()
        if first is None:
            first = pred
        d = pred - first   # shifted sums keep the variance accurate
        sums += d
        sq += d * d
        ivs[j] = interval_model(samples[i, 0], samples[i, 1], n_iv, target.gravity)
    m = len(idx)
    mean_d = sums / m
    var = np.maximum(sq / m - mean_d ** 2, 0.0)
    if include_noise:
        var = var + target.noise_var
    shape = target.observed.shape
    s2 = samples[idx, DIM] if samples.shape[1] > DIM else np.zeros(m)
    iv_sd = ivs.std(axis=0)
    return PredictiveEnvelope(
        times=target.model.window_times(),
        observed=target.observed,
        mean=(first + mean_d).reshape(shape),
        sd=np.sqrt(var).reshape(shape),
        interval_observed=target.intervals,
        interval_mean=ivs.mean(axis=0),
        interval_sd=iv_sd,
        interval_pred_sd=np.sqrt(iv_sd ** 2 + s2.mean()),
    )
