"""Forward model of ball-bounce acoustic emission waveforms.

The chain for one bounce is: incident speed -> Hertzian loading pulse ->
point-force Green's function of an unbounded isotropic solid -> cosine
incidence projection onto the sensor normal -> damped-oscillator sensor
response.  Bounces are placed at given P arrival times and concatenated.

Coordinates: ``x3`` points up, the impact point is the source and the sample
occupies ``x3 < 0``.  Time-domain filtering uses numpy's FFT sign convention
(forward transform ``exp(-i w t)``); the response spectrum returned by
:func:`sensor_response_spectrum` is written in the ``exp(+i w t)`` convention
of the original damped-oscillator formula, so the filter actually applied is
its complex conjugate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from .errors import DomainError, PreconditionError

GRAVITY = 9.81
FREQUENCY_CONVENTIONS = ("cyclic", "angular")


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaterialProperties:
    """Elastic constants of an isotropic material (SI units)."""

    density: float
    youngs_modulus: float
    poisson_ratio: float
    vp: float
    vs: float

    def __post_init__(self):
        if not self.density > 0:
            raise DomainError(f"density must be > 0, got {self.density}")
        if not self.youngs_modulus > 0:
            raise DomainError(f"youngs_modulus must be > 0, got {self.youngs_modulus}")
        if not 0 < self.poisson_ratio < 0.5:
            raise DomainError(f"poisson_ratio must be in (0, 0.5), got {self.poisson_ratio}")
        if not self.vp > self.vs > 0:
            raise DomainError(f"need vp > vs > 0, got vp={self.vp}, vs={self.vs}")

    @property
    def compliance(self) -> float:
        """Hertz elastic parameter ``(1 - nu^2) / (pi E)``."""
        return contact_compliance(self.youngs_modulus, self.poisson_ratio)


STEEL = MaterialProperties(density=8050.0, youngs_modulus=180.0e9,
                           poisson_ratio=0.305, vp=5525.8, vs=2927.0)
TITANIUM = MaterialProperties(density=4506.0, youngs_modulus=113.8e9,
                              poisson_ratio=0.32, vp=6011.6, vs=3093.0)


@dataclass(frozen=True, eq=False)
class Sensor:
    id: int
    position: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float)
        nrm = np.asarray(self.normal, dtype=float)
        if pos.shape != (3,) or nrm.shape != (3,):
            raise DomainError(f"sensor {self.id}: position and normal must be 3-vectors")
        if abs(np.linalg.norm(nrm) - 1.0) > 1e-9:
            raise DomainError(f"sensor {self.id}: normal must have unit length")
        if nrm[2] != 0.0:
            raise DomainError(f"sensor {self.id}: normal must be horizontal (third component 0)")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "normal", nrm)


@dataclass(frozen=True, eq=False)
class ExperimentGeometry:
    source: np.ndarray
    sensors: tuple[Sensor, ...]
    ball_radius: float = 3.18e-3
    gravity: float = GRAVITY

    def __post_init__(self):
        src = np.asarray(self.source, dtype=float)
        if src.shape != (3,):
            raise DomainError("source must be a 3-vector")
        if not self.ball_radius > 0:
            raise DomainError(f"ball_radius must be > 0, got {self.ball_radius}")
        if not self.gravity > 0:
            raise DomainError(f"gravity must be > 0, got {self.gravity}")
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "sensors", tuple(self.sensors))

    def offset(self, sensor_idx: int) -> np.ndarray:
        """Vector from the impact point to sensor ``sensor_idx``."""
        return self.sensors[sensor_idx].position - self.source

    def distance(self, sensor_idx: int) -> float:
        return float(np.linalg.norm(self.offset(sensor_idx)))

    def index_of(self, sensor_id: int) -> int:
        for i, s in enumerate(self.sensors):
            if s.id == sensor_id:
                return i
        raise KeyError(f"no sensor with id {sensor_id}")


# Azimuthal order of the two sensor rings, upper ring first.
UPPER_RING_IDS = (16, 4, 12, 8, 15, 3, 11, 7)
LOWER_RING_IDS = (6, 14, 2, 10, 5, 13, 1, 9)


def cylinder_layout(diameter: float = 46.1e-3, length: float = 73.7e-3,
                    ring_depths: tuple[float, float] | None = None,
                    ball_radius: float = 3.18e-3,
                    gravity: float = GRAVITY) -> ExperimentGeometry:
    """Sixteen sensors in two rings of eight (45 degree spacing) on a cylinder.

    The ball strikes the centre of the top face at the origin.  Rings sit at
    a quarter and three quarters of the length unless ``ring_depths`` says
    otherwise.  Normals point radially outward.
    """
    if ring_depths is None:
        ring_depths = (length / 4, 3 * length / 4)
    radius = diameter / 2
    sensors = []
    for depth, ids in zip(ring_depths, (UPPER_RING_IDS, LOWER_RING_IDS)):
        for k, sid in enumerate(ids):
            phi = k * np.pi / 4
            normal = np.array([np.cos(phi), np.sin(phi), 0.0])
            sensors.append(Sensor(sid, np.array([radius * normal[0], radius * normal[1], -depth]), normal))
    sensors.sort(key=lambda s: s.id)
    return ExperimentGeometry(np.zeros(3), tuple(sensors), ball_radius, gravity)


@dataclass(frozen=True)
class BounceParams:
    v0: float
    a: float
    n: int = 3

    def __post_init__(self):
        if not self.v0 > 0:
            raise DomainError(f"v0 must be > 0, got {self.v0}")
        if not 0 < self.a < 1:
            raise DomainError(f"rebound coefficient must be in (0, 1), got {self.a}")
        if int(self.n) != self.n or not 1 <= self.n <= 3:
            raise DomainError(f"bounce count must be 1, 2 or 3, got {self.n}")

    def incident_speeds(self) -> np.ndarray:
        """Incident speed of each bounce, ``a**(k-1) * v0``."""
        return self.v0 * self.a ** np.arange(self.n)


@dataclass(frozen=True)
class LoadingPulse:
    f_max: float
    t_c: float
    dt: float
    samples: np.ndarray = field(repr=False)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dt


@dataclass(frozen=True)
class SensorResponseParams:
    """Damped-oscillator sensor response.

    ``omega_s`` and ``epsilon`` are in kHz; whether that means cycles or
    radians per millisecond is set by the ``convention`` argument of the
    functions that consume these parameters.
    """

    omega_s: float
    epsilon: float
    c_gain: float = 1.0

    def __post_init__(self):
        if not self.omega_s > 0:
            raise DomainError(f"omega_s must be > 0, got {self.omega_s}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.c_gain > 0:
            raise DomainError(f"c_gain must be > 0, got {self.c_gain}")


# ---------------------------------------------------------------------------
# Bounce kinematics and contact mechanics
# ---------------------------------------------------------------------------

def bounce_intervals(p: BounceParams, g: float = GRAVITY) -> np.ndarray:
    """Time between successive impacts, ``2 a**k v0 / g`` for k = 1..n-1."""
    if not g > 0:
        raise DomainError(f"gravity must be > 0, got {g}")
    return interval_model(p.v0, p.a, p.n - 1, g)


def interval_model(v0: float, a: float, count: int, g: float = GRAVITY) -> np.ndarray:
    # each entry is the previous one times a, so consecutive ratios are a
    out = np.empty(max(count, 0))
    step = 2.0 * a * v0 / g
    for k in range(len(out)):
        out[k] = step
        step *= a
    return out


def contact_compliance(youngs_modulus: float, poisson_ratio: float) -> float:
    return (1.0 - poisson_ratio ** 2) / (math.pi * youngs_modulus)


def hertz_coefficients(ball: MaterialProperties, sample: MaterialProperties,
                       r1: float) -> tuple[float, float]:
    """Prefactors ``(kf, kt)`` with ``f_max = kf v**1.2`` and ``t_c = kt v**-0.2``."""
    if not r1 > 0:
        raise DomainError(f"ball radius must be > 0, got {r1}")
    delta = ball.compliance + sample.compliance
    kf = 1.917 * ball.density ** 0.6 * delta ** -0.4 * r1 ** 2
    kt = 4.53 * (4.0 * ball.density * math.pi * delta / 3.0) ** 0.4 * r1
    return kf, kt


def hertz_contact(ball: MaterialProperties, sample: MaterialProperties,
                  r1: float, v_in: float) -> tuple[float, float]:
    """Peak force (N) and contact duration (s) of a sphere hitting a flat."""
    if not v_in > 0:
        raise DomainError(f"incident speed must be > 0, got {v_in}")
    kf, kt = hertz_coefficients(ball, sample, r1)
    return kf * v_in ** 1.2, kt * v_in ** -0.2


def loading_pulse(f_max: float, t_c: float, dt: float) -> LoadingPulse:
    """Sample ``-f_max sin(pi t / t_c)**1.5`` on ``[0, t_c]`` at spacing ``dt``."""
    if not (f_max >= 0 and t_c > 0 and dt > 0):
        raise DomainError("need f_max >= 0, t_c > 0, dt > 0")
    if not dt < t_c / 10:
        raise PreconditionError(f"dt={dt:g} s does not resolve the pulse; need dt < {t_c / 10:g} s")
    return LoadingPulse(f_max, t_c, dt, _pulse_samples(np.array([f_max]), np.array([t_c]), dt)[0])


def _pulse_samples(f_max: np.ndarray, t_c: np.ndarray, dt: float) -> np.ndarray:
    n = int(np.floor(t_c.max() / dt)) + 1
    t = np.arange(n) * dt
    phase = np.pi * t[None, :] / t_c[:, None]
    s = np.sin(np.minimum(phase, np.pi))
    out = -f_max[:, None] * np.clip(s, 0.0, None) ** 1.5
    out[t[None, :] > t_c[:, None]] = 0.0
    return out


# ---------------------------------------------------------------------------
# Green's function
# ---------------------------------------------------------------------------

def _trapezoid_weights(a: float, b: float, dt: float, size: int) -> np.ndarray:
    """Weights ``w`` with ``sum(w[m] h(m dt)) ~ integral_a^b h``.

    Trapezoid rule on the grid nodes inside ``[a, b]`` plus the two endpoints,
    whose integrand values are linearly interpolated from their neighbours.
    """
    w = np.zeros(size)
    lo, hi = a / dt, b / dt
    ma, mb = math.ceil(lo), math.floor(hi)
    if ma > mb:
        # both endpoints inside one cell [m0, m0+1]
        m0 = mb
        fa, fb = lo - m0, hi - m0
        length = b - a
        w[m0] += length / 2 * ((1 - fa) + (1 - fb))
        w[m0 + 1] += length / 2 * (fa + fb)
        return w
    # left partial segment [a, ma dt]
    la = ma * dt - a
    fa = lo - (ma - 1)
    w[ma - 1] += la / 2 * (1 - fa)
    w[ma] += la / 2 * fa + la / 2
    # interior
    if mb > ma:
        w[ma:mb] += dt / 2
        w[ma + 1:mb + 1] += dt / 2
    # right partial segment [mb dt, b]
    lb = b - mb * dt
    fb = hi - mb
    w[mb] += lb / 2 + lb / 2 * (1 - fb)
    w[mb + 1] += lb / 2 * fb
    return w


def _delay_taps(delay: float, dt: float, size: int) -> np.ndarray:
    taps = np.zeros(size)
    q = math.floor(delay / dt)
    frac = delay / dt - q
    taps[q] += 1 - frac
    taps[q + 1] += frac
    return taps


def greens_kernel(r_vec, sample: MaterialProperties, dt: float) -> dict[str, np.ndarray]:
    """Discrete point-force Green's function, one kernel per term.

    Returns ``{"near", "p", "s"}``, each of shape ``(3, M)``.  Convolving a
    force series sampled at ``dt`` with the sum of the three kernels gives
    the displacement at the same sampling.  The near-field kernel already
    carries the quadrature weights (units m/N/s times s); the far-field
    kernels are two-tap linear-interpolation delays.
    """
    r_vec = np.asarray(r_vec, dtype=float)
    r = float(np.linalg.norm(r_vec))
    if r == 0.0:
        raise DomainError("source and receiver coincide (r = 0)")
    gamma = r_vec / r
    t_p, t_s = r / sample.vp, r / sample.vs
    size = math.floor(t_s / dt) + 2
    tau = np.arange(size) * dt
    near = _trapezoid_weights(t_p, t_s, dt, size) * tau
    delta3 = np.array([0.0, 0.0, 1.0])
    rho = sample.density
    c_near = (3 * gamma * gamma[2] - delta3) / (4 * np.pi * rho * r ** 3)
    c_p = gamma * gamma[2] / (4 * np.pi * rho * sample.vp ** 2 * r)
    c_s = -(gamma * gamma[2] - delta3) / (4 * np.pi * rho * sample.vs ** 2 * r)
    return {
        "near": c_near[:, None] * near[None, :],
        "p": c_p[:, None] * _delay_taps(t_p, dt, size)[None, :],
        "s": c_s[:, None] * _delay_taps(t_s, dt, size)[None, :],
    }


def greens_displacement(geom: ExperimentGeometry, sensor_idx: int, sample: MaterialProperties,
                        pulse: LoadingPulse, dt: float, t_len: float, terms: bool = False):
    """Three-component displacement at a sensor for a vertical point force.

    Output sample ``n`` is the displacement at time ``n * dt`` after the start
    of contact.  With ``terms=True`` a dict of the near-field, far-field P and
    far-field S contributions is returned instead of their sum.
    """
    if not np.isclose(pulse.dt, dt, rtol=1e-12, atol=0):
        raise PreconditionError(f"pulse sampled at {pulse.dt:g} s, expected {dt:g} s")
    r = geom.distance(sensor_idx)
    if r == 0.0:
        raise DomainError("source and receiver coincide (r = 0)")
    if t_len < r / sample.vs + pulse.t_c:
        raise PreconditionError(f"t_len must cover r/vs + t_c = {r / sample.vs + pulse.t_c:g} s")
    nt = int(round(t_len / dt))
    kernels = greens_kernel(geom.offset(sensor_idx), sample, dt)
    out = {}
    for name, k in kernels.items():
        comp = np.zeros((3, nt))
        for i in range(3):
            full = np.convolve(pulse.samples, k[i])
            m = min(nt, len(full))
            comp[i, :m] = full[:m]
        out[name] = comp
    if terms:
        return out
    return out["near"] + out["p"] + out["s"]


def project_incidence(u: np.ndarray, normal) -> np.ndarray:
    """Component of ``u`` (shape ``(3, nt)``) along the sensor normal."""
    normal = np.asarray(normal, dtype=float)
    if abs(np.linalg.norm(normal) - 1.0) > 1e-9:
        raise DomainError("sensor normal must have unit length")
    return normal @ np.asarray(u)


# ---------------------------------------------------------------------------
# Sensor response
# ---------------------------------------------------------------------------

def to_angular(value_khz, convention: str = "cyclic"):
    """Convert a kHz parameter to rad/s under the given convention."""
    if convention == "cyclic":
        return 2e3 * np.pi * np.asarray(value_khz, dtype=float)
    if convention == "angular":
        return 1e3 * np.asarray(value_khz, dtype=float)
    raise DomainError(f"frequency_convention must be one of {FREQUENCY_CONVENTIONS}, got {convention!r}")


def sensor_response_spectrum(freq_grid, p: SensorResponseParams,
                             convention: str = "cyclic") -> np.ndarray:
    """``-C w**2 / (w**2 + 2 i eps w - w_s**2)`` on an angular-frequency grid."""
    w = np.asarray(freq_grid, dtype=float)
    ws = to_angular(p.omega_s, convention)
    eps = to_angular(p.epsilon, convention)
    return -p.c_gain * w ** 2 / (w ** 2 + 2j * eps * w - ws ** 2)


def phase_delay(freq_grid, p: SensorResponseParams, convention: str = "cyclic") -> np.ndarray:
    """Phase of the response, rising from 0 at low frequency to pi at high."""
    w = np.asarray(freq_grid, dtype=float)
    ws = to_angular(p.omega_s, convention)
    eps = to_angular(p.epsilon, convention)
    return np.pi - np.angle(w ** 2 - ws ** 2 + 2j * eps * w)


def response_filter(omega: np.ndarray, omega_s: float, epsilon: float, c_gain: float = 1.0) -> np.ndarray:
    """Response in numpy's FFT convention; ``omega_s``, ``epsilon`` in rad/s."""
    return -c_gain * omega ** 2 / (omega ** 2 - 2j * epsilon * omega - omega_s ** 2)


# ---------------------------------------------------------------------------
# Waveform synthesis
# ---------------------------------------------------------------------------

def modeled_arrivals(bp: BounceParams, geom: ExperimentGeometry, sensor_idx: int,
                     sample: MaterialProperties, first_impact: float = 0.0) -> np.ndarray:
    """P arrival time of each bounce: cumulative impact times plus ``r / vp``."""
    impacts = first_impact + np.concatenate([[0.0], np.cumsum(bounce_intervals(bp, geom.gravity))])
    return impacts + geom.distance(sensor_idx) / sample.vp


class WaveformModel:
    """Fast evaluator of the unit-gain waveform of one sensor.

    Geometry, arrival placement and window layout are fixed at construction;
    :meth:`unit_waveforms` then maps ``(v0, a, omega_s, epsilon)`` to one
    window per bounce.  Window ``k`` starts at absolute time
    ``window_starts[k]`` and the bounce is placed so that its modeled P
    arrival falls on ``arrival_times[k]``.

    ``decimation > 1`` returns the output low-passed at 0.4 times the
    decimated Nyquist frequency and sampled every ``decimation`` points.
    """

    # slowest incident speed whose pulse must fit in the FFT buffer
    MIN_SPEED = 0.05

    def __init__(self, geom: ExperimentGeometry, sample: MaterialProperties,
                 ball: MaterialProperties, sensor_idx: int, arrival_times: Sequence[float],
                 window_starts: Sequence[float], n_window: int, dt: float,
                 convention: str = "cyclic", decimation: int = 1):
        to_angular(1.0, convention)  # validates the name
        self.convention = convention
        self.geom, self.sample, self.ball = geom, sample, ball
        self.sensor_idx = sensor_idx
        self.dt = float(dt)
        self.n_window = int(n_window)
        self.decimation = int(decimation)
        if self.decimation < 1:
            raise DomainError("decimation must be a positive integer")
        self.arrival_times = np.asarray(arrival_times, dtype=float)
        self.window_starts = np.asarray(window_starts, dtype=float)
        if self.arrival_times.shape != self.window_starts.shape or self.arrival_times.ndim != 1:
            raise PreconditionError("need one window start per arrival time")
        if not 1 <= len(self.arrival_times) <= 3:
            raise DomainError("between 1 and 3 bounces are modeled")
        self.n_bounce = len(self.arrival_times)

        r_vec = geom.offset(sensor_idx)
        normal = geom.sensors[sensor_idx].normal
        kernels = greens_kernel(r_vec, sample, self.dt)
        self.kernel = project_incidence(kernels["near"] + kernels["p"] + kernels["s"], normal)
        self.travel_time = geom.distance(sensor_idx) / sample.vp
        self.shifts = self.window_starts - (self.arrival_times - self.travel_time)
        self.kf, self.kt = hertz_coefficients(ball, sample, geom.ball_radius)

        max_pulse = int(self.kt * self.MIN_SPEED ** -0.2 / self.dt) + 2
        lead = int(np.ceil(np.abs(self.shifts).max() / self.dt))
        span = self.n_window + len(self.kernel) + max_pulse + lead
        nfft = sfft.next_fast_len(2 * span, real=True)
        nfft += (-nfft) % (2 * self.decimation)
        self.nfft = nfft
        self.omega = 2 * np.pi * sfft.rfftfreq(nfft, self.dt)
        self._green = sfft.rfft(self.kernel, nfft)[None, :] * np.exp(1j * self.omega[None, :] * self.shifts[:, None])
        if self.decimation > 1:
            guard = 0.4 * (0.5 / (self.dt * self.decimation))
            self._n_keep = int(np.searchsorted(self.omega / (2 * np.pi), guard, side="right"))
            self.n_out = -(-self.n_window // self.decimation)
        else:
            self._n_keep = len(self.omega)
            self.n_out = self.n_window

    @property
    def output_dt(self) -> float:
        return self.dt * self.decimation

    def window_times(self) -> np.ndarray:
        """Absolute sample times of each output window, shape ``(n_bounce, n_out)``."""
        return self.window_starts[:, None] + np.arange(self.n_out)[None, :] * self.output_dt

    def pulses(self, v0: float, a: float) -> np.ndarray:
        v = v0 * a ** np.arange(self.n_bounce)
        if v.min() < self.MIN_SPEED:
            raise DomainError(f"incident speed below {self.MIN_SPEED} m/s is not supported")
        return _pulse_samples(self.kf * v ** 1.2, self.kt * v ** -0.2, self.dt)

    def displacement_spectra(self, v0: float, a: float) -> np.ndarray:
        """Spectrum of the projected, placed displacement for each bounce."""
        return sfft.rfft(self.pulses(v0, a), self.nfft, axis=1) * self._green

    def filter(self, omega_s: float, epsilon: float) -> np.ndarray:
        ws = float(to_angular(omega_s, self.convention))
        eps = float(to_angular(epsilon, self.convention))
        return response_filter(self.omega, ws, eps)

    def _to_time(self, spectra: np.ndarray) -> np.ndarray:
        if self.decimation == 1:
            return sfft.irfft(spectra, self.nfft, axis=-1)[..., :self.n_window]
        q = self.decimation
        out = sfft.irfft(spectra[..., :self._n_keep], self.nfft // q, axis=-1) / q
        return out[..., :self.n_out]

    def output_spectra(self, v0: float, a: float, omega_s: float, epsilon: float) -> np.ndarray:
        return self.displacement_spectra(v0, a) * self.filter(omega_s, epsilon)[None, :]

    def unit_waveforms(self, v0: float, a: float, omega_s: float, epsilon: float) -> np.ndarray:
        """Noise-free output for ``C = 1``, shape ``(n_bounce, n_out)``."""
        return self._to_time(self.output_spectra(v0, a, omega_s, epsilon))

    def unit_and_slope(self, v0: float, a: float, omega_s: float, epsilon: float):
        """Unit waveforms and their time derivatives (per second)."""
        spec = self.output_spectra(v0, a, omega_s, epsilon)
        out = self._to_time(np.stack([spec, 1j * self.omega * spec]))
        return out[0], out[1]

    def with_arrivals(self, arrival_times: Sequence[float]) -> "WaveformModel":
        """Same windows, bounces re-placed at new arrival times."""
        return WaveformModel(self.geom, self.sample, self.ball, self.sensor_idx, arrival_times,
                             self.window_starts, self.n_window, self.dt, self.convention, self.decimation)

    def decimate(self, windows: np.ndarray) -> np.ndarray:
        """Apply the model's low-pass and downsampling to observed windows."""
        windows = np.asarray(windows, dtype=float)
        if self.decimation == 1:
            return windows
        return self._to_time(sfft.rfft(windows, self.nfft, axis=-1))


def synthesize_record(geom: ExperimentGeometry, sample: MaterialProperties,
                      ball: MaterialProperties, bp: BounceParams, resp: SensorResponseParams,
                      sensor_idx: int, arrival_times: Sequence[float], dt: float,
                      window: float, pre: float = 20e-6, convention: str = "cyclic") -> np.ndarray:
    """Concatenated noise-free sensor output (counts), one window per bounce.

    Each window starts ``pre`` seconds before its arrival time and lasts
    ``window`` seconds.
    """
    arrival_times = np.asarray(arrival_times, dtype=float)
    if len(arrival_times) != bp.n:
        raise PreconditionError(f"need {bp.n} arrival times, got {len(arrival_times)}")
    r = geom.distance(sensor_idx)
    t_c_max = hertz_contact(ball, sample, geom.ball_radius, bp.incident_speeds().min())[1]
    needed = pre + r / sample.vs - r / sample.vp + t_c_max
    if window < needed:
        raise PreconditionError(f"window of {window:g} s is shorter than pulse + S delay ({needed:g} s)")
    model = WaveformModel(geom, sample, ball, sensor_idx, arrival_times, arrival_times - pre,
                          int(round(window / dt)), dt, convention)
    return resp.c_gain * model.unit_waveforms(bp.v0, bp.a, resp.omega_s, resp.epsilon).ravel()
