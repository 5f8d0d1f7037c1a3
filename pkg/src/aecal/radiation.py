"""Directional P-wave response of a circular piston transducer.

The far-field amplitude of a compressional piston of radius ``R_s`` on an
elastic half-space is the aperture factor ``J1(x)/x`` with
``x = k_p R_s sin(theta)`` times a free-surface directivity factor in
``kappa = vs / vp``.  Patterns here are normalized to 1 at normal incidence
and compared with the cosine law used by the forward model.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import DomainError
from .physics import TITANIUM, MaterialProperties

# first zeros of J1 (Abramowitz & Stegun, table 9.5)
J1_ZEROS = (3.8317059702, 7.0155866698, 10.1734681351, 13.3236919363, 16.4706300509)


class SingularDirectivity(UserWarning):
    """The directivity denominator vanished and the amplitude was set to 0."""


@dataclass(frozen=True)
class PatternQuery:
    theta: float
    frequency: float
    sensor_radius: float = 5e-3
    sample: MaterialProperties = TITANIUM

    def __post_init__(self):
        if not 0 <= self.theta < math.pi / 2:
            raise DomainError(f"theta must be in [0, pi/2), got {self.theta}")
        if not self.frequency > 0:
            raise DomainError(f"frequency must be > 0, got {self.frequency}")
        if not self.sensor_radius > 0:
            raise DomainError(f"sensor_radius must be > 0, got {self.sensor_radius}")


def aperture(x) -> np.ndarray:
    """``2 J1(x) / x``, equal to 1 at ``x = 0``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 8.0, 2.0 * special.j1(safe) / safe)


def directivity(theta, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    """Free-surface factor divided by its normal-incidence value ``kappa**2``.

    Returns the factor and a mask of angles where its denominator vanishes
    (the factor is set to 0 there).
    """
    theta = np.asarray(theta, dtype=float)
    s2 = np.sin(theta) ** 2
    c = np.cos(theta)
    b = 1.0 - 2.0 * kappa ** 2 * s2
    den = b * b + 4.0 * kappa ** 3 * s2 * c * np.sqrt(np.maximum(1.0 - kappa ** 2 * s2, 0.0))
    singular = np.abs(den) < 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.where(singular, 0.0, c * b / np.where(singular, 1.0, den))
    return value, singular


def pattern(theta, frequency: float, sensor_radius: float = 5e-3,
            sample: MaterialProperties = TITANIUM, signed: bool = False):
    """Normalized pattern on an array of angles.

    Returns ``(amplitude, singular)``.  With ``signed=True`` the sign of the
    aperture factor is kept, so side lobes alternate in sign.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0) | (theta >= math.pi / 2)):
        raise DomainError("theta must lie in [0, pi/2)")
    if not frequency > 0 or not sensor_radius > 0:
        raise DomainError("frequency and sensor_radius must be > 0")
    k = 2 * math.pi * frequency / sample.vp
    dirc, singular = directivity(theta, sample.vs / sample.vp)
    amp = aperture(k * sensor_radius * np.sin(theta)) * dirc
    return (amp if signed else np.abs(amp)), singular


def tang_pattern(q: PatternQuery, signed: bool = False) -> float:
    """Relative P amplitude at one angle; warns and returns 0 at a singular angle."""
    amp, singular = pattern(q.theta, q.frequency, q.sensor_radius, q.sample, signed)
    if bool(singular):
        warnings.warn(f"directivity denominator vanishes at theta={q.theta}", SingularDirectivity)
    return float(amp)


def compare_cosine(freqs, theta_grid, sensor_radius: float = 5e-3,
                   sample: MaterialProperties = TITANIUM) -> np.ndarray:
    """Largest ``|pattern - cos(theta)|`` over ``theta_grid`` for each frequency."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    theta = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    if freqs.size == 0 or theta.size == 0:
        raise DomainError("frequency and angle grids must be non-empty")
    return np.array([np.max(np.abs(pattern(theta, f, sensor_radius, sample)[0] - np.cos(theta)))
                     for f in freqs])


def lobe_zeros(frequency: float, sensor_radius: float = 5e-3,
               sample: MaterialProperties = TITANIUM, n_grid: int = 4001) -> np.ndarray:
    """Angles in ``(0, pi/2)`` where the signed pattern changes sign."""
    theta = np.linspace(1e-9, math.pi / 2 - 1e-9, n_grid)
    amp = pattern(theta, frequency, sensor_radius, sample, signed=True)[0]
    f = lambda t: float(pattern(t, frequency, sensor_radius, sample, signed=True)[0])
    idx = np.flatnonzero(np.sign(amp[:-1]) * np.sign(amp[1:]) < 0)
    return np.array([optimize.brentq(f, theta[i], theta[i + 1], xtol=1e-15, rtol=1e-15) for i in idx])
