"""Experiment configuration stored as JSON with units in the field names."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DomainError
from .inference import PriorSpec
from .physics import (GRAVITY, STEEL, TITANIUM, ExperimentGeometry, MaterialProperties,
                      Sensor, cylinder_layout)

PROFILES = {
    "paper": {"n_iter": 1_000_000, "burn_in": 600_000},
    "fast": {"n_iter": 100_000, "burn_in": 40_000},
}


def _material(m: MaterialProperties) -> dict:
    return {"density_kg_m3": m.density, "youngs_modulus_pa": m.youngs_modulus,
            "poisson_ratio": m.poisson_ratio, "vp_m_s": m.vp, "vs_m_s": m.vs}


DEFAULTS = {
    "pressure_label": "cp30_ds10",
    "materials": {"ball": _material(STEEL), "sample": _material(TITANIUM)},
    "geometry": {
        "diameter_m": 46.1e-3,
        "length_m": 73.7e-3,
        "ball_radius_m": 3.18e-3,
        "gravity_m_s2": GRAVITY,
        "source_m": [0.0, 0.0, 0.0],
        "sensors": None,   # None: two rings of eight on the cylinder
    },
    "acquisition": {
        "sample_rate_hz": 12.5e6,
        "n_bounces": 3,
        "pre_s": 20e-6,
        "window_s": 200e-6,
        "noise_window_s": 1e-3,
        "decimation": 1,
        "sta_s": 40e-6,
        "lta_s": 400e-6,
        "threshold": 5.0,
        "dead_time_s": 5e-3,
        "xcorr_lead_s": 20e-6,
        "xcorr_window_s": 35e-6,
        "max_lag_s": 10e-6,
        "frequency_convention": "cyclic",
    },
    "priors": {
        "v0_m_s": [1.0, 1.5],
        "a": [0.5, 0.9],
        "omega_s_khz": [100.0, 500.0],
        "epsilon_khz": [10.0, 50.0],
        "sigma_t2_mean_s2": 1e-10,
        "sigma_t2_var_s4": 1e-22,
    },
    "mcmc": {
        "n_iter": PROFILES["paper"]["n_iter"],
        "burn_in": PROFILES["paper"]["burn_in"],
        "seed": 0,
        "eps0": 1e-10,
        "adapt_start": 1000,
        "adapt_every": 100,
        "thin": 1,
        "init_scale": 0.01,
    },
    "synthetic": {
        "first_impact_s": 5e-3,
        "tail_s": 2e-3,
        "segment_s": 500e-6,
        "c_gain_counts_m": 1e13,
    },
}


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        where = f"{path}{key}"
        if key not in base:
            raise DomainError(f"unknown config field '{where}'")
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = val
    return out


def _check(cond: bool, field: str, msg: str) -> None:
    if not cond:
        raise DomainError(f"config field '{field}': {msg}")


def _build_material(d: dict, field: str) -> MaterialProperties:
    try:
        return MaterialProperties(d["density_kg_m3"], d["youngs_modulus_pa"], d["poisson_ratio"],
                                  d["vp_m_s"], d["vs_m_s"])
    except DomainError as exc:
        raise DomainError(f"config field '{field}': {exc}") from None


@dataclass
class ExperimentConfig:
    """Validated experiment configuration.

    Build with :meth:`from_dict` or :meth:`load`; the raw nested dictionary
    is kept in ``data`` and the derived physics objects are attributes.
    """

    data: dict

    def __post_init__(self):
        d = self.data
        _check(isinstance(d["pressure_label"], str) and d["pressure_label"].strip() != "",
               "pressure_label", "must be a non-empty string")
        self.ball = _build_material(d["materials"]["ball"], "materials.ball")
        self.sample = _build_material(d["materials"]["sample"], "materials.sample")

        g = d["geometry"]
        for key in ("diameter_m", "length_m", "ball_radius_m", "gravity_m_s2"):
            _check(g[key] > 0, f"geometry.{key}", f"must be > 0, got {g[key]}")
        try:
            if g["sensors"] is None:
                geom = cylinder_layout(g["diameter_m"], g["length_m"],
                                       ball_radius=g["ball_radius_m"], gravity=g["gravity_m_s2"])
                self.geometry = ExperimentGeometry(g["source_m"], geom.sensors, g["ball_radius_m"], g["gravity_m_s2"])
            else:
                sensors = [Sensor(int(s["id"]), s["position_m"], s["normal"]) for s in g["sensors"]]
                self.geometry = ExperimentGeometry(g["source_m"], sensors, g["ball_radius_m"], g["gravity_m_s2"])
        except (DomainError, KeyError, TypeError) as exc:
            raise DomainError(f"config field 'geometry': {exc}") from None
        ids = [s.id for s in self.geometry.sensors]
        _check(len(set(ids)) == len(ids), "geometry.sensors", "sensor ids must be unique")

        a = d["acquisition"]
        _check(a["sample_rate_hz"] > 0, "acquisition.sample_rate_hz", "must be > 0")
        _check(a["n_bounces"] in (2, 3), "acquisition.n_bounces", "must be 2 or 3")
        for key in ("pre_s", "window_s", "noise_window_s", "sta_s", "lta_s", "dead_time_s",
                    "xcorr_window_s", "threshold"):
            _check(a[key] > 0, f"acquisition.{key}", f"must be > 0, got {a[key]}")
        for key in ("xcorr_lead_s", "max_lag_s"):
            _check(a[key] >= 0, f"acquisition.{key}", f"must be >= 0, got {a[key]}")
        _check(a["sta_s"] < a["lta_s"], "acquisition.sta_s", "must be shorter than lta_s")
        _check(a["pre_s"] < a["window_s"], "acquisition.pre_s", "must be shorter than window_s")
        _check(isinstance(a["decimation"], int) and a["decimation"] >= 1,
               "acquisition.decimation", "must be a positive integer")
        _check(a["frequency_convention"] in ("cyclic", "angular"),
               "acquisition.frequency_convention", "must be 'cyclic' or 'angular'")

        p = d["priors"]
        try:
            self.prior = PriorSpec(tuple(p["v0_m_s"]), tuple(p["a"]), tuple(p["omega_s_khz"]),
                                   tuple(p["epsilon_khz"]), p["sigma_t2_mean_s2"], p["sigma_t2_var_s4"])
        except (DomainError, TypeError, ValueError) as exc:
            raise DomainError(f"config field 'priors': {exc}") from None

        m = d["mcmc"]
        _check(isinstance(m["n_iter"], int) and m["n_iter"] > 0, "mcmc.n_iter", "must be a positive integer")
        _check(isinstance(m["burn_in"], int) and 0 <= m["burn_in"] < m["n_iter"],
               "mcmc.burn_in", "must satisfy 0 <= burn_in < n_iter")
        _check(isinstance(m["seed"], int) and m["seed"] >= 0, "mcmc.seed", "must be a non-negative integer")
        _check(m["eps0"] > 0, "mcmc.eps0", "must be > 0")
        _check(m["adapt_start"] >= 2, "mcmc.adapt_start", "must be >= 2")
        _check(m["adapt_every"] >= 1, "mcmc.adapt_every", "must be >= 1")
        _check(isinstance(m["thin"], int) and m["thin"] >= 1, "mcmc.thin", "must be a positive integer")
        _check(m["init_scale"] > 0, "mcmc.init_scale", "must be > 0")

        s = d["synthetic"]
        for key in ("first_impact_s", "tail_s", "segment_s", "c_gain_counts_m"):
            _check(s[key] > 0, f"synthetic.{key}", f"must be > 0, got {s[key]}")
        _check(s["segment_s"] >= a["window_s"], "synthetic.segment_s", "must be at least acquisition.window_s")
        _check(s["first_impact_s"] > a["noise_window_s"] + a["pre_s"], "synthetic.first_impact_s",
               "must leave room for the noise window before the first arrival")

    # convenience accessors
    @property
    def acquisition(self) -> dict:
        return self.data["acquisition"]

    @property
    def mcmc(self) -> dict:
        return self.data["mcmc"]

    @property
    def synthetic(self) -> dict:
        return self.data["synthetic"]

    @property
    def sample_rate(self) -> float:
        return float(self.acquisition["sample_rate_hz"])

    @property
    def pressure_label(self) -> str:
        return self.data["pressure_label"]

    @classmethod
    def from_dict(cls, over: dict | None = None, profile: str | None = None) -> "ExperimentConfig":
        data = _merge(DEFAULTS, over or {})
        if profile is not None:
            if profile not in PROFILES:
                raise DomainError(f"unknown profile '{profile}'")
            data["mcmc"].update(PROFILES[profile])
        return cls(data)

    @classmethod
    def load(cls, path, profile: str | None = None) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh), profile)

    def override(self, **sections) -> "ExperimentConfig":
        """Copy with some fields replaced, e.g. ``override(mcmc={"seed": 3})``."""
        return ExperimentConfig(_merge(self.data, sections))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
