"""Configuration containers and the shipped default parameter set.

All powers are in watts, distances in meters, bandwidths in Hz.  dB values
only appear at the JSON boundary (``*_dbm`` / ``*_db`` keys).
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import numpy as np

BOLTZMANN = 1.381e-23


class ConfigError(ValueError):
    """Raised for an invalid or inconsistent configuration."""


def dbm_to_watt(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0) / 1000.0


def db_to_lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


@dataclass
class NetworkConfig:
    area_side: float = 1000.0
    num_ues: int = 8
    num_aps: int = 40
    num_antennas: int = 2
    num_ans: int = 4
    an_ring_radius: float = 300.0
    cluster_size: int = 4
    mode: str = "cell_free"
    rf_bandwidth: float = 40e6
    h_ue: float = 1.65
    h_ap: float = 15.0
    h_an: float = 30.0
    coherence: int = 100
    pilot_length: int = 20

    def validate(self) -> None:
        for name in ("num_ues", "num_aps", "num_antennas", "num_ans", "cluster_size"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.area_side <= 0:
            raise ConfigError("area_side must be positive")
        if self.num_ues > self.pilot_length:
            raise ConfigError("orthogonal pilots need num_ues <= pilot_length")
        if self.pilot_length >= self.coherence:
            raise ConfigError("pilot_length must be shorter than the coherence interval")
        if self.cluster_size > self.num_ues:
            raise ConfigError("cluster_size cannot exceed num_ues")
        if self.mode not in ("cell_free", "user_centric"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.rf_bandwidth <= 0 or self.an_ring_radius < 0:
            raise ConfigError("bandwidth must be positive and ring radius nonnegative")


@dataclass
class LargeScaleModel:
    """Three-slope path loss with log-normal shadowing on the far slope."""
    d0: float = 10.0
    d1: float = 50.0
    freq_mhz: float = 1900.0
    shadow_std_db: float = 8.0
    noise_figure_db: float = 9.0
    temperature: float = 290.0

    def validate(self) -> None:
        if not (0 < self.d0 < self.d1):
            raise ConfigError("need 0 < d0 < d1")
        if self.freq_mhz <= 0:
            raise ConfigError("frequency must be positive")

    def thermal_noise(self, bandwidth):
        return BOLTZMANN * self.temperature * np.asarray(bandwidth, dtype=float) * db_to_lin(self.noise_figure_db)


@dataclass
class FsoConfig:
    """Shared FSO fronthaul parameters (per-link distance/offset/weather vary)."""
    wavelength: float = 1550e-9
    cn2: float = 5e-14
    jitter_std: float = 0.3
    beam_waist: float = 2.5
    receiver_radius: float = 0.1
    divergence: float = 2e-3
    aperture_area: float | None = None
    noise_var: float = 1e-14
    pointing: str = "boresight"
    # alignment bands as multiples of the beam waist
    band_good: tuple = (0.0, 0.8)
    band_moderate: tuple = (0.8, 1.2)
    band_poor: tuple = (1.2, 1.6)

    def validate(self) -> None:
        for name in ("wavelength", "cn2", "jitter_std", "beam_waist", "receiver_radius", "divergence", "noise_var"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.pointing not in ("boresight", "literal"):
            raise ConfigError(f"unknown pointing model {self.pointing!r}")

    @property
    def area(self) -> float:
        if self.aperture_area is not None:
            return float(self.aperture_area)
        return float(np.pi * self.receiver_radius ** 2)


@dataclass
class HardwareConfig:
    clip_level: float = 1.0
    clipping_form: str = "gaussian"
    hi_quality: float = 0.95
    responsivity_fso: float = 0.5
    responsivity_of: float = 1.0
    an_laser_gain: float = 1.0
    cpu_noise_var: float = 1e-14

    def validate(self) -> None:
        if self.clip_level < 0:
            raise ConfigError("clip_level must be nonnegative")
        if not (0.0 <= self.hi_quality <= 1.0):
            raise ConfigError("hi_quality must be in [0, 1]")
        if self.clipping_form not in ("printed", "gaussian"):
            raise ConfigError(f"unknown clipping form {self.clipping_form!r}")


@dataclass
class PowerModel:
    rho_u: float = 0.1
    rho_p: float = 0.1
    p_fso_max: float = float(dbm_to_watt(16.0))
    p_rf_max: float = float(dbm_to_watt(20.0))
    p_circuit_ap: float = 0.2
    p_circuit_an: float = 0.5
    p_fronthaul: float = 0.1
    p_backhaul: float = 0.5
    p_total: float = 60.0

    def validate(self) -> None:
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 0:
                raise ConfigError(f"{f.name} must be nonnegative")
        if self.rho_u <= 0 or self.p_fso_max <= 0 or self.p_rf_max <= 0:
            raise ConfigError("transmit power limits must be positive")


@dataclass
class AssignConfig:
    theta_dom: float = 10.0
    theta_eq: float = 0.2
    theta_zero: float = 1e-3
    representative_offset: dict = field(default_factory=lambda: {"good": 0.4, "moderate": 1.0, "poor": 1.4})
    weather_db_km: dict = field(default_factory=lambda: {"clear": 0.44, "rainy": 0.523, "snowy": 4.53, "foggy": 50.0})


@dataclass
class SystemConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    radio: LargeScaleModel = field(default_factory=LargeScaleModel)
    fso: FsoConfig = field(default_factory=FsoConfig)
    hardware: HardwareConfig = field(default_factory=HardwareConfig)
    power: PowerModel = field(default_factory=PowerModel)
    assign: AssignConfig = field(default_factory=AssignConfig)
    sinr_convention: str = "exact"
    estimated_fso: bool = False

    def validate(self) -> None:
        self.network.validate()
        self.radio.validate()
        self.fso.validate()
        self.hardware.validate()
        self.power.validate()
        if self.sinr_convention not in ("exact", "printed"):
            raise ConfigError(f"unknown sinr convention {self.sinr_convention!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **sections) -> "SystemConfig":
        """Copy with some sections (or nested fields, as dicts) replaced."""
        d = self.to_dict()
        for key, val in sections.items():
            if isinstance(val, dict) and isinstance(d.get(key), dict):
                d[key].update(val)
            else:
                d[key] = dataclasses.asdict(val) if dataclasses.is_dataclass(val) else val
        return config_from_dict(d)


_SECTIONS = {
    "network": NetworkConfig,
    "radio": LargeScaleModel,
    "fso": FsoConfig,
    "hardware": HardwareConfig,
    "power": PowerModel,
    "assign": AssignConfig,
}

# JSON convenience keys given in dB units
_DB_KEYS = {("power", "p_fso_max_dbm"): "p_fso_max", ("power", "p_rf_max_dbm"): "p_rf_max"}


def _build_section(cls, values: dict, section: str):
    values = dict(values)
    for (sec, key), target in _DB_KEYS.items():
        if sec == section and key in values:
            values[target] = float(dbm_to_watt(values.pop(key)))
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    for k in ("band_good", "band_moderate", "band_poor"):
        if k in values:
            values[k] = tuple(values[k])
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_from_dict(d: dict[str, Any]) -> SystemConfig:
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a JSON object")
    kwargs = {}
    for key, val in d.items():
        if key in _SECTIONS:
            if not isinstance(val, dict):
                raise ConfigError(f"section {key!r} must be an object")
            kwargs[key] = _build_section(_SECTIONS[key], val, key)
        elif key in ("sinr_convention", "estimated_fso"):
            kwargs[key] = val
        elif key.startswith("_"):
            continue
        else:
            raise ConfigError(f"unknown configuration section {key!r}")
    cfg = SystemConfig(**kwargs)
    cfg.validate()
    return cfg


def load_config(path=None) -> SystemConfig:
    """Load a JSON config; ``None`` gives the shipped defaults."""
    if path is None:
        text = resources.files("rffso.data").joinpath("defaults.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    return config_from_dict(d)


def full_size(cfg: SystemConfig | None = None) -> SystemConfig:
    """Full-size preset (M=200, K=20, cluster 10).  Slow."""
    cfg = cfg or load_config()
    # the default circuit powers already exceed 60 W at M=200, so P_0 is lifted
    return cfg.replace(network={"num_aps": 200, "num_ues": 20, "cluster_size": 10},
                       power={"p_total": 70.0})
