"""Scenario presets and name normalisation."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..config import ConfigError, SystemConfig, load_config

# (good, moderate, poor) out of 200 APs
ALIGNMENT_PRESETS = {"A": (20, 20, 160), "B": (40, 40, 120), "C": (60, 60, 80), "D": (80, 80, 40)}
POLICIES = ("fso_only", "rf_only", "rf_and_fso", "cognitive")
POLICY_ALIASES = {"fso": "fso_only", "rf": "rf_only", "both": "rf_and_fso", "cognitive": "cognitive"}
SOLVERS = ("full", "wmmse", "gp")
MODES = {"cf": "cell_free", "uc": "user_centric", "cell_free": "cell_free", "user_centric": "user_centric"}
WEATHERS = ("clear", "rainy", "snowy", "foggy")


def scaled_counts(name: str, num_aps: int) -> tuple:
    """Preset alignment counts scaled to ``num_aps``; rounding goes to the poor class."""
    if name == "custom":
        return (num_aps, 0, 0)
    if name not in ALIGNMENT_PRESETS:
        raise ConfigError(f"unknown scenario {name!r}")
    g, m, _ = ALIGNMENT_PRESETS[name]
    good = round(g * num_aps / 200)
    mod = round(m * num_aps / 200)
    return (good, mod, num_aps - good - mod)


@dataclass
class Scenario:
    name: str = "custom"
    weather: str = "clear"
    policy: str = "fso_only"
    solver: str = "full"
    mode: str = "cell_free"
    trials: int = 200
    seed: int = 0
    config: SystemConfig = field(default_factory=load_config)
    alignment: tuple | None = None

    def __post_init__(self):
        self.policy = POLICY_ALIASES.get(self.policy, self.policy)
        self.mode = MODES.get(self.mode, self.mode)
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.mode not in ("cell_free", "user_centric"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.weather not in WEATHERS:
            raise ConfigError(f"unknown weather {self.weather!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.config.network.mode != self.mode:
            self.config = self.config.replace(network={"mode": self.mode})
        M = self.config.network.num_aps
        if self.alignment is None:
            self.alignment = scaled_counts(self.name, M)
        self.alignment = tuple(int(c) for c in self.alignment)
        if sum(self.alignment) != M or min(self.alignment) < 0:
            raise ConfigError(f"alignment counts {self.alignment} must be nonnegative and sum to M={M}")

    def label(self) -> dict:
        return {"scenario": self.name, "weather": self.weather, "policy": self.policy,
                "solver": self.solver, "mode": self.mode}
