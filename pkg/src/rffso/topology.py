"""Network geometry, AP -> AN association, user-centric clusters and the RF
bandwidth split between access and fronthaul."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, NetworkConfig


@dataclass
class Topology:
    ue_positions: np.ndarray   # (K, 2)
    ap_positions: np.ndarray   # (M, 2)
    an_positions: np.ndarray   # (A, 2)
    ap_to_an: np.ndarray       # (M,) int
    serve: np.ndarray          # (M, K) bool, True when k in K(m)

    @property
    def num_aps(self) -> int:
        return self.ap_positions.shape[0]

    @property
    def num_ues(self) -> int:
        return self.ue_positions.shape[0]

    @property
    def num_ans(self) -> int:
        return self.an_positions.shape[0]

    def aps_of_an(self, a: int) -> np.ndarray:
        return np.flatnonzero(self.ap_to_an == a)

    def aps_of_ue(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.serve[:, k])

    def ue_ap_distance(self) -> np.ndarray:
        """(M, K) horizontal AP-UE distances."""
        diff = self.ap_positions[:, None, :] - self.ue_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    def ap_an_distance(self) -> np.ndarray:
        """(M,) distance from each AP to its serving AN."""
        diff = self.ap_positions - self.an_positions[self.ap_to_an]
        return np.hypot(diff[:, 0], diff[:, 1])


def an_ring(num_ans: int, radius: float) -> np.ndarray:
    if num_ans < 1:
        raise ConfigError("need at least one AN")
    ang = 2.0 * np.pi * np.arange(num_ans) / num_ans
    return radius * np.column_stack([np.cos(ang), np.sin(ang)])


def nearest_an(ap_positions: np.ndarray, an_positions: np.ndarray) -> np.ndarray:
    """Index of the closest AN for each AP; argmin keeps the lowest index on ties."""
    d2 = ((ap_positions[:, None, :] - an_positions[None, :, :]) ** 2).sum(axis=-1)
    return np.argmin(d2, axis=1)


def generate_topology(config: NetworkConfig, seed) -> Topology:
    """Uniform UEs/APs on a square centred on the CPU, ANs on a ring.

    Clusters are all-ones here; call ``build_clusters`` once the access gains
    are known to restrict them in user-centric mode.
    """
    config.validate()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    half = config.area_side / 2.0
    ue = rng.uniform(-half, half, size=(config.num_ues, 2))
    ap = rng.uniform(-half, half, size=(config.num_aps, 2))
    an = an_ring(config.num_ans, config.an_ring_radius)
    serve = np.ones((config.num_aps, config.num_ues), dtype=bool)
    return Topology(ue, ap, an, nearest_an(ap, an), serve)


def build_clusters(beta_access: np.ndarray, cluster_size: int) -> np.ndarray:
    """Each AP keeps its ``cluster_size`` strongest UEs (ties -> lower index)."""
    beta = np.asarray(beta_access, dtype=float)
    M, K = beta.shape
    if cluster_size > K:
        raise ConfigError("cluster_size exceeds the number of UEs")
    if cluster_size < 1:
        raise ConfigError("cluster_size must be >= 1")
    # stable sort on -beta keeps the lower index first among equals
    order = np.argsort(-beta, axis=1, kind="stable")[:, :cluster_size]
    serve = np.zeros((M, K), dtype=bool)
    np.put_along_axis(serve, order, True, axis=1)
    return serve


def apply_mode(topo: Topology, beta_access: np.ndarray, config: NetworkConfig) -> Topology:
    if config.mode == "user_centric":
        serve = build_clusters(beta_access, config.cluster_size)
    else:
        serve = np.ones_like(topo.serve)
    return Topology(topo.ue_positions, topo.ap_positions, topo.an_positions, topo.ap_to_an, serve)


def split_bandwidth(eps_rf: np.ndarray, ap_to_an: np.ndarray, num_ans: int, bandwidth: float):
    """Access bandwidth BW_0 and per-AP RF fronthaul bandwidth.

    Returns (bw0, bw_m) where bw_m is NaN for APs without an RF fronthaul.
    """
    eps_rf = np.asarray(eps_rf).astype(bool)
    n_rf = np.bincount(ap_to_an[eps_rf], minlength=num_ans)
    bw_an = bandwidth / (n_rf + 1.0)
    bw_m = np.where(eps_rf, bw_an[ap_to_an], np.nan)
    return float(bw_an.min()), bw_m
