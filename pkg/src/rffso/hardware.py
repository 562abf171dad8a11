"""Bussgang-linearised hardware stages.

Clipping (RF-over-FSO at APs, FSO/RF-over-fiber at ANs) and the residual
hardware-impairment model (RF-over-RF at APs), plus the effective noise
variances seen at the CPU for each fronthaul branch.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DistortionParams:
    gain: float
    noise_var: float


@dataclass(frozen=True)
class ClippingConfig:
    laser_gain: float
    clip_level: float
    input_variance: float


@dataclass(frozen=True)
class HiConfig:
    quality: float
    input_variance: float


def clipping_distortion(cfg: ClippingConfig, form: str = "printed") -> DistortionParams:
    """Gain and distortion variance of a clipped, amplified Gaussian input.

    form="printed": the closed form with the B_c^2 (2 - mu/mu0) leading term.
    form="gaussian": the second moment of a clipped Gaussian minus the
    Bussgang-correlated part, i.e. with (1 - mu/mu0) leading; this one goes to
    zero as the clip level grows and is checked against sampling in tests.
    """
    mu0, bc, d2 = float(cfg.laser_gain), float(cfg.clip_level), float(cfg.input_variance)
    if d2 <= 0:
        raise ValueError("input variance must be positive")
    if mu0 <= 0 or bc < 0:
        raise ValueError("need laser_gain > 0 and clip_level >= 0")
    s2 = mu0 ** 2 * d2
    r = erf(bc / np.sqrt(2.0 * s2))
    mu = mu0 * r
    lead = 2.0 - r if form == "printed" else 1.0 - r
    if form not in ("printed", "gaussian"):
        raise ValueError(f"unknown clipping form {form!r}")
    nd2 = bc ** 2 * lead + s2 * (1.0 - r) * r - np.sqrt(2.0 * bc ** 2 * s2 / np.pi) * np.exp(-bc ** 2 / (2.0 * s2))
    # negatives at the 1e-16 level are cancellation noise between the three terms
    if nd2 < -1e-9 * (bc ** 2 + s2):
        log.warning("clipping distortion variance evaluated to %.3e; clamped to 0", nd2)
    return DistortionParams(float(mu), float(max(nd2, 0.0)))


def hi_distortion(cfg: HiConfig) -> DistortionParams:
    q = float(cfg.quality)
    if not 0.0 <= q <= 1.0:
        raise ValueError("quality factor must lie in [0, 1]")
    return DistortionParams(float(np.sqrt(q)), float((1.0 - q) * cfg.input_variance))


def clip_samples(x, laser_gain: float, clip_level: float):
    """Amplify and clip a real signal (used by the sampling checks)."""
    return np.clip(laser_gain * np.asarray(x), -clip_level, clip_level)


@dataclass
class ChainGains:
    """Per-AP hardware quantities of the two fronthaul branches (arrays over m)."""
    mu_an: np.ndarray          # FSO->fiber gain at the AN
    mu_an_rf: np.ndarray       # RF->fiber gain at the AN
    nd_ap: np.ndarray          # AP distortion variance, FSO branch
    nd_ap_rf: np.ndarray       # AP distortion variance, RF branch
    nd_an: np.ndarray          # AN distortion variance, FSO branch
    nd_an_rf: np.ndarray       # AN distortion variance, RF branch


def effective_noise_variances(mu_ap, mu_ap_rf, chain: ChainGains, fso_m2, beta_am,
                              sigma_u2, phi_fso2, phi_rf2, phi_cpu2):
    """Per-entry variances (Omega^2, Omega'^2) of the aggregate noise of
    each branch at the CPU; all noise terms are independent so they add."""
    mu_ap = np.asarray(mu_ap, dtype=float)
    mu_ap_rf = np.asarray(mu_ap_rf, dtype=float)
    om = (mu_ap ** 2 * chain.mu_an ** 2 * fso_m2 * sigma_u2 + chain.mu_an ** 2 * fso_m2 * chain.nd_ap
          + chain.mu_an ** 2 * phi_fso2 + chain.nd_an + phi_cpu2)
    om_rf = (mu_ap_rf ** 2 * chain.mu_an_rf ** 2 * beta_am * sigma_u2 + chain.mu_an_rf ** 2 * beta_am * chain.nd_ap_rf
             + chain.mu_an_rf ** 2 * phi_rf2 + chain.nd_an_rf + phi_cpu2)
    return om, om_rf
