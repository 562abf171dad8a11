"""LMMSE channel estimation: access links at the APs, FSO and RF fronthaul
links at the ANs.  Statistics (zeta, gamma) plus per-realisation estimators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def orthonormal_pilots(tau_p: int, count: int) -> np.ndarray:
    """(tau_p, count) unit-norm, mutually orthogonal DFT pilot columns."""
    if count > tau_p:
        raise ValueError("need tau_p >= number of pilots for orthogonality")
    n = np.arange(tau_p)[:, None]
    return np.exp(-2j * np.pi * n * np.arange(count)[None, :] / tau_p) / np.sqrt(tau_p)


def check_pilots(pilots: np.ndarray, atol: float = 1e-9) -> None:
    norms = np.sum(np.abs(pilots) ** 2, axis=0)
    if not np.allclose(norms, 1.0, atol=atol):
        raise ValueError("pilot sequences must have unit norm")


def lmmse_scalar(prior_m2, tau_p: int, power, noise_var):
    """Scalar LMMSE on a despread pilot observation sqrt(tau_p P) x + w.

    Returns (zeta, gamma), gamma = E|x_hat|^2."""
    prior_m2 = np.asarray(prior_m2, dtype=float)
    a = np.sqrt(tau_p * np.asarray(power, dtype=float))
    zeta = a * prior_m2 / (tau_p * power * prior_m2 + noise_var)
    return zeta, a * prior_m2 * zeta


def lmmse_access(beta, tau_p: int, rho_p: float, sigma_p2, pilots=None):
    """(zeta_mk, gamma_mk), both (M, K).  ``sigma_p2`` is per AP (M,)."""
    beta = np.asarray(beta, dtype=float)
    sig = np.broadcast_to(np.asarray(sigma_p2, dtype=float), beta.shape[:1])[:, None]
    if pilots is None:
        contam = tau_p * rho_p * beta
    else:
        check_pilots(pilots)
        overlap = np.abs(pilots.conj().T @ pilots) ** 2     # (K', K)
        contam = tau_p * rho_p * (beta @ overlap)
    a = np.sqrt(tau_p * rho_p)
    zeta = a * beta / (contam + sig)
    return zeta, a * beta * zeta


def lmmse_fso(fso_m2, tau_p: int, p_fso_max: float, noise_var):
    return lmmse_scalar(fso_m2, tau_p, p_fso_max, noise_var)


def lmmse_rf_fronthaul(beta_am, tau_p: int, p_rf_max: float, noise_var):
    return lmmse_scalar(beta_am, tau_p, p_rf_max, noise_var)


def despread(y_pilot: np.ndarray, pilot: np.ndarray) -> np.ndarray:
    """Project the received (..., tau_p) pilot block on a unit-norm pilot."""
    return y_pilot @ pilot.conj()


def apply_estimator(zeta, y_despread):
    return zeta * y_despread


def matched_filter_estimate(y_despread, tau_p: int, power):
    """Unbiased scaled matched filter, the baseline LMMSE must beat."""
    return y_despread / np.sqrt(tau_p * power)


@dataclass
class EstimationStatistics:
    zeta: np.ndarray          # (M, K)
    gamma: np.ndarray         # (M, K)
    zeta_fso: np.ndarray      # (M,)
    gamma_fso: np.ndarray     # (M,)
    zeta_rf: np.ndarray       # (M,)
    gamma_rf: np.ndarray      # (M,)
    sigma_p2: np.ndarray      # (M,)
    phi_fso_p2: np.ndarray    # (M,)
    phi_rf_p2: np.ndarray     # (M,)
    tau_p: int
    rho_p: float
    p_fso_max: float
    p_rf_max: float


def estimation_statistics(beta, fso_m2, beta_am, *, tau_p, rho_p, p_fso_max, p_rf_max,
                          sigma_p2, phi_fso_p2, phi_rf_p2) -> EstimationStatistics:
    M = np.shape(beta)[0]
    sigma_p2 = np.broadcast_to(np.asarray(sigma_p2, dtype=float), (M,)).copy()
    phi_fso_p2 = np.broadcast_to(np.asarray(phi_fso_p2, dtype=float), (M,)).copy()
    phi_rf_p2 = np.broadcast_to(np.asarray(phi_rf_p2, dtype=float), (M,)).copy()
    z, g = lmmse_access(beta, tau_p, rho_p, sigma_p2)
    zf, gf = lmmse_fso(fso_m2, tau_p, p_fso_max, phi_fso_p2)
    zr, gr = lmmse_rf_fronthaul(beta_am, tau_p, p_rf_max, phi_rf_p2)
    return EstimationStatistics(z, g, zf, gf, zr, gr, sigma_p2, phi_fso_p2, phi_rf_p2,
                                tau_p, rho_p, p_fso_max, p_rf_max)
