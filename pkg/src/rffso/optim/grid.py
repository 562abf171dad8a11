"""Exhaustive grid search over (eta, mu, mu') for tiny instances (test oracle).

Gains are gridded as fractions of their eta-dependent caps so every grid
point is feasible for the per-AP constraints; the total-power budget is
filtered explicitly.
"""
from __future__ import annotations

import numpy as np

from ..perf import PowerAllocation
from .problem import PowerProblem

MAX_POINTS = 10_000_000


def _weighted_iui(t, eta, m2, r2, mm):
    """sum_j eta_pj IUI_kj for P candidate points; eta is contracted first."""
    out = (np.tensordot(eta, t.C, axes=([1], [1])) * m2[:, None, :]).sum(-1)
    out += (np.tensordot(eta, t.Cp, axes=([1], [1])) * r2[:, None, :]).sum(-1)
    out += 2.0 * (np.tensordot(eta, t.Y, axes=([1], [1])) * mm[:, None, :]).sum(-1)
    return out


def _batch_sinr(prob: PowerProblem, eta, mu, mr):
    t = prob.terms
    S = mu @ t.A.T + mr @ t.Ap.T
    m2, r2, mm = mu * mu, mr * mr, mu * mr
    BU = m2 @ t.B.T + r2 @ t.Bp.T + 2.0 * mm @ t.X.T
    NZ = t.D0[None, :] + m2 @ t.E.T + r2 @ t.Ep.T + 2.0 * mm @ t.Z.T
    den = eta * BU + _weighted_iui(t, eta, m2, r2, mm) + NZ
    return eta * S * S / den


def brute_force_oracle(prob: PowerProblem, resolution: int = 50, objective: str = "ee",
                       chunk: int = 200_000):
    """Best grid allocation and its objective value.

    objective: "ee" (true EE), "ee_high_sinr" or "sum_rate".  ``resolution``
    is the number of intervals per axis, so each axis has resolution+1 points.
    """
    K, M = prob.num_ues, prob.num_aps
    fso = np.flatnonzero(prob.eps)
    rf = np.flatnonzero(prob.eps_rf)
    nv = K + fso.size + rf.size
    axis = np.linspace(0.0, 1.0, resolution + 1)
    total = axis.size ** nv
    if total > MAX_POINTS:
        raise ValueError(f"grid of {total} points exceeds {MAX_POINTS}")
    best_val, best = -np.inf, None
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.stack(np.unravel_index(flat, (axis.size,) * nv), axis=1)
        g = axis[idx]
        eta = g[:, :K]
        ld = prob.rho_u * eta @ prob.beta.T + prob.sigma_u2[None, :]
        mu = np.zeros((len(g), M))
        mr = np.zeros((len(g), M))
        mu[:, fso] = g[:, K:K + fso.size] * np.sqrt(prob.p_fso_max / ld[:, fso])
        mr[:, rf] = g[:, K + fso.size:] * np.sqrt(prob.p_rf_max / ld[:, rf])
        with np.errstate(divide="ignore", invalid="ignore"):
            sinr = _batch_sinr(prob, eta, mu, mr)
            p_net = prob.rho_u * eta.sum(1) + prob.p_fixed
            if objective == "ee":
                val = prob.prelog_bw * np.log2(1.0 + sinr).sum(1) / p_net
            elif objective == "ee_high_sinr":
                val = prob.prelog_bw * np.log2(sinr).sum(1) / p_net
            elif objective == "sum_rate":
                val = np.log2(1.0 + sinr).sum(1)
            else:
                raise ValueError(f"unknown objective {objective!r}")
        val = np.where(np.isfinite(val) & (prob.rho_u * eta.sum(1) <= prob.p_total - prob.p_fixed), val, -np.inf)
        i = int(np.argmax(val))
        if val[i] > best_val:
            best_val = float(val[i])
            best = PowerAllocation(eta[i].copy(), mu[i].copy(), mr[i].copy())
    return best, best_val
