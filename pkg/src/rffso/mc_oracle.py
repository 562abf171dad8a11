"""Monte Carlo model of the uplink signal chain.

Draws channels, sends pilots and estimates them, pushes symbols and noises
through AP reforming, the fronthaul, AN reforming and MRC at the CPU, then
reads off the four moment terms of the use-and-then-forget decomposition.
Nothing here uses the closed-form coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import FsoLinkParams, sample_fso
from .estimation import orthonormal_pilots
from .perf import LinkStats, PowerAllocation


def cn(rng, shape, var=1.0):
    var = np.asarray(var, dtype=float)
    return np.sqrt(var / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass
class ChainInstance:
    stats: LinkStats
    fso_link: FsoLinkParams        # array-valued over APs
    alloc: PowerAllocation


def draw_channels(inst: ChainInstance, rng, T: int) -> dict:
    """True and estimated channels for T independent coherence blocks."""
    ls = inst.stats
    est = ls.est
    M, K = ls.beta.shape
    N = ls.num_antennas
    tau = est.tau_p
    g = np.sqrt(ls.beta)[None, :, :, None] * cn(rng, (T, M, K, N))
    # access pilots: Y = sqrt(tau rho) sum_k g_k phi_k^T + W, despread on phi_k*
    phi = orthonormal_pilots(tau, K)                         # (tau, K)
    yp = np.sqrt(tau * est.rho_p) * np.einsum("tmkn,sk->tmns", g, phi)
    yp = yp + cn(rng, (T, M, N, tau), est.sigma_p2[None, :, None, None])
    ytil = np.einsum("tmns,sk->tmkn", yp, phi.conj())
    ghat = est.zeta[None, :, :, None] * ytil

    I = np.stack([sample_fso(inst.fso_link.at(m), rng, T) for m in range(M)], axis=1)
    if ls.estimated_fso:
        yf = np.sqrt(tau * est.p_fso_max) * I + cn(rng, (T, M), est.phi_fso_p2[None, :])
        Ihat = est.zeta_fso[None, :] * yf
    else:
        Ihat = I.astype(complex)
    Ir = np.sqrt(ls.beta_am)[None, :] * cn(rng, (T, M))
    yr = np.sqrt(tau * est.p_rf_max) * Ir + cn(rng, (T, M), est.phi_rf_p2[None, :])
    Irhat = est.zeta_rf[None, :] * yr
    return {"g": g, "ghat": ghat, "I": I, "Ihat": Ihat, "Ir": Ir, "Irhat": Irhat}



def draw_noises(inst: ChainInstance, rng, T: int) -> dict:
    ls = inst.stats
    ch = ls.chain
    M, N = ls.num_aps, ls.num_antennas
    sh = (T, M, N)
    col = lambda v: np.broadcast_to(np.asarray(v, dtype=float), (M,))[None, :, None]
    return {
        "omega": cn(rng, sh, col(ls.sigma_u2)),
        "nd": cn(rng, sh, col(ch.nd_ap)),
        "nd_rf": cn(rng, sh, col(ch.nd_ap_rf)),
        "ups": cn(rng, sh, col(ls.phi_fso2)),
        "ups_rf": cn(rng, sh, col(ls.phi_rf2)),
        "nd_an": cn(rng, sh, col(ch.nd_an)),
        "nd_an_rf": cn(rng, sh, col(ch.nd_an_rf)),
        "cpu": cn(rng, sh, col(ls.phi_cpu2)),
        "cpu_rf": cn(rng, sh, col(ls.phi_cpu2)),
    }


def chain_output(inst: ChainInstance, ch: dict, s: np.ndarray, nz: dict | None) -> np.ndarray:
    """Combined CPU output r_k (T, K) for symbols s (T, K); ``nz`` None
    switches every noise source off."""
    ls, al = inst.stats, inst.alloc
    hw = ls.chain
    eps = np.asarray(ls.eps, dtype=float)[None, :, None]
    eps_r = np.asarray(ls.eps_rf, dtype=float)[None, :, None]
    amp = np.sqrt(ls.rho_u * np.asarray(al.eta, dtype=float))
    y = np.einsum("tmkn,tk->tmn", ch["g"], amp[None, :] * s)            # AP input
    get = (lambda key: 0.0) if nz is None else (lambda key: nz[key])
    y = y + get("omega")
    mu = al.mu[None, :, None]
    mr = al.mu_rf[None, :, None]
    x = mu * y + get("nd")                                               # RoFSO
    xr = mr * y + get("nd_rf")                                           # RoR
    yf = eps * (x * ch["I"][:, :, None] + get("ups"))                    # AN FSO input
    yr = eps_r * (xr * ch["Ir"][:, :, None] + get("ups_rf"))             # AN RF input
    rf = hw.mu_an[None, :, None] * yf + eps * (get("nd_an") + get("cpu"))
    rr = hw.mu_an_rf[None, :, None] * yr + eps_r * (get("nd_an_rf") + get("cpu_rf"))
    comb = np.conj(ch["Ihat"])[:, :, None] * rf + np.conj(ch["Irhat"])[:, :, None] * rr
    w = np.conj(ch["ghat"]) * ls.serve[None, :, :, None]                 # MRC weights
    return np.einsum("tmkn,tmn->tk", w, comb)


def oracle_terms(inst: ChainInstance, trials: int = 100_000, seed=0, chunk: int = 10_000) -> dict:
    """Monte Carlo |DS|^2, E|BU|^2, sum E|IUI|^2, E|N|^2 and SINR per UE."""
    rng = np.random.default_rng(seed)
    K = inst.stats.num_ues
    s_sum = np.zeros((K, K), dtype=complex)
    s_sq = np.zeros((K, K))
    n_sq = np.zeros(K)
    done = 0
    while done < trials:
        T = min(chunk, trials - done)
        ch = draw_channels(inst, rng, T)
        for j in range(K):
            s = np.zeros((T, K))
            s[:, j] = 1.0
            c = chain_output(inst, ch, s, None)                  # (T, K): coefficient of s_j at UE k
            s_sum[:, j] += c.sum(axis=0)
            s_sq[:, j] += (np.abs(c) ** 2).sum(axis=0)
        nz = draw_noises(inst, rng, T)
        n = chain_output(inst, ch, np.zeros((T, K)), nz)
        n_sq += (np.abs(n) ** 2).sum(axis=0)
        done += T
    mean = s_sum / trials
    msq = s_sq / trials
    idx = np.arange(K)
    ds = mean[idx, idx]
    ds2 = np.abs(ds) ** 2
    bu = msq[idx, idx] - ds2
    iui = msq.sum(axis=1) - msq[idx, idx]
    noise = n_sq / trials
    den = bu + iui + noise
    sinr = np.where(ds2 > 0, ds2 / np.where(den > 0, den, 1.0), 0.0)
    return {"ds": ds, "ds2": ds2, "bu": bu, "iui": iui, "noise": noise, "sinr": sinr, "trials": trials}


def empirical_sinr_oracle(k: int, inst: ChainInstance, trials: int = 100_000, seed=0) -> float:
    if trials < 10_000:
        raise ValueError("oracle needs at least 1e4 trials")
    return float(oracle_terms(inst, trials, seed)["sinr"][k])
