"""Closed-form uplink SINR under MRC with use-and-then-forget bounding,
achievable rate, network power and energy efficiency.

SINR of UE k for an allocation (eta, mu, mu'):

    eta_k S_k^2 / (eta_k BU_k + sum_{j != k} eta_j IUI_kj + NZ_k)

with S_k = sum_m mu_m A_km + mu'_m A'_km and every other term a quadratic
form in (mu_m, mu'_m) that only couples the two branches of the same AP.
Two term conventions are built:

* ``exact``   - moments worked out for N antennas with the true FSO fourth
                moment and the FSO/RF cross terms of a dual-fronthaul AP.
* ``printed`` - single-antenna bookkeeping with Gaussian fourth moments for
                the FSO estimate, no cross terms and the noise term built
                from the per-branch covariances Omega^2, Omega'^2.

The Monte Carlo chain in ``rffso.mc_oracle`` is the referee between them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import PowerModel
from .estimation import EstimationStatistics
from .hardware import ChainGains


@dataclass
class LinkStats:
    """Everything the closed form needs for one network realisation."""
    beta: np.ndarray           # (M, K) access large-scale gains
    beta_am: np.ndarray        # (M,) RF fronthaul large-scale gains
    fso_m1: np.ndarray         # (M,) E[I_FSO]
    fso_m2: np.ndarray         # (M,) E[I_FSO^2]
    fso_m4: np.ndarray         # (M,) E[I_FSO^4]
    est: EstimationStatistics
    chain: ChainGains
    eps: np.ndarray            # (M,) FSO branch on/off
    eps_rf: np.ndarray         # (M,) RF branch on/off
    serve: np.ndarray          # (M, K) bool
    sigma_u2: np.ndarray       # (M,) AP receiver noise
    phi_fso2: np.ndarray       # (M,) FSO receiver noise at the AN
    phi_rf2: np.ndarray        # (M,) RF fronthaul receiver noise at the AN
    phi_cpu2: float
    rho_u: float
    num_antennas: int
    estimated_fso: bool = False

    @property
    def num_aps(self) -> int:
        return self.beta.shape[0]

    @property
    def num_ues(self) -> int:
        return self.beta.shape[1]


@dataclass
class SinrTerms:
    """Coefficient arrays, UE-major: A[k, m], C[k, j, m] (C[k, k, :] = 0)."""
    A: np.ndarray
    Ap: np.ndarray
    B: np.ndarray
    Bp: np.ndarray
    X: np.ndarray
    C: np.ndarray
    Cp: np.ndarray
    Y: np.ndarray
    E: np.ndarray
    Ep: np.ndarray
    Z: np.ndarray
    D0: np.ndarray
    convention: str = "exact"

    @property
    def num_ues(self) -> int:
        return self.A.shape[0]

    @property
    def num_aps(self) -> int:
        return self.A.shape[1]

    def subset(self, ues=None, aps=None) -> "SinrTerms":
        ues = slice(None) if ues is None else np.asarray(ues)
        aps = slice(None) if aps is None else np.asarray(aps)
        two = lambda x: x[ues][:, aps]
        three = lambda x: x[ues][:, ues][:, :, aps]
        return SinrTerms(two(self.A), two(self.Ap), two(self.B), two(self.Bp), two(self.X),
                         three(self.C), three(self.Cp), three(self.Y),
                         two(self.E), two(self.Ep), two(self.Z), self.D0[ues], self.convention)


def branch_moments(ls: LinkStats):
    """(m0, m1, m2) per branch: E|I_hat|^2, E[I_hat* I], E[|I_hat|^2 |I|^2]."""
    est = ls.est
    if ls.estimated_fso:
        zf = est.zeta_fso
        m0f = est.gamma_fso
        m1f = est.gamma_fso
        m2f = zf ** 2 * (est.tau_p * est.p_fso_max * ls.fso_m4 + est.phi_fso_p2 * ls.fso_m2)
    else:
        m0f = m1f = ls.fso_m2
        m2f = ls.fso_m4
    gr = est.gamma_rf
    return (m0f, m1f, m2f), (gr, gr, gr ** 2 + gr * ls.beta_am)


def sinr_terms(ls: LinkStats, convention: str = "exact") -> SinrTerms:
    """All closed-form coefficients for every UE."""
    beta, gam, ch = ls.beta, ls.est.gamma, ls.chain
    M, K = beta.shape
    mask = ls.serve.astype(float)
    ef = np.asarray(ls.eps, dtype=float)
    er = np.asarray(ls.eps_rf, dtype=float)
    rho = ls.rho_u
    gk = (gam * mask).T                  # (K, M) gamma_mk on served pairs
    bk = beta.T                          # (K, M)
    (m0f, m1f, m2f), (m0r, m1r, m2r) = branch_moments(ls)
    ua, ur = ch.mu_an, ch.mu_an_rf

    if convention == "exact":
        n = float(ls.num_antennas)
        tot2 = n * n * gk ** 2 + n * gk * bk      # E|g_hat^H g|^2
        A = np.sqrt(rho) * ef * ua * m1f * n * gk
        Ap = np.sqrt(rho) * er * ur * m1r * n * gk
        B = rho * ef * ua ** 2 * (m2f * tot2 - m1f ** 2 * n * n * gk ** 2)
        Bp = rho * er * ur ** 2 * (m2r * tot2 - m1r ** 2 * n * n * gk ** 2)
        X = rho * ef * er * ua * ur * m1f * m1r * n * gk * bk
        cross = n * gk[:, None, :] * bk[None, :, :]        # (K, J, M): N gamma_mk beta_mj
        C = rho * (ef * ua ** 2 * m2f)[None, None, :] * cross
        Cp = rho * (er * ur ** 2 * m2r)[None, None, :] * cross
        Y = rho * (ef * er * ua * ur * m1f * m1r)[None, None, :] * cross
        E = ef * ua ** 2 * m2f * ls.sigma_u2 * n * gk
        Ep = er * ur ** 2 * m2r * ls.sigma_u2 * n * gk
        Z = ef * er * ua * ur * m1f * m1r * ls.sigma_u2 * n * gk
        per_ap = (ef * (m2f * ua ** 2 * ch.nd_ap + m0f * (ua ** 2 * ls.phi_fso2 + ch.nd_an + ls.phi_cpu2))
                  + er * (m2r * ur ** 2 * ch.nd_ap_rf + m0r * (ur ** 2 * ls.phi_rf2 + ch.nd_an_rf + ls.phi_cpu2)))
        D0 = (n * gk * per_ap).sum(axis=1)
    elif convention == "printed":
        gf = m1f                                   # gamma_FSO (= Gamma^2 when perfectly known)
        gr = m1r
        zeta, sig_p = ls.est.zeta, ls.est.sigma_p2
        with np.errstate(divide="ignore", invalid="ignore"):
            lead = np.where(mask.T > 0, ((zeta ** 2 * sig_p[:, None]).T + gk ** 2 / bk), 0.0)
        A = np.sqrt(rho) * ef * ua * gf * gk
        Ap = np.sqrt(rho) * er * ur * gr * gk
        B = rho * ef * ua ** 2 * gf ** 2 * (gk + 2.0 * bk) * gk
        Bp = rho * er * ur ** 2 * gr * (gr * bk + ls.beta_am * gk + ls.beta_am * bk) * gk
        X = np.zeros_like(A)
        C = 2.0 * rho * (ef * ua ** 2 * gf ** 2)[None, None, :] * lead[:, None, :] * bk[None, :, :]
        Cp = rho * (er * ur ** 2 * gr * (gr + ls.beta_am))[None, None, :] * lead[:, None, :] * bk[None, :, :]
        Y = np.zeros_like(C)
        E = gk * ef * gf * ua ** 2 * ls.fso_m2 * ls.sigma_u2
        Ep = gk * er * gr * ur ** 2 * ls.beta_am * ls.sigma_u2
        Z = np.zeros_like(A)
        rest = (ef * gf * (ua ** 2 * ls.fso_m2 * ch.nd_ap + ua ** 2 * ls.phi_fso2 + ch.nd_an + ls.phi_cpu2)
                + er * gr * (ur ** 2 * ls.beta_am * ch.nd_ap_rf + ur ** 2 * ls.phi_rf2 + ch.nd_an_rf + ls.phi_cpu2))
        D0 = (gk * rest).sum(axis=1)
    else:
        raise ValueError(f"unknown convention {convention!r}")

    idx = np.arange(K)
    for arr in (C, Cp, Y):
        arr[idx, idx, :] = 0.0
    return SinrTerms(A, Ap, B, Bp, X, C, Cp, Y, E, Ep, Z, D0, convention)


# -------------------------------------------------------------- SINR -----

@dataclass
class PowerAllocation:
    eta: np.ndarray
    mu: np.ndarray
    mu_rf: np.ndarray

    def copy(self) -> "PowerAllocation":
        return PowerAllocation(self.eta.copy(), self.mu.copy(), self.mu_rf.copy())


def term_parts(terms: SinrTerms, alloc: PowerAllocation):
    """(S, BU, IUI, NZ): signal amplitude sum, and the three quadratic forms
    of the denominator before the eta weighting.  IUI is (K, K)."""
    mu, mr = alloc.mu, alloc.mu_rf
    m2, r2, mr_ = mu * mu, mr * mr, mu * mr
    S = terms.A @ mu + terms.Ap @ mr
    BU = terms.B @ m2 + terms.Bp @ r2 + 2.0 * terms.X @ mr_
    IUI = terms.C @ m2 + terms.Cp @ r2 + 2.0 * terms.Y @ mr_
    NZ = terms.D0 + terms.E @ m2 + terms.Ep @ r2 + 2.0 * terms.Z @ mr_
    return S, BU, IUI, NZ


def decompose(terms: SinrTerms, alloc: PowerAllocation):
    """Closed-form (|DS|^2, E|BU|^2, sum E|IUI|^2, E|N|^2) per UE."""
    eta = np.asarray(alloc.eta, dtype=float)
    S, BU, IUI, NZ = term_parts(terms, alloc)
    return eta * S ** 2, eta * BU, IUI @ eta, NZ


def sinr_all(terms: SinrTerms, alloc: PowerAllocation) -> np.ndarray:
    ds2, bu, iui, nz = decompose(terms, alloc)
    den = bu + iui + nz
    out = np.zeros_like(ds2)
    pos = ds2 > 0
    assert np.all(den[pos] > 0), "zero denominator with a nonzero signal"
    out[pos] = ds2[pos] / den[pos]
    return out


def sinr_closed_form(k: int, terms: SinrTerms, alloc: PowerAllocation) -> float:
    return float(sinr_all(terms, alloc)[k])


def rate(sinr):
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise ValueError("SINR must be nonnegative")
    return np.log2(1.0 + sinr)


# ------------------------------------------------------------- power -----

def fixed_power(model: PowerModel, num_aps: int, num_ans: int, links_per_ap=None) -> float:
    """Circuit, fronthaul and backhaul power.  ``links_per_ap`` counts the
    active fronthaul links of each AP (default one each)."""
    if links_per_ap is None:
        fh = num_aps * model.p_fronthaul
    else:
        fh = model.p_fronthaul * float(np.sum(links_per_ap))
    return num_aps * model.p_circuit_ap + fh + num_ans * (model.p_circuit_an + model.p_backhaul)


def net_power(eta, model: PowerModel, num_aps: int, num_ans: int, links_per_ap=None) -> float:
    return model.rho_u * float(np.sum(eta)) + fixed_power(model, num_aps, num_ans, links_per_ap)


def energy_efficiency(rates, p_net: float, bw0: float, tau: int, tau_p: int) -> float:
    return (tau - tau_p) / tau * bw0 * float(np.sum(rates)) / p_net


def mu_caps(eta, beta, sigma_u2, rho_u: float, p_max: float) -> np.ndarray:
    """Largest AP gains meeting mu^2 (rho sum eta beta + sigma^2) <= P_max."""
    load = rho_u * (np.asarray(beta) @ np.asarray(eta, dtype=float)) + sigma_u2
    return np.sqrt(p_max / load)
