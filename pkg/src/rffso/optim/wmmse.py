"""Weighted-MMSE block coordinate descent.

The rate of UE k equals max over (u, theta) of (1 - theta e + ln theta)/ln 2,
where e is the MSE of a scalar receiver u applied to the UatF signal model.
Every block (u, theta, rho = sqrt(eta), mu, mu') then has an exact minimiser:

* u, theta in closed form;
* rho is separable given (u, theta), each coordinate clamped to the interval
  allowed by the per-AP caps and the total power budget given the others;
* (mu, mu') is a box-constrained convex quadratic, swept coordinate-wise.

So the surrogate never increases.  Two extra moves keep the blocks from
stalling: a scaled rho step that lets the gains follow their caps, and, when
the stopping rule is about to fire, per-UE and per-gain searches on the true
objective (``_rho_escape``, ``_gain_escape``); the first also revives UEs
stuck at rho = 0.  Both are accepted only on improvement, and the next
(u, theta) update turns an objective gain into a surrogate decrease.  For the energy-efficiency objective the
loop runs inside Dinkelbach iterations, which add lambda ln2 rho_u/c * sum rho^2
to the surrogate.
"""
from __future__ import annotations

import numpy as np

from ..perf import PowerAllocation
from .grid import _batch_sinr, _weighted_iui
from .problem import PowerProblem, SolverReport, full_power, interior_start

MAX_ITER = 500


class InfeasibleStart(ValueError):
    pass


def _parts(prob: PowerProblem, rho, mu, mr):
    t = prob.terms
    m2, r2, mm = mu * mu, mr * mr, mu * mr
    S = t.A @ mu + t.Ap @ mr
    BU = t.B @ m2 + t.Bp @ r2 + 2.0 * t.X @ mm
    IUI = t.C @ m2 + t.Cp @ r2 + 2.0 * t.Y @ mm           # (K, K), zero diagonal
    NZ = t.D0 + t.E @ m2 + t.Ep @ r2 + 2.0 * t.Z @ mm
    return S, BU, IUI, NZ


def total_variance(prob: PowerProblem, rho, mu, mr):
    """E|r_k|^2 at the CPU for UE k (signal included)."""
    S, BU, IUI, NZ = _parts(prob, rho, mu, mr)
    r2 = rho * rho
    return r2 * (S * S + BU) + IUI @ r2 + NZ, S


def mse_e_k(prob: PowerProblem, rho, mu, mr, u) -> np.ndarray:
    """MSE e_k = u^2 E|r_k|^2 - 2 u rho_k S_k + 1 for real receiver scalars u."""
    T, S = total_variance(prob, rho, mu, mr)
    u = np.asarray(u)
    return np.abs(u) ** 2 * T - 2.0 * np.real(u) * rho * S + 1.0


def mmse_receiver(prob: PowerProblem, rho, mu, mr) -> np.ndarray:
    T, S = total_variance(prob, rho, mu, mr)
    return rho * S / T


def surrogate(prob, rho, mu, mr, u, theta, kappa=0.0) -> float:
    e = mse_e_k(prob, rho, mu, mr, u)
    return float(np.sum(theta * e - np.log(theta)) + kappa * np.sum(rho * rho))


# ------------------------------------------------------------- blocks -----

def _rho_update(prob: PowerProblem, rho, mu, mr, u, theta, kappa):
    S, BU, IUI, NZ = _parts(prob, rho, mu, mr)
    w = theta * u * u
    a = w * (S * S + BU) + IUI.T @ w + kappa          # IUI diagonal is zero
    b = theta * u * S
    K = rho.size
    # per-AP load budgets with mu fixed: rho_u sum_j rho_j^2 beta_mj <= P/mu^2 - sigma^2
    rows, lims = [], []
    for gain, pmax in ((mu, prob.p_fso_max), (mr, prob.p_rf_max)):
        on = gain > 0
        if on.any():
            rows.append(prob.rho_u * prob.beta[on])
            lims.append(pmax / gain[on] ** 2 - prob.sigma_u2[on])
    W = np.vstack(rows) if rows else np.zeros((0, K))
    lim = np.concatenate(lims) if lims else np.zeros(0)
    used = W @ (rho * rho)
    budget = prob.eta_budget
    tot = float(np.sum(rho * rho))
    rho = rho.copy()
    for j in range(K):
        r0 = rho[j] ** 2
        ub = 1.0
        room = lim - (used - W[:, j] * r0)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(W[:, j] > 0, room / W[:, j], np.inf)
        if q.size:
            ub = min(ub, np.sqrt(max(q.min(), 0.0)))
        ub = min(ub, np.sqrt(max(budget - (tot - r0), 0.0)))
        new = min(max(b[j] / a[j], 0.0), ub) if a[j] > 0 else ub
        rho[j] = new
        used += W[:, j] * (new * new - r0)
        tot += new * new - r0
    return rho


def _batch_surrogate(prob: PowerProblem, rho, mu, mr, u, theta, kappa):
    """Surrogate (without the -ln theta part) for P candidate points (P, .)."""
    t = prob.terms
    S = mu @ t.A.T + mr @ t.Ap.T
    m2, r2, mm = mu * mu, mr * mr, mu * mr
    BU = m2 @ t.B.T + r2 @ t.Bp.T + 2.0 * mm @ t.X.T
    NZ = t.D0[None, :] + m2 @ t.E.T + r2 @ t.Ep.T + 2.0 * mm @ t.Z.T
    q = rho * rho
    T = q * (S * S + BU) + _weighted_iui(t, q, m2, r2, mm) + NZ
    return (theta * (u * u * T - 2.0 * u * rho * S)).sum(1) + kappa * q.sum(1)


def _rho_scaled_update(prob: PowerProblem, rho, mu, mr, u, theta, kappa, grid: int = 33):
    """Move each rho_j with every AP gain held at a fixed fraction of its cap.

    The caps couple rho and mu, so the plain blocks can stall where a gain
    sits on its cap; here the gains follow their caps.  A candidate is kept
    only if it lowers the surrogate.
    """
    cap_f, cap_r = prob.caps(rho * rho)
    ff = np.divide(mu, cap_f, out=np.zeros_like(mu), where=cap_f > 0)
    fr = np.divide(mr, cap_r, out=np.zeros_like(mr), where=cap_r > 0)
    rho = rho.copy()
    budget = prob.eta_budget
    cur = _batch_surrogate(prob, rho[None], mu[None], mr[None], u, theta, kappa)[0]
    for j in range(rho.size):
        ub = min(1.0, np.sqrt(max(budget - (np.sum(rho * rho) - rho[j] ** 2), 0.0)))
        cand = np.linspace(0.0, ub, grid)
        lo, hi = max(rho[j] - ub / (grid - 1), 0.0), min(rho[j] + ub / (grid - 1), ub)
        cand = np.concatenate([cand, np.linspace(lo, hi, grid)])
        R = np.repeat(rho[None], cand.size, axis=0)
        R[:, j] = cand
        ld = prob.rho_u * (R * R) @ prob.beta.T + prob.sigma_u2[None, :]
        MU = ff * np.sqrt(prob.p_fso_max / ld) * prob.eps
        MR = fr * np.sqrt(prob.p_rf_max / ld) * prob.eps_rf
        val = _batch_surrogate(prob, R, MU, MR, u, theta, kappa)
        i = int(np.argmin(val))
        if val[i] < cur:
            rho, mu, mr, cur = R[i], MU[i], MR[i], val[i]
    return rho, mu, mr


def _gain_quadratic(prob: PowerProblem, rho, u, theta):
    """Q, b of sum_k theta_k (u_k^2 T_k - 2 u_k rho_k S_k) as x^T Q x - 2 b^T x, x = (mu, mu')."""
    t = prob.terms
    M = prob.num_aps
    r2 = rho * rho
    w = theta * u * u
    a = np.hstack([t.A, t.Ap])                              # (K, 2M)
    Q = (a.T * (w * r2)) @ a
    # block-diagonal parts: sum_k w_k (rho_k^2 B_km + sum_j rho_j^2 C_kjm + E_km)
    dmu = w @ (r2[:, None] * t.B + np.einsum("kjm,j->km", t.C, r2) + t.E)
    drf = w @ (r2[:, None] * t.Bp + np.einsum("kjm,j->km", t.Cp, r2) + t.Ep)
    dx = w @ (r2[:, None] * t.X + np.einsum("kjm,j->km", t.Y, r2) + t.Z)
    idx = np.arange(M)
    Q[idx, idx] += dmu
    Q[idx + M, idx + M] += drf
    Q[idx, idx + M] += dx
    Q[idx + M, idx] += dx
    b = (theta * u * rho) @ a
    return Q, b


def _gain_sweep(Q, b, x, cap):
    """One exact coordinate sweep of the box QP (in place)."""
    r = Q @ x
    diag = np.diag(Q)
    for i in np.flatnonzero(cap > 0):
        if diag[i] <= 0:
            continue
        new = (b[i] - (r[i] - diag[i] * x[i])) / diag[i]
        new = min(max(new, 0.0), cap[i])
        d = new - x[i]
        if d != 0.0:
            r += Q[:, i] * d
            x[i] = new
    return x


def _gain_update(prob: PowerProblem, rho, mu, mr, u, theta):
    Q, b = _gain_quadratic(prob, rho, u, theta)
    cap_f, cap_r = prob.caps(rho * rho)
    cap = np.concatenate([cap_f, cap_r])
    x = np.minimum(np.concatenate([mu, mr]), cap)   # caps only shrink through rounding here
    x = _gain_sweep(Q, b, x, cap)
    M = prob.num_aps
    return x[:M], x[M:]


_ESCAPE_FRACTIONS = np.concatenate([[0.0], np.logspace(-5.0, 0.0, 41)])
# local moves around the current value, relative
_ESCAPE_STEPS = np.array([0.5, 0.7, 0.85, 0.93, 0.97, 0.99, 1.01, 1.03, 1.07, 1.15, 1.3, 1.6, 2.0])


def _gain_escape(prob: PowerProblem, rho, mu, mr):
    """Per-gain search over cap fractions and local steps on the true objective.

    The scalar receivers and the AP gains trade scale, so the blocks crawl
    along a nearly flat valley and the |delta sum-rate| rule fires before an
    AP gain has shrunk to the small fraction of its cap where the optimum
    sits.  Moving one gain shifts the signal amplitude linearly and every
    denominator by a quadratic in that gain, so each candidate costs O(K).
    Returns (mu, mu', gain in nats).
    """
    t = prob.terms
    eta = rho * rho
    cap_f, cap_r = prob.caps(eta)
    S, BU, IUI, NZ = _parts(prob, rho, mu, mr)
    den = eta * BU + IUI @ eta + NZ
    # per (k, m) coefficients of mu_m^2, mu'_m^2 and mu_m mu'_m in the denominator
    sq_f = eta[:, None] * t.B + np.einsum("kjm,j->km", t.C, eta) + t.E
    sq_r = eta[:, None] * t.Bp + np.einsum("kjm,j->km", t.Cp, eta) + t.Ep
    cross = 2.0 * (eta[:, None] * t.X + np.einsum("kjm,j->km", t.Y, eta) + t.Z)

    def value(S_, den_):
        num = eta * S_ * S_
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(num > 0, num / den_, 0.0)
        return np.log1p(s).sum(-1)

    mu, mr = mu.copy(), mr.copy()
    start = cur = float(value(S, den))
    for branch, cap, amp, sq in ((0, cap_f, t.A, sq_f), (1, cap_r, t.Ap, sq_r)):
        x_all, o_all = (mu, mr) if branch == 0 else (mr, mu)
        for m in np.flatnonzero(cap > 0):
            x, o = x_all[m], o_all[m]
            cand = np.concatenate([_ESCAPE_FRACTIONS * cap[m], np.minimum(_ESCAPE_STEPS * x, cap[m])])
            dx = (cand - x)[:, None]
            dS = amp[:, m] * dx
            dden = sq[:, m] * (cand * cand - x * x)[:, None] + cross[:, m] * o * dx
            val = value(S + dS, den + dden)
            i = int(np.argmax(val))
            if val[i] > cur + 1e-12 * abs(cur):
                S, den, cur = S + dS[i], den + dden[i], float(val[i])
                x_all[m] = cand[i]
    return mu, mr, cur - start


def _rho_escape(prob: PowerProblem, rho, mu, mr, kappa, grid: int = 41):
    """Per-UE search of rho on the true objective with gains at fixed cap fractions.

    rho_k = 0 is a fixed point of the blocks (u_k = 0 then keeps rho_k at 0),
    so a UE switched off early is never switched back on by them.  The
    objective is sum ln(1+SINR) - kappa sum rho^2.  Returns (rho, mu, mu',
    gain in nats).
    """
    cap_f, cap_r = prob.caps(rho * rho)
    ff = np.divide(mu, cap_f, out=np.zeros_like(mu), where=cap_f > 0)
    fr = np.divide(mr, cap_r, out=np.zeros_like(mr), where=cap_r > 0)
    budget = prob.eta_budget

    def value(R, MU, MR):
        with np.errstate(divide="ignore", invalid="ignore"):
            s = _batch_sinr(prob, R * R, MU, MR)
        return np.log1p(np.nan_to_num(s, nan=0.0)).sum(1) - kappa * (R * R).sum(1)

    rho, mu, mr = rho.copy(), mu.copy(), mr.copy()
    start = cur = value(rho[None], mu[None], mr[None])[0]
    for j in range(rho.size):
        ub = min(1.0, np.sqrt(max(budget - (np.sum(rho * rho) - rho[j] ** 2), 0.0)))
        cand = np.concatenate([np.linspace(0.0, ub, grid), np.minimum(_ESCAPE_STEPS * rho[j], ub)])
        R = np.repeat(rho[None], cand.size, axis=0)
        R[:, j] = cand
        ld = prob.rho_u * (R * R) @ prob.beta.T + prob.sigma_u2[None, :]
        MU = ff * np.sqrt(prob.p_fso_max / ld) * prob.eps
        MR = fr * np.sqrt(prob.p_rf_max / ld) * prob.eps_rf
        val = value(R, MU, MR)
        i = int(np.argmax(val))
        if val[i] > cur + 1e-12 * abs(cur):
            rho, mu, mr, cur = R[i], MU[i], MR[i], val[i]
    return rho, mu, mr, cur - start


# -------------------------------------------------------------- driver -----

def _start(prob: PowerProblem, init):
    if init is None or (isinstance(init, str) and init == "full"):
        return full_power(prob)
    if isinstance(init, str) and init == "interior":
        return interior_start(prob)
    if isinstance(init, PowerAllocation):
        if not prob.feasible(init, 1e-9):
            raise InfeasibleStart(f"initial point violates constraints by {prob.violation(init):.3e}")
        return init.copy()
    raise ValueError(f"unknown init {init!r}")


def wmmse_solve(prob: PowerProblem, init=None, eps_stop: float = 1e-3, max_iter: int = MAX_ITER,
                objective: str = "ee", max_outer: int = 50, record_blocks: bool = False,
                scaled: bool = True, escape: bool = True):
    """Run the block updates from ``init`` ("full", "interior" or an allocation).

    objective="sum_rate" maximises sum log2(1+SINR) under the constraints;
    objective="ee" maximises the energy efficiency with P_net in the
    denominator (Dinkelbach outer loop).  Returns (allocation, report).
    """
    if eps_stop <= 0:
        raise ValueError("eps_stop must be positive")
    if objective not in ("ee", "sum_rate"):
        raise ValueError(f"unknown objective {objective!r}")
    prob.check()
    a0 = _start(prob, init)
    rho = np.sqrt(np.asarray(a0.eta, dtype=float))
    mu, mr = a0.mu.astype(float).copy(), a0.mu_rf.astype(float).copy()

    report = SolverReport(0)
    it = 0
    reason = "converged"
    lam = prob.ee(a0) if objective == "ee" else 0.0
    outer = 0
    while True:
        kappa = lam * np.log(2.0) * prob.rho_u / prob.prelog_bw if objective == "ee" else 0.0
        prev = prob.sum_rate(PowerAllocation(rho * rho, mu, mr))
        inner = 0
        while True:
            u = mmse_receiver(prob, rho, mu, mr)
            e = mse_e_k(prob, rho, mu, mr, u)
            theta = 1.0 / e
            blocks = [surrogate(prob, rho, mu, mr, u, theta, kappa)] if record_blocks else None
            rho = _rho_update(prob, rho, mu, mr, u, theta, kappa)
            if record_blocks:
                blocks.append(surrogate(prob, rho, mu, mr, u, theta, kappa))
            if scaled:
                rho, mu, mr = _rho_scaled_update(prob, rho, mu, mr, u, theta, kappa)
                if record_blocks:
                    blocks.append(surrogate(prob, rho, mu, mr, u, theta, kappa))
            mu, mr = _gain_update(prob, rho, mu, mr, u, theta)
            it += 1
            inner += 1
            alloc = PowerAllocation(rho * rho, mu, mr)
            sr = prob.sum_rate(alloc)
            row = {"iteration": it, "phase": outer,
                   "surrogate": surrogate(prob, rho, mu, mr, u, theta, kappa),
                   "sum_rate": sr, "ee": prob.ee(alloc)}
            if record_blocks:
                blocks.append(row["surrogate"])
                row["blocks"] = blocks
            report.trace.append(row)
            if abs(sr - prev) <= eps_stop:
                if not escape:
                    break
                rho, mu, mr, g_rho = _rho_escape(prob, rho, mu, mr, kappa)
                mu, mr, gain = _gain_escape(prob, rho, mu, mr)
                if (gain + g_rho) / np.log(2.0) <= eps_stop:
                    break
                sr = prob.sum_rate(PowerAllocation(rho * rho, mu, mr))
            prev = sr
            if inner >= max_iter:
                reason = "max_iter"
                break
        if objective != "ee" or reason != "converged":
            break
        new_lam = prob.ee(PowerAllocation(rho * rho, mu, mr))
        outer += 1
        if new_lam - lam <= 1e-7 * abs(lam) or outer >= max_outer:
            break
        lam = new_lam

    out = PowerAllocation(rho * rho, mu, mr)
    report.iterations = it
    report.reason = reason
    report.allocation = out
    return out, report
