"""High-SINR power control as a sequence of geometric programs.

With log(1 + SINR) ~ log SINR the objective becomes a product of SINRs.  Each
SINR_k^{-1} = den_k / (eta_k S_k^2) has a posynomial numerator but the signal
amplitude S_k is itself a posynomial, so S_k is condensed into its AM-GM
monomial lower bound at the current point.  The condensed problem is a GP;
in log variables z = log(eta, mu, mu') every function is a log-sum-exp and the
problem is convex.  It is solved by a log-barrier Newton method.  Repeating
the condensation at the new point never decreases the high-SINR objective.

By default the energy-efficient variant is solved: Dinkelbach weights the
transmit power term by the current high-SINR EE, exactly as for W-MMSE.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..perf import PowerAllocation
from .problem import PowerProblem, SolverReport, full_power


FLOOR = 1e-8


class HighSinrError(ValueError):
    pass


@dataclass
class Lse:
    """log sum_i exp(F_i . z + c_i)."""
    F: np.ndarray
    c: np.ndarray

    def value(self, z):
        return float(logsumexp(self.F @ z + self.c))

    def derivs(self, z):
        s = self.F @ z + self.c
        v = logsumexp(s)
        p = np.exp(s - v)
        g = self.F.T @ p
        Fp = self.F * np.sqrt(p)[:, None]
        H = Fp.T @ Fp - np.outer(g, g)
        return float(v), g, H


class LseStack:
    """Several Lse functions evaluated together with segment reductions."""

    def __init__(self, items: list):
        self.size = len(items)
        if not items:
            return
        self.F = np.vstack([it.F for it in items])
        self.c = np.concatenate([it.c for it in items])
        lens = np.array([it.c.size for it in items])
        if np.any(lens == 0):
            raise ValueError("empty log-sum-exp term")
        self.starts = np.concatenate([[0], np.cumsum(lens)[:-1]])
        self.group = np.repeat(np.arange(self.size), lens)

    def _soft(self, z):
        s = self.F @ z + self.c
        mx = np.maximum.reduceat(s, self.starts)
        e = np.exp(s - mx[self.group])
        tot = np.add.reduceat(e, self.starts)
        return mx + np.log(tot), e / tot[self.group]

    def values(self, z):
        if self.size == 0:
            return np.zeros(0)
        return self._soft(z)[0]

    def derivs(self, z, weights=None):
        """Values, per-function gradients (G, n) and sum_g w_g Hess_g."""
        v, p = self._soft(z)
        grads = np.add.reduceat(self.F * p[:, None], self.starts)
        w = np.ones(self.size) if weights is None else weights
        Fp = self.F * np.sqrt(w[self.group] * p)[:, None]
        H = Fp.T @ Fp - (grads.T * w) @ grads
        return v, grads, H


class _Vars:
    def __init__(self, prob: PowerProblem):
        t = prob.terms
        K, M = prob.num_ues, prob.num_aps
        used_f = (np.abs(t.A).sum(0) > 0) & prob.eps
        used_r = (np.abs(t.Ap).sum(0) > 0) & prob.eps_rf
        self.K, self.M = K, M
        self.fso = np.flatnonzero(used_f)
        self.rf = np.flatnonzero(used_r)
        self.n = K + self.fso.size + self.rf.size
        self.ix_f = np.full(M, -1)
        self.ix_f[self.fso] = K + np.arange(self.fso.size)
        self.ix_r = np.full(M, -1)
        self.ix_r[self.rf] = K + self.fso.size + np.arange(self.rf.size)

    def pack(self, a: PowerAllocation):
        return np.log(np.concatenate([a.eta, a.mu[self.fso], a.mu_rf[self.rf]]))

    def unpack(self, z):
        x = np.exp(z)
        mu = np.zeros(self.M)
        mr = np.zeros(self.M)
        mu[self.fso] = x[self.K:self.K + self.fso.size]
        mr[self.rf] = x[self.K + self.fso.size:]
        return PowerAllocation(x[:self.K].copy(), mu, mr)


def _rows(n, idx_lists, coefs):
    """Exponent rows from lists of (index, power) pairs."""
    F = np.zeros((len(coefs), n))
    for r, pairs in enumerate(idx_lists):
        for i, p in pairs:
            F[r, i] += p
    return F


def denominators(prob: PowerProblem, V: _Vars) -> list:
    """log of den_k = eta_k BU_k + sum_j eta_j IUI_kj + NZ_k as an Lse for each k."""
    t = prob.terms
    out = []
    for k in range(V.K):
        pairs, coefs = [], []
        for j in range(V.K):
            cf = t.B[k] if j == k else t.C[k, j]
            cr = t.Bp[k] if j == k else t.Cp[k, j]
            cx = t.X[k] if j == k else t.Y[k, j]
            for m in range(V.M):
                f, r = V.ix_f[m], V.ix_r[m]
                if f >= 0 and cf[m] > 0:
                    pairs.append([(j, 1), (f, 2)]); coefs.append(cf[m])
                if r >= 0 and cr[m] > 0:
                    pairs.append([(j, 1), (r, 2)]); coefs.append(cr[m])
                if f >= 0 and r >= 0 and cx[m] > 0:
                    pairs.append([(j, 1), (f, 1), (r, 1)]); coefs.append(2.0 * cx[m])
        for m in range(V.M):
            f, r = V.ix_f[m], V.ix_r[m]
            if f >= 0 and t.E[k, m] > 0:
                pairs.append([(f, 2)]); coefs.append(t.E[k, m])
            if r >= 0 and t.Ep[k, m] > 0:
                pairs.append([(r, 2)]); coefs.append(t.Ep[k, m])
            if f >= 0 and r >= 0 and t.Z[k, m] > 0:
                pairs.append([(f, 1), (r, 1)]); coefs.append(2.0 * t.Z[k, m])
        if t.D0[k] > 0:
            pairs.append([]); coefs.append(t.D0[k])
        out.append(Lse(_rows(V.n, pairs, coefs), np.log(np.asarray(coefs, dtype=float))))
    return out


def constraints(prob: PowerProblem, V: _Vars) -> tuple:
    """(linear rows G z <= h, list of Lse <= 0)."""
    K = V.K
    # eta_k <= 1, and every variable stays above FLOOR times its largest value
    # so a link the optimiser switches off keeps finite log coordinates
    top = np.zeros(V.n)
    top[K:K + V.fso.size] = 0.5 * np.log(prob.p_fso_max / prob.sigma_u2[V.fso])
    top[K + V.fso.size:] = 0.5 * np.log(prob.p_rf_max / prob.sigma_u2[V.rf])
    G = np.vstack([np.eye(V.n)[:K], -np.eye(V.n)])
    h = np.concatenate([np.zeros(K), -(top + np.log(FLOOR))])
    lses = []
    for grp, ix, pmax in ((V.fso, V.ix_f, prob.p_fso_max), (V.rf, V.ix_r, prob.p_rf_max)):
        for m in grp:
            pos = prob.beta[m] > 0
            F = np.zeros((int(pos.sum()) + 1, V.n))
            F[:, ix[m]] = 2.0
            F[np.arange(int(pos.sum())), np.flatnonzero(pos)] += 1.0
            c = np.log(np.concatenate([prob.rho_u * prob.beta[m][pos], [prob.sigma_u2[m]]]) / pmax)
            lses.append(Lse(F, c))
    F = np.zeros((K, V.n))
    F[np.arange(K), np.arange(K)] = 1.0
    lses.append(Lse(F, np.full(K, np.log(prob.rho_u / (prob.p_total - prob.p_fixed)))))
    return G, h, lses


def condensed_signal(prob: PowerProblem, V: _Vars, a0: PowerAllocation):
    """Monomial lower bound of S_k at a0: log S_k >= l_k . z + l0_k."""
    t = prob.terms
    L = np.zeros((V.K, V.n))
    L0 = np.zeros(V.K)
    for k in range(V.K):
        parts = []
        for m in V.fso:
            parts.append((V.ix_f[m], t.A[k, m], a0.mu[m]))
        for m in V.rf:
            parts.append((V.ix_r[m], t.Ap[k, m], a0.mu_rf[m]))
        s = sum(c * x for _, c, x in parts)
        if s <= 0:
            raise HighSinrError(f"UE {k} has no signal term; the high-SINR objective is undefined")
        for i, c, x in parts:
            if c * x <= 0:
                continue
            al = c * x / s
            L[k, i] += al
            L0[k] += al * (np.log(c) - np.log(al))
    return L, L0


class _Subproblem:
    """min sum_k [lse_den_k - z_eta_k - 2 (L_k z + L0_k)] + kappa sum exp(z_eta)."""

    def __init__(self, dens, L, L0, K, kappa, G, h, lses):
        self.dens = dens if isinstance(dens, LseStack) else LseStack(dens)
        self.L, self.L0, self.K, self.kappa = L, L0, K, kappa
        self.G, self.h = G, h
        self.lses = lses if isinstance(lses, LseStack) else LseStack(lses)
        self.n = L.shape[1]
        self.lin = -2.0 * L.sum(axis=0)
        self.lin[:K] -= 1.0
        self.const = -2.0 * L0.sum()

    def objective(self, z, derivs=False):
        v = self.lin @ z + self.const
        if not derivs:
            v += float(self.dens.values(z).sum())
            v += self.kappa * float(np.sum(np.exp(z[:self.K])))
            return v
        dv, dg, H = self.dens.derivs(z)
        v += float(dv.sum())
        g = self.lin + dg.sum(axis=0)
        e = np.exp(z[:self.K])
        v += self.kappa * e.sum()
        g[:self.K] += self.kappa * e
        H[np.arange(self.K), np.arange(self.K)] += self.kappa * e
        return v, g, H

    def cons_values(self, z):
        return np.concatenate([self.G @ z - self.h, self.lses.values(z)])

    def barrier(self, z, t, derivs=False):
        gv = self.cons_values(z)
        if np.any(gv >= 0):
            return np.inf if not derivs else (np.inf, None, None)
        if not derivs:
            return t * self.objective(z) - np.sum(np.log(-gv))
        f, g, H = self.objective(z, True)
        val = t * f - np.sum(np.log(-gv))
        grad = t * g
        hess = t * H
        nl = self.G.shape[0]
        gl = gv[:nl]
        grad += self.G.T @ (1.0 / -gl)
        hess += (self.G.T / gl ** 2) @ self.G
        if self.lses.size:
            gi = gv[nl:]
            _, cg, cH = self.lses.derivs(z, 1.0 / -gi)
            grad += cg.T @ (1.0 / -gi)
            hess += cH + (cg.T / gi ** 2) @ cg
        return val, grad, hess

    def all_cons_grads(self, z):
        if not self.lses.size:
            return self.G.copy()
        return np.vstack([self.G, self.lses.derivs(z)[1]])


def _newton(sp: _Subproblem, z, t, tol=1e-9, max_steps=100):
    for _ in range(max_steps):
        val, g, H = sp.barrier(z, t, True)
        try:
            dz = -np.linalg.solve(H + 1e-12 * np.eye(sp.n) * max(1.0, np.abs(np.diag(H)).max()), g)
        except np.linalg.LinAlgError:
            dz = -g
        dec2 = -g @ dz
        if dec2 / 2.0 <= tol:
            break
        # largest step keeping the linear constraints strict
        gl = sp.G @ dz
        slack = sp.h - sp.G @ z
        pos = gl > 0
        s = min(1.0, 0.99 * float(np.min(slack[pos] / gl[pos]))) if pos.any() else 1.0
        slop = 1e-13 * max(1.0, abs(val))
        while s > 1e-12:
            zn = z + s * dz
            vn = sp.barrier(zn, t)
            if np.isfinite(vn) and vn <= val + 0.25 * s * (g @ dz) + slop:
                break
            s *= 0.5
        else:
            break
        z = zn
    return z


def solve_subproblem(sp: _Subproblem, z0, t0=1.0, mu=20.0, slack_tol=1e-7):
    """Barrier path from a strictly feasible z0; returns (z, kkt_residual).

    The path stops once every complementary-slackness product 1/t is below
    ``slack_tol``; the residual combines that with the scaled stationarity
    error of the Lagrangian at the barrier multipliers.
    """
    z, t = z0.copy(), t0
    while True:
        z = _newton(sp, z, t)
        if 1.0 / t <= slack_tol:
            break
        t *= mu
    gv = sp.cons_values(z)
    lam = 1.0 / (t * -gv)
    _, g, _ = sp.objective(z, True)
    r_stat = g + sp.all_cons_grads(z).T @ lam
    scale = max(1.0, np.abs(g).max())
    kkt = max(float(np.abs(r_stat).max() / scale), float(np.max(lam * np.abs(gv))))
    return z, kkt, t


def _shrink(prob: PowerProblem, a: PowerAllocation, f=1e-4) -> PowerAllocation:
    """Move a feasible point strictly inside the constraints."""
    eta = a.eta * (1.0 - f)
    cap_f, cap_r = prob.caps(eta)
    return PowerAllocation(eta, np.minimum(a.mu, cap_f) * (1.0 - f), np.minimum(a.mu_rf, cap_r) * (1.0 - f))


def gp_solve(prob: PowerProblem, init=None, objective: str = "ee", max_sca: int = 100,
             rel_tol: float = 1e-5):
    """High-SINR solution; objective "ee" (P_net denominator) or "product"
    (maximise prod SINR_k, P_0 denominator).  Returns (allocation, report)."""
    if objective not in ("ee", "product"):
        raise ValueError(f"unknown objective {objective!r}")
    prob.check()
    a = init.copy() if isinstance(init, PowerAllocation) else full_power(prob)
    if np.any(prob.terms.A.sum(1) + prob.terms.Ap.sum(1) <= 0):
        raise HighSinrError("every UE needs a strictly positive signal term")
    V = _Vars(prob)
    a = _shrink(prob, a)
    dens = LseStack(denominators(prob, V))
    G, h, lses = constraints(prob, V)
    lses = LseStack(lses)
    score = prob.ee_high_sinr if objective == "ee" else (lambda x: float(np.sum(np.log2(prob.sinr(x)))))
    report = SolverReport(0)
    cur = score(a)
    reason = "max_iter"
    kkt = float("nan")
    t_start = 1.0
    for it in range(1, max_sca + 1):
        lam = max(prob.ee_high_sinr(a), 0.0) if objective == "ee" else 0.0
        kappa = lam * np.log(2.0) * prob.rho_u / prob.prelog_bw
        L, L0 = condensed_signal(prob, V, a)
        sp = _Subproblem(dens, L, L0, V.K, kappa, G, h, lses)
        z, kkt, t_end = solve_subproblem(sp, V.pack(a), t0=t_start)
        t_start = max(1.0, t_end * 1e-4)
        cand = V.unpack(z)
        new = score(cand)
        report.trace.append({"iteration": it, "phase": 0, "surrogate": sp.objective(z),
                             "sum_rate": prob.sum_rate(cand), "ee": prob.ee(cand)})
        if new < cur:      # numerical noise only; keep the better point
            reason = "converged"
            break
        a = cand
        done = new - cur <= rel_tol * max(abs(cur), 1e-12)
        cur = new
        if done:
            reason = "converged"
            break
    report.iterations = len(report.trace)
    report.reason = reason
    report.allocation = a
    report.kkt_residual = kkt
    return a, report
