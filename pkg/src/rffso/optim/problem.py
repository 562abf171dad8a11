"""Power-control problem shared by the solvers: constraint caps, feasibility,
objectives and the full-power baseline."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import PowerModel
from ..perf import (LinkStats, PowerAllocation, SinrTerms, energy_efficiency, fixed_power,
                    rate, sinr_all)

FEAS_TOL = 1e-9


class InfeasibleProblem(ValueError):
    """P_0 cannot cover the fixed circuit, fronthaul and backhaul power."""


@dataclass
class SolverReport:
    iterations: int
    trace: list = field(default_factory=list)     # dict rows: iteration, phase, surrogate, sum_rate, ee
    reason: str = "converged"
    allocation: PowerAllocation | None = None
    kkt_residual: float = float("nan")

    @property
    def converged(self) -> bool:
        return self.reason == "converged"

    def rows(self):
        return [(r["iteration"], r["sum_rate"], r["ee"]) for r in self.trace]


@dataclass
class PowerProblem:
    terms: SinrTerms
    beta: np.ndarray          # (M, K) every UE loads every AP
    sigma_u2: np.ndarray      # (M,)
    eps: np.ndarray           # (M,) bool
    eps_rf: np.ndarray        # (M,) bool
    rho_u: float
    p_fso_max: float
    p_rf_max: float
    p_total: float
    p_fixed: float
    prelog_bw: float          # (tau - tau_p)/tau * BW_0

    @classmethod
    def from_stats(cls, ls: LinkStats, terms: SinrTerms, model: PowerModel, num_ans: int,
                   bw0: float, tau: int, tau_p: int) -> "PowerProblem":
        eps = np.asarray(ls.eps).astype(bool)
        eps_rf = np.asarray(ls.eps_rf).astype(bool)
        links = eps.astype(int) + eps_rf.astype(int)
        p_fixed = fixed_power(model, ls.num_aps, num_ans, links)
        return cls(terms, np.asarray(ls.beta, dtype=float), np.broadcast_to(ls.sigma_u2, (ls.num_aps,)).astype(float),
                   eps, eps_rf, model.rho_u, model.p_fso_max, model.p_rf_max, model.p_total, p_fixed,
                   (tau - tau_p) / tau * bw0)

    @property
    def num_ues(self) -> int:
        return self.beta.shape[1]

    @property
    def num_aps(self) -> int:
        return self.beta.shape[0]

    @property
    def eta_budget(self) -> float:
        """Largest sum of eta allowed by P_net <= P_0."""
        return (self.p_total - self.p_fixed) / self.rho_u

    def check(self) -> None:
        if self.p_total <= self.p_fixed:
            raise InfeasibleProblem(f"P_0 = {self.p_total} W does not exceed the fixed power {self.p_fixed:.3f} W")

    # ---------------------------------------------------------- caps -----
    def load(self, eta) -> np.ndarray:
        return self.rho_u * (self.beta @ np.asarray(eta, dtype=float)) + self.sigma_u2

    def caps(self, eta):
        """Per-AP gain caps (FSO, RF); zero on inactive branches."""
        ld = self.load(eta)
        return (np.where(self.eps, np.sqrt(self.p_fso_max / ld), 0.0),
                np.where(self.eps_rf, np.sqrt(self.p_rf_max / ld), 0.0))

    def violation(self, a: PowerAllocation) -> float:
        """Largest relative constraint violation (<= 0 when feasible)."""
        eta = np.asarray(a.eta, dtype=float)
        ld = self.load(eta)
        v = [np.max(eta) - 1.0, -np.min(eta), -np.min(a.mu), -np.min(a.mu_rf),
             self.rho_u * eta.sum() / (self.p_total - self.p_fixed) - 1.0]
        if self.eps.any():
            v.append(np.max(a.mu[self.eps] ** 2 * ld[self.eps] / self.p_fso_max) - 1.0)
        if self.eps_rf.any():
            v.append(np.max(a.mu_rf[self.eps_rf] ** 2 * ld[self.eps_rf] / self.p_rf_max) - 1.0)
        if (~self.eps).any():
            v.append(np.max(np.abs(a.mu[~self.eps])))
        if (~self.eps_rf).any():
            v.append(np.max(np.abs(a.mu_rf[~self.eps_rf])))
        return float(max(v))

    def feasible(self, a: PowerAllocation, tol: float = FEAS_TOL) -> bool:
        return self.violation(a) <= tol

    # ----------------------------------------------------- objectives -----
    def sinr(self, a: PowerAllocation) -> np.ndarray:
        return sinr_all(self.terms, a)

    def sum_rate(self, a: PowerAllocation) -> float:
        return float(np.sum(rate(self.sinr(a))))

    def p_net(self, a: PowerAllocation) -> float:
        return self.rho_u * float(np.sum(a.eta)) + self.p_fixed

    def ee(self, a: PowerAllocation) -> float:
        return energy_efficiency(rate(self.sinr(a)), self.p_net(a), self.prelog_bw, 1, 0)

    def ee_high_sinr(self, a: PowerAllocation) -> float:
        """EE with log2(1 + SINR) replaced by log2(SINR)."""
        return self.prelog_bw * float(np.sum(np.log2(self.sinr(a)))) / self.p_net(a)


def full_power(prob: PowerProblem) -> PowerAllocation:
    """eta = 1 (scaled down uniformly only if P_0 forces it), gains at their caps."""
    prob.check()
    K = prob.num_ues
    eta = np.ones(K) * min(1.0, prob.eta_budget / K)
    mu, mu_rf = prob.caps(eta)
    return PowerAllocation(eta, mu, mu_rf)


def interior_start(prob: PowerProblem) -> PowerAllocation:
    """rho = 1/sqrt(K) (eta = 1/K) and gains at half their caps."""
    prob.check()
    K = prob.num_ues
    eta = np.ones(K) * min(1.0 / K, 0.5 * prob.eta_budget / K)
    mu, mu_rf = prob.caps(eta)
    return PowerAllocation(eta, 0.5 * mu, 0.5 * mu_rf)
