"""Trial execution and aggregation."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..assign import FronthaulAssignment, cognitive_assignment, fixed_assignment
from ..network import draw_network, fso_gain, link_stats, rf_gain_prior
from ..optim import PowerProblem, SolverReport, full_power, gp_solve, wmmse_solve
from ..perf import rate, sinr_terms
from .scenario import Scenario


@dataclass
class TrialResult:
    trial: int
    sinr: np.ndarray
    rate: np.ndarray
    ee: float
    p_net: float
    bw0: float
    n_fso: int
    n_rf: int
    n_hybrid: int
    iterations: int = 0
    converged: bool = True
    assignment: FronthaulAssignment | None = field(default=None, repr=False)
    report: SolverReport | None = field(default=None, repr=False)

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rate))


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def assign_links(sc: Scenario, draw, rng) -> FronthaulAssignment:
    M = draw.topo.num_aps
    if sc.policy != "cognitive":
        return fixed_assignment(sc.policy, M)
    a = sc.config.assign
    return cognitive_assignment(draw.fso, fso_gain(sc.config, draw), rf_gain_prior(sc.config, draw), rng,
                                theta_dom=a.theta_dom, theta_eq=a.theta_eq, theta_zero=a.theta_zero,
                                rep_offset=a.representative_offset, weather_table=a.weather_db_km)


def build_problem(sc: Scenario, draw, assignment: FronthaulAssignment):
    cfg = sc.config
    ls, bw0, _ = link_stats(cfg, draw, assignment.eps, assignment.eps_rf)
    terms = sinr_terms(ls, cfg.sinr_convention)
    net = cfg.network
    return PowerProblem.from_stats(ls, terms, cfg.power, net.num_ans, bw0, net.coherence, net.pilot_length), bw0


def solve(prob: PowerProblem, solver: str):
    if solver == "full":
        a = full_power(prob)
        return a, SolverReport(0, [], "converged", a)
    if solver == "wmmse":
        return wmmse_solve(prob)
    if solver == "gp":
        return gp_solve(prob)
    raise ValueError(f"unknown solver {solver!r}")


def run_trial(sc: Scenario, index: int) -> TrialResult:
    rng = trial_rng(sc.seed, index)
    draw = draw_network(sc.config, rng, sc.alignment, sc.weather)
    assignment = assign_links(sc, draw, rng)
    prob, bw0 = build_problem(sc, draw, assignment)
    alloc, report = solve(prob, sc.solver)
    sinr = prob.sinr(alloc)
    counts = assignment.counts()
    return TrialResult(index, sinr, rate(sinr), prob.ee(alloc), prob.p_net(alloc), bw0,
                       counts["n_fso"], counts["n_rf"], counts["n_hybrid"], report.iterations,
                       report.converged, assignment, report)


@dataclass
class Aggregate:
    scenario: Scenario | None
    results: list

    @property
    def ee(self) -> np.ndarray:
        return np.array([r.ee for r in self.results], dtype=float)

    def mean_ee(self) -> float:
        return float(np.mean(self.ee)) if self.results else float("nan")

    def cdf(self):
        """(sorted EE values, cumulative probabilities)."""
        x = np.sort(self.ee)
        n = x.size
        return x, np.arange(1, n + 1) / n if n else np.zeros(0)

    def rate_5pct(self) -> float:
        if not self.results:
            return float("nan")
        return float(np.percentile(np.concatenate([r.rate for r in self.results]), 5))

    def mean_counts(self) -> dict:
        if not self.results:
            return {"n_fso": float("nan"), "n_rf": float("nan"), "n_hybrid": float("nan")}
        return {k: float(np.mean([getattr(r, k) for r in self.results])) for k in ("n_fso", "n_rf", "n_hybrid")}

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.results)

    def summary(self) -> dict:
        s = {"trials": len(self.results), "mean_ee": self.mean_ee(), "rate_5pct": self.rate_5pct(),
             "mean_sum_rate": float(np.mean([r.sum_rate for r in self.results])) if self.results else float("nan"),
             "all_converged": self.all_converged}
        s.update({"mean_" + k: v for k, v in self.mean_counts().items()})
        return s


def _run_one(args):
    sc, i = args
    return run_trial(sc, i)


def run_experiment(sc: Scenario, jobs: int = 1, order=None) -> Aggregate:
    """All trials of a scenario; results are sorted by trial index, so the
    execution order (``order``) or process count never changes the output."""
    idx = list(range(sc.trials)) if order is None else list(order)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            res = list(ex.map(_run_one, [(sc, i) for i in idx]))
    else:
        res = [run_trial(sc, i) for i in idx]
    res.sort(key=lambda r: r.trial)
    return Aggregate(sc, res)
