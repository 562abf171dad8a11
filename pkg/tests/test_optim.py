import numpy as np
import pytest

from builders import small_instance, surrogate_violations, toy_problem
from rffso.optim import (InfeasibleStart, brute_force_oracle, full_power, gp_solve, interior_start, mmse_receiver,
                         mse_e_k, wmmse_solve)
from rffso.perf import PowerAllocation


def test_full_power_single_link_cap():
    prob = toy_problem(0, num_ues=1, num_aps=1)
    a = full_power(prob)
    assert a.eta[0] == 1.0
    expect = np.sqrt(prob.p_fso_max / (prob.rho_u * prob.beta[0, 0] + prob.sigma_u2[0]))
    assert a.mu[0] == pytest.approx(expect, rel=1e-12)
    assert a.mu_rf[0] == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_full_power_is_feasible_and_tight(seed):
    prob = small_instance(seed).prob
    a = full_power(prob)
    assert prob.feasible(a)
    ld = prob.load(a.eta)
    assert np.allclose(a.mu[prob.eps] ** 2 * ld[prob.eps], prob.p_fso_max)


def test_interior_start_feasible():
    prob = small_instance(1).prob
    assert prob.feasible(interior_start(prob))


@pytest.mark.parametrize("seed", range(4))
def test_mse_identity(seed):
    ins = small_instance(seed)
    prob, a = ins.prob, ins.alloc
    rho = np.sqrt(a.eta)
    u = mmse_receiver(prob, rho, a.mu, a.mu_rf)
    e = mse_e_k(prob, rho, a.mu, a.mu_rf, u)
    assert np.allclose(1.0 / e, 1.0 + prob.sinr(a), rtol=1e-8)


@pytest.mark.parametrize("seed", range(6))
def test_wmmse_monotone_feasible_and_beats_full(seed):
    prob = small_instance(seed).prob
    a, rep = wmmse_solve(prob, record_blocks=True)
    assert surrogate_violations(rep) == 0
    assert prob.feasible(a)
    assert prob.ee(a) >= prob.ee(full_power(prob)) * (1 - 1e-12)
    assert rep.converged


def test_wmmse_sum_rate_objective():
    prob = small_instance(2).prob
    a, _ = wmmse_solve(prob, objective="sum_rate", record_blocks=True)
    assert prob.sum_rate(a) >= prob.sum_rate(full_power(prob)) - 1e-9


@pytest.mark.parametrize("seed", [0, 1, 8, 15])
def test_wmmse_matches_grid_on_toys(seed):
    prob = toy_problem(seed)
    _, best = brute_force_oracle(prob, 50)
    a, _ = wmmse_solve(prob)
    assert prob.ee(a) >= 0.98 * best


def test_wmmse_revives_a_switched_off_ue():
    prob = toy_problem(3)
    a0 = full_power(prob)
    a0.eta[1] = 0.0
    a0.mu, a0.mu_rf = prob.caps(a0.eta)
    a, _ = wmmse_solve(prob, init=a0)
    assert a.eta[1] > 0
    a_plain, _ = wmmse_solve(prob, init=a0, escape=False)
    assert a_plain.eta[1] == 0.0


def test_wmmse_rejects_bad_inputs():
    prob = toy_problem(0)
    with pytest.raises(ValueError):
        wmmse_solve(prob, eps_stop=0.0)
    bad = full_power(prob)
    bad.mu = bad.mu * 2
    with pytest.raises(InfeasibleStart):
        wmmse_solve(prob, init=bad)


def test_wmmse_max_iter_reported():
    prob = small_instance(0).prob
    _, rep = wmmse_solve(prob, max_iter=1, eps_stop=1e-12)
    assert rep.reason == "max_iter" and not rep.converged


# ------------------------------------------------------------------ GP -----

@pytest.mark.parametrize("seed", range(5))
def test_gp_feasible_and_stationary(seed):
    prob = small_instance(seed).prob
    if np.any(prob.terms.A.sum(1) + prob.terms.Ap.sum(1) <= 0):
        pytest.skip("instance has an unserved UE")
    a, rep = gp_solve(prob)
    assert prob.violation(a) <= 1e-6
    assert rep.kkt_residual <= 1e-6
    assert prob.ee_high_sinr(a) >= prob.ee_high_sinr(full_power(prob)) * (1 - 1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_gp_matches_grid_two_variables(seed):
    prob = toy_problem(seed, num_ues=1, num_aps=1)
    res = 400
    _, best = brute_force_oracle(prob, res, objective="ee_high_sinr")
    a, _ = gp_solve(prob)
    # one grid step of slack per axis
    assert prob.ee_high_sinr(a) >= best - 2 * abs(best) / res


def test_gp_product_objective_runs():
    prob = toy_problem(1)
    a, rep = gp_solve(prob, objective="product")
    assert prob.feasible(a, 1e-6) and rep.iterations >= 1


# ---------------------------------------------------------------- grid -----

def test_grid_points_feasible():
    prob = toy_problem(2)
    a, val = brute_force_oracle(prob, 10)
    assert prob.feasible(a, 1e-9)
    assert val == pytest.approx(prob.ee(a), rel=1e-12)


def test_grid_size_limit():
    prob = small_instance(0).prob
    with pytest.raises(ValueError):
        brute_force_oracle(prob, 200)


def test_grid_objectives():
    prob = toy_problem(4)
    _, sr = brute_force_oracle(prob, 10, objective="sum_rate")
    assert sr >= prob.sum_rate(PowerAllocation(np.ones(2), *prob.caps(np.ones(2)))) - 1e-12
    with pytest.raises(ValueError):
        brute_force_oracle(prob, 4, objective="other")
