import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import small_instance
from rffso.config import PowerModel
from rffso.mc_oracle import ChainInstance, empirical_sinr_oracle, oracle_terms
from rffso.perf import (decompose, energy_efficiency, mu_caps, net_power, rate, sinr_all,
                        sinr_closed_form, sinr_terms)


@pytest.mark.parametrize("s,r", [(0.0, 0.0), (1.0, 1.0), (3.0, 2.0)])
def test_rate_values(s, r):
    assert rate(s) == r


def test_rate_rejects_negative():
    with pytest.raises(ValueError):
        rate(-0.1)


def test_net_power_table_example():
    # 200 APs at 0.2 + 0.1 W, 4 ANs at 0.5 + 0.5 W
    assert net_power(np.zeros(20), PowerModel(), 200, 4) == pytest.approx(64.0)


def test_net_power_adds_rho_per_active_ue():
    pm = PowerModel()
    assert net_power([1.0, 0.0], pm, 5, 1) - net_power([0.0, 0.0], pm, 5, 1) == pytest.approx(pm.rho_u)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 1000))
def test_net_power_matches_summation(seed):
    rng = np.random.default_rng(seed)
    pm = PowerModel()
    eta = rng.uniform(size=6)
    M, A = 9, 3
    links = rng.integers(1, 3, M)
    total = sum(pm.rho_u * e for e in eta)
    for m in range(M):
        total += pm.p_circuit_ap + pm.p_fronthaul * links[m]
    for a in range(A):
        total += pm.p_circuit_an + pm.p_backhaul
    assert net_power(eta, pm, M, A, links) == pytest.approx(total, rel=1e-12)


def test_energy_efficiency_prelog_and_linearity():
    rates = np.array([1.0, 2.0])
    ee = energy_efficiency(rates, 10.0, 1e6, 100, 20)
    assert ee == pytest.approx(0.8 * 1e6 * 3.0 / 10.0)
    assert energy_efficiency(rates, 10.0, 2e6, 100, 20) == pytest.approx(2 * ee)
    assert energy_efficiency(np.zeros(2), 10.0, 1e6, 100, 20) == 0.0


def test_mu_caps_single_link():
    cap = mu_caps([1.0], np.array([[2e-9]]), 1e-13, 0.1, 0.04)
    assert cap[0] == pytest.approx(np.sqrt(0.04 / (0.1 * 2e-9 + 1e-13)))


# ------------------------------------------------------------ closed form -----

@pytest.fixture(scope="module")
def inst():
    return small_instance(3)


def test_terms_nonnegative(inst):
    t = inst.terms
    for name in ("A", "Ap", "B", "Bp", "C", "Cp", "E", "Ep", "D0"):
        assert np.all(getattr(t, name) >= -1e-30), name
    assert np.all(t.D0 > 0)


def test_zero_eta_gives_zero_sinr(inst):
    a = inst.alloc.copy()
    a.eta[0] = 0.0
    assert sinr_closed_form(0, inst.terms, a) == 0.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 500), factor=st.floats(1.1, 3.0))
def test_sinr_monotone_in_own_power(seed, factor):
    ins = small_instance(seed)
    a = ins.alloc
    k = 0
    b = a.copy()
    b.eta[k] = min(1.0, a.eta[k] * factor)
    if b.eta[k] == a.eta[k] or decompose(ins.terms, a)[0][k] == 0:
        return
    s0, s1 = sinr_all(ins.terms, a), sinr_all(ins.terms, b)
    assert s1[k] > s0[k]
    others = np.arange(len(s0)) != k
    has_iui = (ins.terms.C[others, k].sum(-1) + ins.terms.Cp[others, k].sum(-1)) > 0
    assert np.all(s1[others][has_iui] < s0[others][has_iui])


def test_links_off_delete_terms():
    ins = small_instance(5)
    ls = ins.ls
    ls.eps = np.zeros_like(ls.eps)
    ls.eps_rf = np.zeros_like(ls.eps_rf)
    t = sinr_terms(ls)
    for name in ("A", "Ap", "B", "Bp", "C", "Cp"):
        assert not np.any(getattr(t, name)), name


def test_unserved_ue_has_zero_sinr():
    ins = small_instance(7)
    ls = ins.ls
    ls.serve = ls.serve.copy()
    ls.serve[:, 0] = False
    t = sinr_terms(ls)
    assert sinr_all(t, ins.alloc)[0] == 0.0


def test_sinr_is_deterministic(inst):
    assert np.array_equal(sinr_all(inst.terms, inst.alloc), sinr_all(inst.terms, inst.alloc))


def test_conventions_differ(inst):
    printed = sinr_terms(inst.ls, "printed")
    assert not np.allclose(sinr_all(printed, inst.alloc), sinr_all(inst.terms, inst.alloc))


def test_oracle_desired_signal(inst):
    o = oracle_terms(ChainInstance(inst.ls, inst.draw.fso, inst.alloc), trials=20_000, seed=1)
    ds2, *_ = decompose(inst.terms, inst.alloc)
    assert np.allclose(o["ds2"], ds2, rtol=0.02)
    assert np.all(o["bu"] + o["iui"] + o["noise"] > 0)


def test_oracle_needs_enough_trials(inst):
    with pytest.raises(ValueError):
        empirical_sinr_oracle(0, ChainInstance(inst.ls, inst.draw.fso, inst.alloc), trials=100)
