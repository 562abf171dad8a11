import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from rffso.channel import (FsoLinkParams, access_large_scale, clutter_loss_db, db_km_to_nat, fronthaul_rf_large_scale,
                           fso_moment, fso_path_loss, literal_moment_report, nat_to_db_km, pointing_pdf,
                           sample_fso, sample_pointing, sample_small_scale, sample_turbulence, three_slope_db,
                           turbulence_pdf)
from rffso.config import FsoConfig, LargeScaleModel
from rffso.topology import Topology


def _link(distance=500.0, att=0.44, offset=0.0, **kw):
    return FsoLinkParams.from_config(FsoConfig(**kw), distance, att, offset)


# ----------------------------------------------------------------- RF -----

def test_near_branch_is_flat():
    L = clutter_loss_db(1900.0, 15.0, 1.65)
    assert three_slope_db(3.0, L, 10.0, 50.0) == three_slope_db(9.0, L, 10.0, 50.0)


def test_clutter_constant_direct_evaluation():
    f, ht, hr = 1900.0, 15.0, 1.65
    lf = np.log10(f)
    expect = 46.3 + 33.9 * lf - 13.82 * np.log10(ht) - ((1.1 * lf - 0.7) * hr - (1.56 * lf - 0.8))
    assert clutter_loss_db(f, ht, hr) == pytest.approx(expect, rel=1e-12)


def test_far_slope():
    L = clutter_loss_db(1900.0, 15.0, 1.65)
    assert three_slope_db(100.0, L, 10.0, 50.0) == pytest.approx(-L - 35.0 * np.log10(0.1))


def test_three_slope_continuity():
    L = 140.0
    for d in (10.0, 50.0):
        lo, hi = three_slope_db(d * (1 - 1e-9), L, 10.0, 50.0), three_slope_db(d * (1 + 1e-9), L, 10.0, 50.0)
        assert lo == pytest.approx(hi, abs=1e-6)


def test_taller_an_gives_smaller_constant():
    assert clutter_loss_db(1900.0, 30.0, 15.0) < clutter_loss_db(1900.0, 15.0, 15.0)


def _line_topology(dists):
    M = len(dists)
    ap = np.column_stack([dists, np.zeros(M)])
    return Topology(np.zeros((1, 2)), ap, np.zeros((1, 2)), np.zeros(M, dtype=int), np.ones((M, 1), bool))


def test_fronthaul_gain_decreases_with_distance():
    b = fronthaul_rf_large_scale(_line_topology([50.0, 100.0, 200.0]), LargeScaleModel(), 30.0, 15.0)
    assert b[0] > b[1] > b[2]


def test_fronthaul_equals_access_formula_for_equal_geometry():
    topo = _line_topology([30.0, 45.0])     # no shadowing below d1
    model = LargeScaleModel()
    access = access_large_scale(topo, model, 15.0, 15.0, np.random.default_rng(0))[:, 0]
    front = fronthaul_rf_large_scale(topo, model, 15.0, 15.0)
    assert np.allclose(access, front, rtol=1e-12)


def test_shadowing_only_far():
    topo = _line_topology([20.0, 40.0, 300.0])
    model = LargeScaleModel()
    a = access_large_scale(topo, model, 15.0, 1.65, np.random.default_rng(1))
    b = access_large_scale(topo, model, 15.0, 1.65, np.random.default_rng(2))
    assert np.allclose(a[:2], b[:2])
    assert abs(np.log10(a[2, 0] / b[2, 0])) > 1e-3


def test_small_scale_statistics():
    h, h_am = sample_small_scale(3, 2, 2, np.random.default_rng(0), size=20_000)
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, rel=0.02)
    assert np.var(h.real) == pytest.approx(0.5, rel=0.02)
    assert np.var(h.imag) == pytest.approx(0.5, rel=0.02)
    assert np.mean(np.abs(h_am) ** 2) == pytest.approx(1.0, rel=0.02)


def test_small_scale_deterministic():
    a = sample_small_scale(3, 2, 2, np.random.default_rng(5))[0]
    b = sample_small_scale(3, 2, 2, np.random.default_rng(5))[0]
    assert np.array_equal(a, b)


# ---------------------------------------------------------------- FSO -----

@given(st.floats(0.0, 500.0))
def test_db_km_round_trip(x):
    assert nat_to_db_km(db_km_to_nat(x)) == pytest.approx(x, rel=1e-12, abs=1e-12)


def test_db_km_conversion_value():
    # 10 dB over 1 km is a factor 10 in power
    assert np.exp(-db_km_to_nat(10.0) * 1000.0) == pytest.approx(0.1, rel=1e-12)


def test_path_loss_without_absorption():
    link = _link(att=0.0)
    il, il_p = fso_path_loss(link)
    assert il == pytest.approx(link.aperture_area / (link.divergence * 500.0) ** 2)
    assert il == il_p


def test_path_loss_inverse_square():
    assert fso_path_loss(_link(1000.0, 0.0))[0] == pytest.approx(fso_path_loss(_link(500.0, 0.0))[0] / 4)


def test_path_loss_zero_distance():
    link = _link()
    with pytest.raises(ValueError):
        fso_path_loss(FsoLinkParams(**{**link.__dict__, "distance": 0.0}))


def test_turbulence_unit_mean():
    x = sample_turbulence(_link(2000.0), np.random.default_rng(0), 1_000_000)
    se = x.std() / np.sqrt(x.size)
    assert abs(x.mean() - 1.0) < 3 * se


def test_pointing_bounds_and_distribution():
    link = _link(offset=1.0)
    x = sample_pointing(link, np.random.default_rng(1), 200_000)
    assert np.all((x >= 0) & (x <= link.i0))
    # CDF (x/I0)^{xi^2}; chi-square on ten equal-probability bins
    edges = link.i0 * np.linspace(0, 1, 11) ** (1.0 / link.xi ** 2)
    counts, _ = np.histogram(x, edges)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_samples_nonnegative():
    assert np.all(sample_fso(_link(), np.random.default_rng(2), 10_000) >= 0)


@pytest.mark.parametrize("n", [1, 2])
def test_component_moments(n):
    link = _link(1500.0, offset=0.5)
    rng = np.random.default_rng(3)
    t = sample_turbulence(link, rng, 2_000_000)
    p = sample_pointing(link, rng, 2_000_000)
    assert np.mean(t ** n) == pytest.approx(np.exp(2 * n * (n - 1) * link.rytov), rel=0.02)
    assert np.mean(p ** n) == pytest.approx(link.i0 ** n * link.xi ** 2 / (link.xi ** 2 + n), rel=0.02)
    il = fso_path_loss(link)[0]
    prod = il ** n * np.exp(2 * n * (n - 1) * link.rytov) * link.i0 ** n * link.xi ** 2 / (link.xi ** 2 + n)
    assert fso_moment(link, n) == pytest.approx(prod, rel=1e-12)


def test_deterministic_limit():
    link = _link()
    calm = FsoLinkParams(**{**link.__dict__, "cn2": 1e-30, "jitter_std": 1e-6})
    assert fso_moment(calm, 1) == pytest.approx(fso_path_loss(calm)[0] * calm.i0, rel=1e-6)


def test_zeroth_moment():
    assert fso_moment(_link(), 0) == 1.0


def test_pdfs_normalise():
    link = _link(2000.0, offset=1.0)
    d2 = link.rytov
    # integrate in log space for the turbulence pdf
    val_t = integrate.quad(lambda y: turbulence_pdf(np.exp(y), link) * np.exp(y),
                           -2 * d2 - 12 * np.sqrt(d2), -2 * d2 + 12 * np.sqrt(d2), limit=200)[0]
    val_p = integrate.quad(lambda x: pointing_pdf(x, link), 0.0, link.i0, limit=200)[0]
    assert abs(val_t - 1) < 1e-3 and abs(val_p - 1) < 1e-3


def test_literal_report_rows():
    rows = literal_moment_report(_link())
    assert [r["n"] for r in rows] == [1, 2, 4]
    assert all(np.isfinite(r["literal_form"]) for r in rows)
    assert any(abs(r["ratio_literal_over_product"] - 1) > 1e-3 for r in rows)


def test_default_geometry():
    link = _link()
    assert link.jitter_std == 0.3 and link.beam_waist == 2.5
    assert 0 < link.i0 < 1 and link.xi > 0
