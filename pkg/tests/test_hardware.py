import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats
from scipy.special import erf

from rffso.hardware import (ChainGains, ClippingConfig, HiConfig, clip_samples, clipping_distortion,
                            effective_noise_variances, hi_distortion)


@pytest.mark.parametrize("form", ["printed", "gaussian"])
def test_zero_clip_level(form):
    d = clipping_distortion(ClippingConfig(1.0, 0.0, 1.0), form)
    assert d.gain == 0.0 and d.noise_var == 0.0


def test_unit_clip_direct_evaluation():
    mu0, bc, s2 = 1.0, 1.0, 1.0
    r = erf(bc / np.sqrt(2 * s2))
    printed = bc ** 2 * (2 - r) + s2 * (1 - r) * r - np.sqrt(2 * bc ** 2 * s2 / np.pi) * np.exp(-bc ** 2 / (2 * s2))
    d = clipping_distortion(ClippingConfig(mu0, bc, s2), "printed")
    assert d.gain == pytest.approx(mu0 * r, rel=1e-14)
    assert d.noise_var == pytest.approx(printed, rel=1e-12)


@pytest.mark.parametrize("mu0,bc,s2", [(1.0, 1.0, 1.0), (2.0, 0.7, 0.5), (0.5, 2.0, 3.0)])
def test_gaussian_form_matches_quadrature(mu0, bc, s2):
    pdf = stats.norm(0.0, np.sqrt(s2)).pdf
    kink = [-bc / mu0, bc / mu0]
    lim = 40.0 * np.sqrt(s2)
    exy = integrate.quad(lambda x: x * clip_samples(x, mu0, bc) * pdf(x), -lim, lim, points=kink, limit=200)[0]
    ey2 = integrate.quad(lambda x: clip_samples(x, mu0, bc) ** 2 * pdf(x), -lim, lim, points=kink, limit=200)[0]
    gain = exy / s2
    d = clipping_distortion(ClippingConfig(mu0, bc, s2), "gaussian")
    assert d.gain == pytest.approx(gain, rel=1e-9)
    assert d.noise_var == pytest.approx(ey2 - gain ** 2 * s2, rel=1e-8)


def test_gaussian_form_matches_sampling():
    x = np.random.default_rng(0).normal(0.0, 1.0, 2_000_000)
    y = clip_samples(x, 1.0, 1.0)
    gain = np.mean(x * y)
    d = clipping_distortion(ClippingConfig(1.0, 1.0, 1.0), "gaussian")
    assert d.gain == pytest.approx(gain, rel=5e-3)
    assert d.noise_var == pytest.approx(np.mean(y ** 2) - gain ** 2, rel=0.03)


@settings(max_examples=50, deadline=None)
@given(mu0=st.floats(0.1, 5.0), s2=st.floats(0.1, 5.0), b1=st.floats(0.0, 5.0), b2=st.floats(0.0, 5.0))
def test_gain_nondecreasing_in_clip_level(mu0, s2, b1, b2):
    lo, hi = sorted((b1, b2))
    assert clipping_distortion(ClippingConfig(mu0, lo, s2)).gain <= clipping_distortion(ClippingConfig(mu0, hi, s2)).gain


def test_gain_tends_to_laser_gain():
    d = clipping_distortion(ClippingConfig(1.7, 1e3, 1.0), "gaussian")
    assert d.gain == pytest.approx(1.7)
    assert d.noise_var == pytest.approx(0.0, abs=1e-12)


def test_zero_input_variance_rejected():
    with pytest.raises(ValueError):
        clipping_distortion(ClippingConfig(1.0, 1.0, 0.0))


def test_distortion_variance_nonnegative_and_quiet(caplog):
    for bc in np.linspace(0.0, 10.0, 101):
        d = clipping_distortion(ClippingConfig(1.0, float(bc), 1.0), "gaussian")
        assert d.noise_var >= 0.0
    with caplog.at_level(logging.WARNING, logger="rffso.hardware"):
        clipping_distortion(ClippingConfig(1.0, 40.0, 1.0), "gaussian")
    assert not caplog.records          # cancellation noise is not reported


@pytest.mark.parametrize("q,mu,nd", [(1.0, 1.0, 0.0), (0.0, 0.0, 2.0)])
def test_hi_extremes(q, mu, nd):
    d = hi_distortion(HiConfig(q, 2.0))
    assert d.gain == mu and d.noise_var == nd


@given(q=st.floats(0.0, 1.0), s2=st.floats(1e-6, 1e3))
def test_hi_preserves_power(q, s2):
    d = hi_distortion(HiConfig(q, s2))
    assert d.gain ** 2 * s2 + d.noise_var == pytest.approx(s2, rel=1e-12)


def test_hi_quality_range():
    with pytest.raises(ValueError):
        hi_distortion(HiConfig(1.2, 1.0))


def _chain(M=1, **kw):
    base = dict(mu_an=np.full(M, 0.8), mu_an_rf=np.full(M, 0.9), nd_ap=np.full(M, 0.01),
                nd_ap_rf=np.full(M, 0.02), nd_an=np.full(M, 0.003), nd_an_rf=np.full(M, 0.004))
    base.update(kw)
    return ChainGains(**base)


def test_ideal_chain_deletes_terms():
    ch = _chain(mu_an=np.ones(1), mu_an_rf=np.ones(1), nd_ap=np.zeros(1), nd_ap_rf=np.zeros(1),
                nd_an=np.zeros(1), nd_an_rf=np.zeros(1))
    om, _ = effective_noise_variances(1.0, 1.0, ch, 0.3, 0.2, 0.5, 0.07, 0.06, 0.01)
    assert om == pytest.approx(0.3 * 0.5 + 0.07 + 0.01)


def test_default_noise_floors_positive():
    om, om_rf = effective_noise_variances(1.0, 1.0, _chain(), 1e-6, 1e-9, 1.6e-13, 1e-14, 1.6e-13, 1e-14)
    assert np.all(om > 0) and np.all(om_rf > 0)


def test_effective_noise_matches_chain_sampling():
    """Push only the noise sources through the FSO branch and measure the variance."""
    rng = np.random.default_rng(4)
    T = 1_000_000
    mu_ap, sig2, phi2, cpu2 = 0.7, 0.5, 0.05, 0.02
    ch = _chain()

    def cn(var):
        return np.sqrt(var / 2) * (rng.standard_normal(T) + 1j * rng.standard_normal(T))

    intensity = rng.lognormal(-0.02, 0.2, T) * 1.3          # any positive random gain
    m2 = float(np.mean(intensity ** 2))
    ap_out = mu_ap * cn(sig2) + cn(ch.nd_ap[0])
    theta = ch.mu_an[0] * (intensity * ap_out + cn(phi2)) + cn(ch.nd_an[0]) + cn(cpu2)
    om, _ = effective_noise_variances(mu_ap, 0.0, ch, m2, 0.0, sig2, phi2, 0.0, cpu2)
    assert np.var(theta) == pytest.approx(float(om[0]), rel=0.03)
