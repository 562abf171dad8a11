"""Large-scale RF fading, small-scale Rayleigh draws and the FSO fronthaul
channel (path loss, log-normal turbulence, pointing error)."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erf

from .config import FsoConfig, LargeScaleModel
from .topology import Topology

LN10 = np.log(10.0)


# ---------------------------------------------------------------- RF -----

def clutter_loss_db(freq_mhz: float, h_tx: float, h_rx: float) -> float:
    """Hata-style constant L (dB) of the three-slope model."""
    lf = np.log10(freq_mhz)
    return (46.3 + 33.9 * lf - 13.82 * np.log10(h_tx)
            - (1.1 * lf - 0.7) * h_rx + (1.56 * lf - 0.8))


def three_slope_db(d, loss_db: float, d0: float, d1: float):
    """Path loss in dB (negative numbers).  Distances in meters; the log
    terms use kilometers as in the original model."""
    d = np.asarray(d, dtype=float)
    km = 1e-3
    far = -loss_db - 35.0 * np.log10(np.maximum(d, d1) * km)
    mid = -loss_db - 15.0 * np.log10(d1 * km) - 20.0 * np.log10(np.clip(d, d0, d1) * km)
    near = -loss_db - 15.0 * np.log10(d1 * km) - 20.0 * np.log10(d0 * km)
    return np.where(d > d1, far, np.where(d > d0, mid, near))


def access_large_scale(topo: Topology, model: LargeScaleModel, h_ap: float, h_ue: float, rng) -> np.ndarray:
    """beta_mk (M, K), linear.  Shadowing only on the far slope."""
    d = topo.ue_ap_distance()
    L = clutter_loss_db(model.freq_mhz, h_ap, h_ue)
    pl = three_slope_db(d, L, model.d0, model.d1)
    z = rng.standard_normal(d.shape)
    pl = pl + np.where(d > model.d1, model.shadow_std_db * z, 0.0)
    return 10.0 ** (pl / 10.0)


def fronthaul_rf_large_scale(topo: Topology, model: LargeScaleModel, h_an: float, h_ap: float) -> np.ndarray:
    """beta_am (M,) for each AP towards its AN; the AN takes the transmitter
    height slot and the AP the receiver slot."""
    d = topo.ap_an_distance()
    L = clutter_loss_db(model.freq_mhz, h_an, h_ap)
    return 10.0 ** (three_slope_db(d, L, model.d0, model.d1) / 10.0)


def sample_small_scale(num_aps: int, num_ues: int, num_antennas: int, rng, size=()):
    """CN(0,1) access vectors (size..., M, K, N) and fronthaul scalars (size..., M)."""
    size = tuple(np.atleast_1d(size)) if size != () else ()
    shp = size + (num_aps, num_ues, num_antennas)
    h = (rng.standard_normal(shp) + 1j * rng.standard_normal(shp)) / np.sqrt(2.0)
    shp2 = size + (num_aps,)
    h_am = (rng.standard_normal(shp2) + 1j * rng.standard_normal(shp2)) / np.sqrt(2.0)
    return h, h_am


# --------------------------------------------------------------- FSO -----

def db_km_to_nat(gamma_db_km):
    """dB/km attenuation -> natural units per meter."""
    return np.asarray(gamma_db_km, dtype=float) * LN10 / 1e4


def nat_to_db_km(gamma_nat):
    return np.asarray(gamma_nat, dtype=float) * 1e4 / LN10


@dataclass(frozen=True)
class FsoLinkParams:
    """One FSO fronthaul link (fields may also be equal-shape arrays)."""
    distance: float
    attenuation_db_km: float
    radial_offset: float
    wavelength: float = 1550e-9
    aperture_area: float = np.pi * 0.1 ** 2
    divergence: float = 2e-3
    cn2: float = 5e-14
    beam_waist: float = 2.5
    jitter_std: float = 0.3
    receiver_radius: float = 0.1
    pointing: str = "boresight"

    @classmethod
    def from_config(cls, fso: FsoConfig, distance, attenuation_db_km, radial_offset) -> "FsoLinkParams":
        return cls(distance=distance, attenuation_db_km=attenuation_db_km, radial_offset=radial_offset,
                   wavelength=fso.wavelength, aperture_area=fso.area, divergence=fso.divergence,
                   cn2=fso.cn2, beam_waist=fso.beam_waist, jitter_std=fso.jitter_std,
                   receiver_radius=fso.receiver_radius, pointing=fso.pointing)

    def with_offset(self, radial_offset) -> "FsoLinkParams":
        return replace(self, radial_offset=radial_offset)

    def at(self, m: int) -> "FsoLinkParams":
        """Scalar link m of an array-valued parameter set."""
        vals = {f: getattr(self, f) for f in self.__dataclass_fields__}
        return FsoLinkParams(**{f: (np.asarray(v)[m] if np.ndim(v) > 0 else v) for f, v in vals.items()})

    @property
    def rytov(self):
        """Turbulence log-amplitude variance delta_l^2."""
        k = 2.0 * np.pi / self.wavelength
        return 0.307 * self.cn2 * k ** (7.0 / 6.0) * np.asarray(self.distance, dtype=float) ** (11.0 / 6.0)

    @property
    def v(self):
        # "literal" reads the normalised aperture off the radial offset; the
        # boresight model uses the receiver radius and treats the offset as a
        # deterministic displacement loss instead
        r = self.radial_offset if self.pointing == "literal" else self.receiver_radius
        return np.sqrt(np.pi / 2.0) * np.asarray(r, dtype=float) / self.beam_waist

    @property
    def waist_eq2(self):
        v = self.v
        return self.beam_waist ** 2 * np.sqrt(np.pi) * erf(v) / (2.0 * v * np.exp(-v ** 2))

    @property
    def xi(self):
        return np.sqrt(self.waist_eq2) / (2.0 * self.jitter_std)

    @property
    def i0(self):
        """Peak pointing gain."""
        a0 = erf(self.v) ** 2
        if self.pointing == "literal":
            return a0
        return a0 * np.exp(-2.0 * np.asarray(self.radial_offset, dtype=float) ** 2 / self.waist_eq2)


def fso_path_loss(link: FsoLinkParams):
    """(I_l, I_l') where I_l' excludes the weather attenuation."""
    d = np.asarray(link.distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("FSO link distance must be positive")
    geo = link.aperture_area / (link.divergence * d) ** 2
    return geo * np.exp(-db_km_to_nat(link.attenuation_db_km) * d), geo


def sample_turbulence(link: FsoLinkParams, rng, size):
    d2 = link.rytov
    return np.exp(-2.0 * d2 + 2.0 * np.sqrt(d2) * rng.standard_normal(size))


def sample_pointing(link: FsoLinkParams, rng, size):
    u = rng.uniform(size=size)
    return link.i0 * u ** (1.0 / link.xi ** 2)


def sample_fso(link: FsoLinkParams, rng, size=()):
    """Draws of I_FSO = I_l * I_t * I_p."""
    il, _ = fso_path_loss(link)
    return il * sample_turbulence(link, rng, size) * sample_pointing(link, rng, size)


def turbulence_pdf(x, link: FsoLinkParams):
    d2 = link.rytov
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(-(np.log(x) + 2.0 * d2) ** 2 / (8.0 * d2)) / (x * np.sqrt(8.0 * np.pi * d2))
    return np.where(x > 0, out, 0.0)


def pointing_pdf(x, link: FsoLinkParams):
    x = np.asarray(x, dtype=float)
    xi2, i0 = link.xi ** 2, link.i0
    inside = (x >= 0) & (x <= i0)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = xi2 / i0 ** xi2 * x ** (xi2 - 1.0)
    return np.where(inside, val, 0.0)


def fso_moment(link: FsoLinkParams, n: int, literal: bool = False):
    """n-th moment of I_FSO.

    Default is the product of the independent component moments.  With
    ``literal=True`` the closed form with the (xi^2+n)^2 exponent and the
    trailing phi' factor is returned instead, for comparison only.
    """
    if n == 0:
        return np.ones_like(np.asarray(link.distance, dtype=float))
    il, _ = fso_path_loss(link)
    xi2, d2 = link.xi ** 2, link.rytov
    base = (il * link.i0) ** n * xi2 / (xi2 + n)
    if not literal:
        return base * np.exp(2.0 * n * (n - 1) * d2)
    phi = 2.0 * d2 * (1.0 + 2.0 * xi2)
    phi_p = 2.0 * d2 * xi2 * (1.0 + xi2)
    return base * np.exp(2.0 * (xi2 + n) ** 2 * d2 - (xi2 + n) * phi) * phi_p


def literal_moment_report(link: FsoLinkParams, orders=(1, 2, 4)) -> list[dict]:
    """Side-by-side values of the product-form and literal moment formulas."""
    rows = []
    for n in orders:
        prod = float(fso_moment(link, n))
        lit = float(fso_moment(link, n, literal=True))
        rows.append({"n": n, "product_form": prod, "literal_form": lit,
                     "ratio_literal_over_product": lit / prod if prod > 0 else float("nan")})
    return rows
    return rows
