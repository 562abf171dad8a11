"""Cognitive RF/FSO fronthaul assignment.

Each AN reads a quadrant photodiode to grade the FSO beam alignment,
inverts the FSO mean-square gain for the weather attenuation, and picks
FSO-only, RF-only or both for every AP it serves.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .channel import FsoLinkParams, fso_path_loss, nat_to_db_km

ALIGNMENTS = ("good", "moderate", "poor")
WEATHERS = ("clear", "rainy", "snowy", "foggy")
DEFAULT_WEATHER_DB_KM = {"clear": 0.44, "rainy": 0.523, "snowy": 4.53, "foggy": 50.0}
DEFAULT_REP_OFFSET = {"good": 0.4, "moderate": 1.0, "poor": 1.4}


@dataclass(frozen=True)
class QpdReading:
    q: tuple
    incident: float = 1.0
    # total reading with the detector fully inside the beam; the "nothing
    # arrives" threshold is relative to this, not to the whole beam power
    full_scale: float | None = None

    @property
    def reference(self) -> float:
        return self.incident if self.full_scale is None else self.full_scale

    def __post_init__(self):
        if len(self.q) != 4 or min(self.q) < 0:
            raise ValueError("a QPD reading has four nonnegative quadrant values")


# ---------------------------------------------------------------- QPD -----

def _arc_overlap(a1, b1, a2, b2):
    """Length of [a1, b1] intersected with [a2, b2] on the circle."""
    tot = 0.0
    for s in (-2 * np.pi, 0.0, 2 * np.pi):
        tot += max(0.0, min(b1, b2 + s) - max(a1, a2 + s))
    return tot


def quadrant_areas(beam_radius: float, offset: float, det_radius: float, direction: float = 0.0,
                   tol: float = 1e-10) -> np.ndarray:
    """Area of the beam disk falling on each detector quadrant.

    The angular extent of the beam at each detector radius is closed form,
    the radial integral is done by adaptive quadrature.
    """
    w, rs, ra = float(beam_radius), float(offset), float(det_radius)
    out = np.zeros(4)
    for i in range(4):
        lo, hi = i * np.pi / 2, (i + 1) * np.pi / 2

        def arc(r):
            if r <= 0:
                return 0.0
            if rs == 0.0:
                return (hi - lo) * r if r < w else 0.0
            c = (r * r + rs * rs - w * w) / (2.0 * r * rs)
            if c >= 1.0:
                return 0.0
            if c <= -1.0:
                return (hi - lo) * r
            al = np.arccos(c)
            th = direction % (2 * np.pi)
            return r * _arc_overlap(th - al, th + al, lo, hi)

        # kinks where the beam edge enters or leaves the detector radius
        pts = [p for p in (abs(w - rs), w + rs) if 0 < p < ra]
        with warnings.catch_warnings():
            # round-off reports at the tolerance floor; the area is still accurate
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            out[i] = integrate.quad(arc, 0.0, ra, points=pts or None, epsabs=tol * ra * ra, limit=200)[0]
    return out


def qpd_measure(beam_radius: float, offset: float, det_radius: float, incident: float,
                direction: float = 0.0) -> QpdReading:
    area = quadrant_areas(beam_radius, offset, det_radius, direction)
    full = incident * min(1.0, (det_radius / beam_radius) ** 2)
    return QpdReading(tuple(incident * area / (np.pi * beam_radius ** 2)), incident, full)


def classify_alignment(reading: QpdReading, theta_dom: float = 10.0, theta_eq: float = 0.2,
                       theta_zero: float = 1e-3) -> str:
    q = np.asarray(reading.q, dtype=float)
    total = q.sum()
    i = int(np.argmax(q))
    if total <= theta_zero * reading.reference or q[i] >= theta_dom * (total - q[i]):
        return "poor"
    if np.max(np.abs(q[:, None] - q[None, :])) <= theta_eq * q[i]:
        return "good"
    return "moderate"


# ------------------------------------------------------------ weather -----

def estimate_attenuation(gamma_fso, link: FsoLinkParams, printed: bool = False):
    """Attenuation (natural units per meter) implied by the FSO mean-square.

    Inverts E[I^2] = (I_l' e^{-gamma d} I_0)^2 xi^2/(xi^2+2) e^{4 delta^2}.
    ``printed=True`` returns the printed expression, which is the negative of
    this inversion, for comparison.  A nonpositive mean-square maps to +inf.
    """
    g = np.asarray(gamma_fso, dtype=float)
    d = np.asarray(link.distance, dtype=float)
    _, il_p = fso_path_loss(link)
    xi, i0, d2 = link.xi, link.i0, link.rytov
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.sqrt(xi ** 2 + 2.0) * np.sqrt(g) / (xi * i0 * il_p)
        printed_val = np.log(arg) / d - 2.0 * d2 / d
    if printed:
        return printed_val
    return np.where(g > 0, -printed_val, np.inf)


def classify_weather(gamma_hat_db_km, table: dict | None = None):
    """Nearest reference attenuation in log distance."""
    table = table or DEFAULT_WEATHER_DB_KM
    names = list(table)
    ref = np.log(np.array([table[n] for n in names]))
    g = np.asarray(gamma_hat_db_km, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.where(g > 0, np.log(np.where(g > 0, g, 1.0)), -np.inf)
    idx = np.argmin(np.abs(lg[..., None] - ref), axis=-1)
    idx = np.where(np.isposinf(lg), len(names) - 1, np.where(np.isneginf(lg), 0, idx))
    if np.ndim(idx) == 0:
        return names[int(idx)]
    return np.array(names, dtype=object)[idx]


# ----------------------------------------------------------- decision -----

def assign_fronthaul(alignment: str, weather: str, gamma_fso: float, gamma_rf: float) -> tuple:
    """(eps, eps') for one link."""
    if alignment not in ALIGNMENTS or weather not in WEATHERS:
        raise ValueError(f"unknown class ({alignment}, {weather})")
    if gamma_rf <= gamma_fso:
        return (1, 0)
    if alignment == "poor":
        return (0, 1)
    if alignment == "moderate":
        return (0, 1) if weather in ("snowy", "foggy") else (1, 1)
    if weather == "snowy":
        return (1, 1)
    if weather == "foggy":
        return (0, 1)
    return (1, 0)


@dataclass
class FronthaulAssignment:
    eps: np.ndarray
    eps_rf: np.ndarray
    alignment: list = field(default_factory=list)
    weather: list = field(default_factory=list)
    gamma_hat_db_km: np.ndarray | None = None

    def counts(self) -> dict:
        e, r = np.asarray(self.eps, bool), np.asarray(self.eps_rf, bool)
        return {"n_fso": int(np.sum(e & ~r)), "n_rf": int(np.sum(~e & r)), "n_hybrid": int(np.sum(e & r))}

    def write_csv(self, path, ap_to_an=None) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["link", "an", "alignment", "weather", "eps", "eps_rf"])
            for m in range(len(self.eps)):
                w.writerow([m, "" if ap_to_an is None else int(ap_to_an[m]),
                            self.alignment[m] if self.alignment else "",
                            self.weather[m] if self.weather else "",
                            int(self.eps[m]), int(self.eps_rf[m])])


def fixed_assignment(policy: str, num_aps: int) -> FronthaulAssignment:
    table = {"fso_only": (1, 0), "rf_only": (0, 1), "rf_and_fso": (1, 1)}
    if policy not in table:
        raise ValueError(f"unknown fixed policy {policy!r}")
    e, r = table[policy]
    return FronthaulAssignment(np.full(num_aps, e), np.full(num_aps, r))


def cognitive_assignment(links: FsoLinkParams, gamma_fso, gamma_rf, rng, *, incident=1.0,
                         theta_dom=10.0, theta_eq=0.2, theta_zero=1e-3,
                         rep_offset: dict | None = None, weather_table: dict | None = None) -> FronthaulAssignment:
    """Run the per-link decision for array-valued ``links``."""
    rep_offset = rep_offset or DEFAULT_REP_OFFSET
    gamma_fso = np.asarray(gamma_fso, dtype=float)
    gamma_rf = np.asarray(gamma_rf, dtype=float)
    M = gamma_fso.shape[0]
    w = float(links.beam_waist)
    offs = np.broadcast_to(np.asarray(links.radial_offset, dtype=float), (M,))
    dirs = rng.uniform(0.0, 2 * np.pi, size=M)
    eps = np.zeros(M, dtype=int)
    eps_rf = np.zeros(M, dtype=int)
    al, we, gh = [], [], np.zeros(M)
    for m in range(M):
        reading = qpd_measure(w, offs[m], float(links.receiver_radius), incident, dirs[m])
        a = classify_alignment(reading, theta_dom, theta_eq, theta_zero)
        link_m = links.at(m).with_offset(rep_offset[a] * w)
        g_nat = estimate_attenuation(gamma_fso[m], link_m)
        gh[m] = float(nat_to_db_km(g_nat))
        wth = classify_weather(gh[m], weather_table)
        eps[m], eps_rf[m] = assign_fronthaul(a, wth, gamma_fso[m], gamma_rf[m])
        al.append(a)
        we.append(wth)
    return FronthaulAssignment(eps, eps_rf, al, we, gh)

