"""One network realisation: geometry, large-scale gains and FSO links, and
the statistics the SINR closed form needs once the fronthaul is assigned."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import FsoLinkParams, access_large_scale, fronthaul_rf_large_scale, fso_moment
from .config import SystemConfig
from .estimation import estimation_statistics, lmmse_rf_fronthaul
from .hardware import ChainGains, ClippingConfig, HiConfig, clipping_distortion, hi_distortion
from .perf import LinkStats
from .topology import Topology, apply_mode, generate_topology, split_bandwidth


@dataclass
class NetworkDraw:
    topo: Topology
    beta: np.ndarray            # (M, K)
    beta_am: np.ndarray         # (M,)
    fso: FsoLinkParams          # array-valued over APs
    true_alignment: np.ndarray  # (M,) labels used to draw the offsets
    weather: str


def alignment_labels(counts: tuple, rng) -> np.ndarray:
    """Shuffle (good, moderate, poor) counts onto the APs."""
    labels = np.array(["good"] * counts[0] + ["moderate"] * counts[1] + ["poor"] * counts[2], dtype=object)
    return labels[rng.permutation(labels.size)]


def draw_offsets(labels, cfg: SystemConfig, rng) -> np.ndarray:
    """Radial offsets drawn uniformly inside each label's band (times w_z)."""
    bands = {"good": cfg.fso.band_good, "moderate": cfg.fso.band_moderate, "poor": cfg.fso.band_poor}
    lo = np.array([bands[a][0] for a in labels])
    hi = np.array([bands[a][1] for a in labels])
    return cfg.fso.beam_waist * (lo + (hi - lo) * rng.uniform(size=len(labels)))


def draw_network(cfg: SystemConfig, rng, alignment_counts: tuple | None = None,
                 weather: str = "clear") -> NetworkDraw:
    net = cfg.network
    M = net.num_aps
    if alignment_counts is None:
        alignment_counts = (M, 0, 0)
    if sum(alignment_counts) != M:
        raise ValueError("alignment counts must sum to the number of APs")
    topo = generate_topology(net, rng)
    beta = access_large_scale(topo, cfg.radio, net.h_ap, net.h_ue, rng)
    topo = apply_mode(topo, beta, net)
    beta_am = fronthaul_rf_large_scale(topo, cfg.radio, net.h_an, net.h_ap)
    labels = alignment_labels(alignment_counts, rng)
    offs = draw_offsets(labels, cfg, rng)
    att = cfg.assign.weather_db_km[weather]
    d = np.maximum(topo.ap_an_distance(), 1.0)
    fso = FsoLinkParams.from_config(cfg.fso, d, np.full(M, float(att)), offs)
    return NetworkDraw(topo, beta, beta_am, fso, labels, weather)


def chain_gains(cfg: SystemConfig, beta, sigma_u2, fso_m2, beta_am, phi_fso2, phi_rf2) -> ChainGains:
    """Bussgang gains/distortions of every stage at its nominal full-load input."""
    hw, pw = cfg.hardware, cfg.power
    form = hw.clipping_form
    M = beta.shape[0]
    load = pw.rho_u * beta.sum(axis=1) + sigma_u2
    nd_ap = np.zeros(M)
    mu_an = np.zeros(M)
    nd_an = np.zeros(M)
    mu_an_rf = np.zeros(M)
    nd_an_rf = np.zeros(M)
    resp = hw.responsivity_fso * hw.responsivity_of
    for m in range(M):
        # AP laser driven to P_max^FSO at full load
        ap = clipping_distortion(ClippingConfig(np.sqrt(pw.p_fso_max / load[m]), hw.clip_level, load[m]), form)
        nd_ap[m] = ap.noise_var
        an = clipping_distortion(ClippingConfig(hw.an_laser_gain, hw.clip_level,
                                                pw.p_fso_max * fso_m2[m] + phi_fso2[m]), form)
        mu_an[m] = resp * an.gain
        nd_an[m] = resp ** 2 * an.noise_var
        anr = clipping_distortion(ClippingConfig(hw.an_laser_gain, hw.clip_level,
                                                 pw.p_rf_max * beta_am[m] + phi_rf2[m]), form)
        mu_an_rf[m] = hw.responsivity_of * anr.gain
        nd_an_rf[m] = hw.responsivity_of ** 2 * anr.noise_var
    hi = hi_distortion(HiConfig(hw.hi_quality, pw.p_rf_max))
    return ChainGains(mu_an, mu_an_rf, nd_ap, np.full(M, hi.noise_var), nd_an, nd_an_rf)


def rf_gain_prior(cfg: SystemConfig, draw: NetworkDraw) -> np.ndarray:
    """gamma^RF used before the assignment exists: half the band per link."""
    noise = cfg.radio.thermal_noise(cfg.network.rf_bandwidth / 2.0)
    return lmmse_rf_fronthaul(draw.beta_am, cfg.network.pilot_length, cfg.power.p_rf_max, noise)[1]


def fso_gain(cfg: SystemConfig, draw: NetworkDraw) -> np.ndarray:
    """gamma^FSO as the AN estimates it (LMMSE mean-square)."""
    m2 = fso_moment(draw.fso, 2)
    est = estimation_statistics(draw.beta, m2, draw.beta_am, tau_p=cfg.network.pilot_length,
                                rho_p=cfg.power.rho_p, p_fso_max=cfg.power.p_fso_max,
                                p_rf_max=cfg.power.p_rf_max, sigma_p2=1.0, phi_fso_p2=cfg.fso.noise_var,
                                phi_rf_p2=1.0)
    return est.gamma_fso


def link_stats(cfg: SystemConfig, draw: NetworkDraw, eps, eps_rf):
    """(LinkStats, bw0, bw_m) for a given fronthaul assignment."""
    net = cfg.network
    topo = draw.topo
    M = topo.num_aps
    eps = np.asarray(eps).astype(int)
    eps_rf = np.asarray(eps_rf).astype(int)
    if np.any(eps + eps_rf == 0):
        raise ValueError("every AP needs at least one fronthaul link")
    bw0, bw_m = split_bandwidth(eps_rf, topo.ap_to_an, topo.num_ans, net.rf_bandwidth)
    # APs without RF fronthaul get a placeholder band; their RF terms are masked by eps_rf
    bw_m = np.where(np.isnan(bw_m), net.rf_bandwidth / 2.0, bw_m)
    sigma = np.full(M, float(cfg.radio.thermal_noise(bw0)))
    phi_rf = cfg.radio.thermal_noise(bw_m)
    phi_fso = np.full(M, cfg.fso.noise_var)
    m1, m2, m4 = (fso_moment(draw.fso, n) for n in (1, 2, 4))
    est = estimation_statistics(draw.beta, m2, draw.beta_am, tau_p=net.pilot_length, rho_p=cfg.power.rho_p,
                                p_fso_max=cfg.power.p_fso_max, p_rf_max=cfg.power.p_rf_max,
                                sigma_p2=sigma, phi_fso_p2=phi_fso, phi_rf_p2=phi_rf)
    chain = chain_gains(cfg, draw.beta, sigma, m2, draw.beta_am, phi_fso, phi_rf)
    ls = LinkStats(beta=draw.beta, beta_am=draw.beta_am, fso_m1=m1, fso_m2=m2, fso_m4=m4, est=est,
                   chain=chain, eps=eps, eps_rf=eps_rf, serve=topo.serve, sigma_u2=sigma,
                   phi_fso2=phi_fso, phi_rf2=phi_rf, phi_cpu2=cfg.hardware.cpu_noise_var,
                   rho_u=cfg.power.rho_u, num_antennas=net.num_antennas, estimated_fso=cfg.estimated_fso)
    return ls, bw0, bw_m
