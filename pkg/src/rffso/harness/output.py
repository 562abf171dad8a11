"""Delimited outputs, the JSON report and figures."""
from __future__ import annotations

import csv
import datetime as _dt
import json
from pathlib import Path

import numpy as np

LABELS = ("scenario", "weather", "policy", "solver", "mode")
TRIAL_FIELDS = ("trial", "ee_bits_per_joule", "p_net_w", "bw0_hz", "sum_rate", "n_fso", "n_rf", "n_hybrid",
                "iterations", "converged")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _writer(path: Path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def _label(agg) -> list:
    if agg.scenario is None:
        return [""] * len(LABELS)
    d = agg.scenario.label()
    return [d[k] for k in LABELS]


def _num_ues(aggs) -> int:
    for a in aggs:
        if a.results:
            return len(a.results[0].sinr)
        if a.scenario is not None:
            return a.scenario.config.network.num_ues
    return 0


def write_trials(aggs, path: Path) -> None:
    K = _num_ues(aggs)
    fh, w = _writer(path)
    with fh:
        w.writerow(list(LABELS) + list(TRIAL_FIELDS) + [f"sinr_{k}" for k in range(K)] + [f"rate_{k}" for k in range(K)])
        for a in aggs:
            lab = _label(a)
            for r in a.results:
                row = [r.trial, r.ee, r.p_net, r.bw0, r.sum_rate, r.n_fso, r.n_rf, r.n_hybrid, r.iterations, r.converged]
                w.writerow(lab + [_fmt(v) for v in row] + [_fmt(v) for v in r.sinr] + [_fmt(v) for v in r.rate])


def write_cdf(aggs, path: Path) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(list(LABELS) + ["ee_bits_per_joule", "cumulative_probability"])
        for a in aggs:
            lab = _label(a)
            x, p = a.cdf()
            for xi, pi in zip(x, p):
                w.writerow(lab + [_fmt(xi), _fmt(pi)])


def write_assignment(aggs, path: Path) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(["weather", "scenario", "n_fso", "n_rf", "n_hybrid", "policy", "mode"])
        for a in aggs:
            if not a.results:
                continue
            c = a.mean_counts()
            sc = a.scenario
            w.writerow([sc.weather, sc.name, _fmt(c["n_fso"]), _fmt(c["n_rf"]), _fmt(c["n_hybrid"]), sc.policy, sc.mode])


def write_links(aggs, path: Path) -> None:
    """Per-link decision table of the first trial of each run."""
    fh, w = _writer(path)
    with fh:
        w.writerow(list(LABELS) + ["link", "an", "alignment", "weather_class", "eps", "eps_rf"])
        for a in aggs:
            if not a.results or a.results[0].assignment is None:
                continue
            asg = a.results[0].assignment
            lab = _label(a)
            for m in range(len(asg.eps)):
                w.writerow(lab + [m, "", asg.alignment[m] if asg.alignment else "",
                                  asg.weather[m] if asg.weather else "", int(asg.eps[m]), int(asg.eps_rf[m])])


def write_convergence(aggs, path: Path) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(list(LABELS) + ["iteration", "sum_rate", "ee_bits_per_joule"])
        for a in aggs:
            if not a.results or a.results[0].report is None:
                continue
            lab = _label(a)
            for it, sr, ee in a.results[0].report.rows():
                w.writerow(lab + [_fmt(it), _fmt(sr), _fmt(ee)])


def write_report(aggs, path: Path, config: dict | None, extra: dict | None = None) -> None:
    rep = {
        "generated": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": config,
        "runs": [dict(zip(LABELS, _label(a)), **a.summary(),
                      alignment=list(a.scenario.alignment) if a.scenario else None,
                      trials_requested=a.scenario.trials if a.scenario else 0,
                      seed=a.scenario.seed if a.scenario else None) for a in aggs],
    }
    if extra:
        rep.update(extra)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(rep, fh, indent=2, sort_keys=False, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not serialisable: {type(o)}")


def render_figures(aggs, out: Path) -> list:
    """EE CDFs, mean assignment counts and the first trial's solver trace."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    files = []
    meta = {"Software": None}
    fig, ax = plt.subplots(figsize=(6, 4))
    for a in aggs:
        x, p = a.cdf()
        if x.size:
            lab = "/".join(str(v) for v in _label(a) if v)
            ax.step(np.concatenate([[x[0]], x]) / 1e6, np.concatenate([[0.0], p]), where="post", label=lab)
    ax.set_xlabel("Energy efficiency [Mbit/J]")
    ax.set_ylabel("CDF")
    ax.grid(alpha=0.3)
    if aggs and any(a.results for a in aggs):
        ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(out / "ee_cdf.png", dpi=120, metadata=meta)
    plt.close(fig)
    files.append(out / "ee_cdf.png")

    rows = [(a, a.mean_counts()) for a in aggs if a.results]
    fig, ax = plt.subplots(figsize=(6, 4))
    if rows:
        idx = np.arange(len(rows))
        bottom = np.zeros(len(rows))
        for key, name in (("n_fso", "FSO-only"), ("n_rf", "RF-only"), ("n_hybrid", "RF-FSO")):
            vals = np.array([c[key] for _, c in rows])
            ax.bar(idx, vals, bottom=bottom, label=name)
            bottom += vals
        ax.set_xticks(idx, [f"{a.scenario.name}/{a.scenario.weather}" for a, _ in rows], rotation=45, fontsize=7)
        ax.legend(fontsize=7)
    ax.set_ylabel("mean links per trial")
    fig.tight_layout()
    fig.savefig(out / "assignment.png", dpi=120, metadata=meta)
    plt.close(fig)
    files.append(out / "assignment.png")

    traces = [(a, a.results[0].report) for a in aggs if a.results and a.results[0].report and a.results[0].report.trace]
    if traces:
        fig, ax = plt.subplots(figsize=(6, 4))
        for a, rep in traces:
            it = [r[0] for r in rep.rows()]
            ee = [r[2] / 1e6 for r in rep.rows()]
            ax.plot(it, ee, label="/".join(str(v) for v in _label(a) if v))
        ax.set_xlabel("iteration")
        ax.set_ylabel("EE [Mbit/J]")
        ax.legend(fontsize=6)
        fig.tight_layout()
        fig.savefig(out / "convergence.png", dpi=120, metadata=meta)
        plt.close(fig)
        files.append(out / "convergence.png")
    return files


def emit_outputs(aggs, out_dir, config: dict | None = None, figures: bool = True, extra: dict | None = None) -> dict:
    """Write every output file for a list of aggregates; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in ("trials.csv", "cdf.csv", "assignment.csv", "links.csv",
                                           "convergence.csv", "report.json")}
    write_trials(aggs, paths["trials.csv"])
    write_cdf(aggs, paths["cdf.csv"])
    write_assignment(aggs, paths["assignment.csv"])
    write_links(aggs, paths["links.csv"])
    write_convergence(aggs, paths["convergence.csv"])
    write_report(aggs, paths["report.json"], config, extra)
    if figures:
        for f in render_figures(aggs, out):
            paths[f.name] = f
    return paths


def read_trials(path) -> list[dict]:
    """Parse trials.csv back into dicts of floats (label columns kept as text)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        out.append({k: (v if k in LABELS else float(v)) for k, v in r.items()})
    return out
