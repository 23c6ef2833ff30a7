"""Static SVG figures for a run directory; byte-identical across replays."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Dict, List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "svg.hashsalt": "ksblowup",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (5.5, 3.6),
}
META = {"Date": None, "Creator": None}


def _save(fig, path) -> str:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=META)
    plt.close(fig)
    return str(path)


def riccati_trajectory(d1: float, d2: float, phi0: float, t: np.ndarray) -> np.ndarray:
    """Solution of phi' = d1 phi^2 - d2 from phi0 > d3; nan past its blow-up."""
    d3 = math.sqrt(d2 / d1)
    k = (phi0 - d3) / (phi0 + d3)
    e = k * np.exp(2.0 * d1 * d3 * t)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = d3 * (1.0 + e) / (1.0 - e)
    out[e >= 1.0] = np.nan
    return out


def plot_max_u(series: Dict[str, tuple], path, bound: Optional[float] = None) -> str:
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for solver, (t, m) in sorted(series.items()):
            if len(t):
                ax.semilogy(t, m, marker=".", ms=3, lw=1, label=f"{solver}-solver")
        if bound is not None:
            ax.axvline(bound, color="k", ls="--", lw=1, label="certified bound")
        ax.set_xlabel("t")
        ax.set_ylabel("max u")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(loc="best")
        return _save(fig, path)


def plot_phi(curves: Dict[str, tuple], path, cert: Optional[dict] = None) -> str:
    """phi(s0, t) per (gamma, s0); d3 and the comparison trajectory if certified."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        t_all = []
        for label, (t, phi) in sorted(curves.items()):
            if len(t):
                ax.semilogy(t, np.maximum(phi, 1e-300), lw=1, label=label)
                t_all.extend(t)
        if cert is not None and t_all:
            ax.axhline(cert["d3"], color="k", ls=":", lw=1, label="d3")
            tt = np.linspace(0.0, max(t_all), 400)
            traj = riccati_trajectory(cert["d1"], cert["d2"], cert["phi0"], tt)
            ax.semilogy(tt, traj, color="k", ls="--", lw=1, label="comparison")
        ax.set_xlabel("t")
        ax.set_ylabel("phi(s0, t)")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(loc="best", fontsize=7)
        return _save(fig, path)


def plot_margins(margins: Dict[str, tuple], path) -> str:
    """Check margins scaled by their tolerance scale, sign-preserving log."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for name, (t, m) in sorted(margins.items()):
            if len(t):
                m = np.asarray(m, dtype=float)
                ax.plot(t, np.sign(m) * np.log10(1.0 + np.abs(m)), marker=".", ms=3, lw=0.8, label=name)
        ax.axhline(0.0, color="k", lw=0.8)
        ax.set_xlabel("t")
        ax.set_ylabel("sign(margin) log10(1 + |margin|)")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(loc="best", fontsize=7)
        return _save(fig, path)


def render_run(run_dir) -> List[str]:
    """Rebuild every figure from the persisted tables of ``run_dir``."""
    from . import io

    run_dir = Path(run_dir)
    rows = io.read_table(run_dir / io.TIMESERIES) if (run_dir / io.TIMESERIES).exists() else []
    checks = io.read_table(run_dir / io.CHECKS) if (run_dir / io.CHECKS).exists() else []
    cert = io.read_json(run_dir / io.CERTIFICATE) if (run_dir / io.CERTIFICATE).exists() else None

    max_u: Dict[str, tuple] = {}
    phi: Dict[str, tuple] = {}
    seen = set()
    for r in rows:
        key = (r["solver"], r["t"])
        if key not in seen:
            seen.add(key)
            t, m = max_u.setdefault(r["solver"], ([], []))
            t.append(float(r["t"]))
            m.append(float(r["max_u"]))
        if r.get("gamma"):
            label = f"{r['solver']} g={float(r['gamma']):.4g} s0={float(r['s0']):.3g}"
            t, p = phi.setdefault(label, ([], []))
            t.append(float(r["t"]))
            p.append(float(r["phi"]))

    margins: Dict[str, tuple] = {}
    for r in checks:
        t, m = margins.setdefault(r["name"], ([], []))
        t.append(float(r["t"]))
        m.append(float(r["margin"]))

    plots = run_dir / "plots"
    plots.mkdir(exist_ok=True)
    bound = cert["certified_bound"] if cert else None
    phi_cert = None
    if cert:
        phi_cert = {k: cert[k] for k in ("d1", "d2", "d3", "phi0")}
    return [
        plot_max_u(max_u, plots / "max_u.svg", bound),
        plot_phi(phi, plots / "phi.svg", phi_cert),
        plot_margins(margins, plots / "margins.svg"),
    ]
