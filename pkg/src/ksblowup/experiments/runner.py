"""Run orchestration: solvers, diagnostics at the recording cadence, persistence."""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import diagnostics as dg
from ..blowup import BlowupReport
from ..certificate import BlowupCertificate, certify, select_gamma
from ..errors import KSBlowupError
from ..model import ModelParameters, RadialGrid, make_initial_datum
from ..usolver import run_u
from ..wsolver import SGrid, WState, run_w, u_to_w, w_to_u
from . import io
from .config import RunConfig, check_config

WORKERS_ENV = "KSBLOWUP_WORKERS"

TS_COLUMNS = ["t", "solver", "max_u", "mass", "mean", "ws0", "w_R",
              "gamma", "s0", "phi", "i1", "i2", "i3", "i4", "lambda_term"]
CHECK_COLUMNS = ["solver", "name", "t", "lhs", "rhs", "margin", "tol", "passed"]
CROSS_COLUMNS = ["t", "max_abs_dev", "w_scale", "rel_dev"]
SUMMARY_BASE = ["cell", "regime", "detected", "reason", "T_hat", "min_rel_margin",
                "checks_passed", "error"]


@dataclass
class RunArtifactSet:
    directory: Path
    config_text: str
    timeseries: List[dict] = field(default_factory=list)
    checks: List[dict] = field(default_factory=list)
    crosscheck: List[dict] = field(default_factory=list)
    reports: Dict[str, BlowupReport] = field(default_factory=dict)
    certificate: Optional[BlowupCertificate] = None
    notes: List[str] = field(default_factory=list)
    plots: List[str] = field(default_factory=list)

    @property
    def checks_passed(self) -> bool:
        return all(r["passed"] for r in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.checks_passed else 1

    def min_rel_margin(self) -> float:
        # tol carries the check's scale; zero-rhs checks would otherwise read -1 on rounding noise
        vals = [r["margin"] / (abs(r["lhs"]) + abs(r["rhs"]) + r["tol"] + dg.TOL_FLOOR)
                for r in self.checks if math.isfinite(r["margin"])]
        return min(vals, default=math.inf)


def diagnostics_plan(cfg: RunConfig, cert: Optional[BlowupCertificate]) -> Tuple[tuple, tuple]:
    p = cfg.params
    gammas = cfg.diagnostics.gammas
    if gammas is None:
        if cert is not None:
            gammas = (cert.gamma,)
        elif p.regime.certifiable:
            gammas = (select_gamma(p)[0],)
        else:
            gammas = (0.5 * (2.0 - 4.0 / p.n),)
    s0s = cfg.diagnostics.s0s
    if s0s is None:
        S = p.R ** p.n
        s0s = (0.01 * S, 0.1 * S)
        if cert is not None:
            s0s = (cert.s0,) + s0s
    return tuple(gammas), tuple(s0s)


class _Collector:
    """Recorder turning every snapshot into table rows and check records."""

    def __init__(self, solver, p, grid, sgrid, gammas, s0s):
        self.solver = solver
        self.p = p
        self.grid = grid
        self.sgrid = sgrid
        self.gammas = gammas
        self.s0s = s0s
        self.rows: List[dict] = []
        self.checks: List[dict] = []
        self.profiles: List[tuple] = []
        self.times: List[float] = []
        self.masses: List[float] = []
        self.samples: Dict[tuple, List[dg.FunctionalSample]] = {}

    def _check(self, rec: dg.CheckRecord):
        row = {"solver": self.solver}
        row.update(rec.__dict__)
        self.checks.append(row)

    def __call__(self, snap):
        t = float(snap.t)
        if self.solver == "u":
            u = snap.u
            w = WState(self.sgrid, u_to_w(u, self.sgrid).w, t)
        else:
            w = WState(self.sgrid, snap.w.w, t)
            u = w_to_u(w, self.grid)
        if self.times and t <= self.times[-1]:
            return  # duplicate stop snapshot
        self.times.append(t)
        self.masses.append(float(snap.mass))
        self.profiles.append((t, np.array(w.w)))
        base = {"t": t, "solver": self.solver, "max_u": float(snap.max_u), "mass": float(snap.mass),
                "mean": float(snap.mean), "ws0": float(w.slopes()[0]), "w_R": float(w.w[-1])}
        for rec in dg.check_ws_estimate(w):
            self._check(rec)
        self._check(dg.check_monotone(u, t))
        for g in self.gammas:
            for s0 in self.s0s:
                smp = dg.compute_I_terms(w, self.p, g, s0)
                self.samples.setdefault((g, s0), []).append(smp)
                row = dict(base)
                row.update({"gamma": g, "s0": s0, "phi": smp.phi, "i1": smp.i1, "i2": smp.i2,
                            "i3": smp.i3, "i4": smp.i4, "lambda_term": smp.lambda_term})
                self.rows.append(row)
                for rec in dg.check_sample(smp, self.p):
                    self._check(rec)
        if not self.gammas or not self.s0s:
            self.rows.append(base)

    def finish(self):
        for rec in dg.check_mass_bound(self.times, self.masses, self.p):
            self._check(rec)


def _crosscheck(cu: _Collector, cw: _Collector) -> List[dict]:
    w_of = {t: w for t, w in cw.profiles}
    rows = []
    for t, wu in cu.profiles:
        if t in w_of:
            ww = w_of[t]
            dev = float(np.max(np.abs(wu - ww)))
            scale = float(np.max(np.abs(ww)))
            rows.append({"t": t, "max_abs_dev": dev, "w_scale": scale,
                         "rel_dev": dev / scale if scale > 0 else math.inf})
    return rows


def execute(cfg: RunConfig) -> RunArtifactSet:
    """Run the solver(s) and evaluate diagnostics without touching the disk."""
    check_config(cfg)
    p = cfg.params
    art = RunArtifactSet(Path(cfg.output), cfg.source)
    cert = None
    if cfg.certificate or cfg.r1 == "certificate":
        if p.regime.certifiable:
            cert = certify(p, cfg.cert_gamma)
        else:
            art.notes.append(f"no certificate: parameters are {p.regime.value}")
    art.certificate = cert
    r1 = cert.r1 if cfg.r1 == "certificate" else cfg.r1
    grid = cfg.grid.build(p.R, p.n)
    sgrid = SGrid.from_radial(grid)
    u0 = make_initial_datum(p, cfg.datum_spec(r1), grid)
    gammas, s0s = diagnostics_plan(cfg, cert)

    collectors = {}
    if cfg.solver in ("u", "both"):
        c = collectors["u"] = _Collector("u", p, grid, sgrid, gammas, s0s)
        art.reports["u"] = run_u(p, u0, cfg.control, c)
    if cfg.solver in ("w", "both"):
        c = collectors["w"] = _Collector("w", p, grid, sgrid, gammas, s0s)
        art.reports["w"] = run_w(p, u_to_w(u0, sgrid), cfg.control, c)
    for c in collectors.values():
        c.finish()
        art.timeseries.extend(c.rows)
        art.checks.extend(c.checks)
    if "u" in collectors and "w" in collectors:
        art.crosscheck = _crosscheck(collectors["u"], collectors["w"])
    art._collectors = collectors
    art._sgrid = sgrid
    return art


def persist(art: RunArtifactSet, plots: bool = True) -> RunArtifactSet:
    d = art.directory
    d.mkdir(parents=True, exist_ok=True)
    (d / io.CONFIG).write_text(art.config_text)
    io.write_table(d / io.TIMESERIES, TS_COLUMNS, art.timeseries, {"table": "timeseries"})
    io.write_table(d / io.CHECKS, CHECK_COLUMNS, art.checks,
                   {"table": "checks", "relation": "lhs >= rhs", "passed": art.checks_passed})
    if art.crosscheck:
        io.write_table(d / io.CROSSCHECK, CROSS_COLUMNS, art.crosscheck,
                       {"table": "crosscheck", "norm": "max |w_u - w_w| / max |w_w|"})
    blow = {k: v.summary() for k, v in art.reports.items()}
    if len(art.reports) == 2 and all(r.detected for r in art.reports.values()):
        tu, tw = art.reports["u"].T_hat, art.reports["w"].T_hat
        blow["T_hat_rel_diff"] = abs(tu - tw) / max(tu, tw)
    blow["notes"] = art.notes
    io.write_json(d / io.BLOWUP, blow)
    if art.certificate is not None:
        io.write_json(d / io.CERTIFICATE, art.certificate.to_dict())
    collectors = getattr(art, "_collectors", {})
    if collectors:
        io.save_profiles(d / io.PROFILES, art._sgrid.nodes,
                         {k: c.profiles for k, c in collectors.items()})
    if plots:
        from .plotting import render_run
        art.plots = render_run(d)
    return art


def run(cfg: RunConfig, plots: bool = True) -> RunArtifactSet:
    return persist(execute(cfg), plots=plots)


# ---- verification of a persisted run --------------------------------------

def verify(run_dir) -> dg.InequalityReport:
    """Re-evaluate every inequality from the persisted series and profiles."""
    from .config import parse_config

    run_dir = Path(run_dir)
    cfg = parse_config((run_dir / io.CONFIG).read_text())
    p = cfg.params
    report = dg.InequalityReport()
    rows = io.read_table(run_dir / io.TIMESERIES)
    seen = {}
    for r in rows:
        t = float(r["t"])
        seen.setdefault(r["solver"], {})[t] = float(r["mass"])
        if r["gamma"]:
            smp = dg.FunctionalSample(
                t, float(r["gamma"]), float(r["s0"]), float(r["phi"]), float(r["i1"]),
                float(r["i2"]), float(r["i3"]), float(r["i4"]), float(r["lambda_term"]),
                float(r["mean"]))
            report.extend(dg.check_sample(smp, p))
    for series in seen.values():
        ts = sorted(series)
        report.extend(dg.check_mass_bound(ts, [series[t] for t in ts], p))
    prof_path = run_dir / io.PROFILES
    if prof_path.exists():
        prof = io.load_profiles(prof_path)
        sgrid = SGrid(prof["s_nodes"], p.n)
        grid = RadialGrid(np.maximum(sgrid.nodes, 0.0) ** (1.0 / p.n), p.n)
        for solver in ("u", "w"):
            if f"{solver}_t" not in prof:
                continue
            for t, wv in zip(prof[f"{solver}_t"], prof[f"{solver}_w"]):
                w = WState(sgrid, wv, float(t))
                report.extend(dg.check_ws_estimate(w))
                report.add(dg.check_monotone(w_to_u(w, grid), float(t)))
    return report


# ---- sweeps ----------------------------------------------------------------

INT_AXES = {"n", "cells"}


def parse_axis(text: str) -> Tuple[str, list]:
    if "=" not in text:
        raise KSBlowupError(f"axis must look like name=v1,v2,..., got {text!r}")
    name, vals = text.split("=", 1)
    name = name.strip()
    conv = int if name in INT_AXES else float
    values = [conv(v) for v in vals.split(",") if v.strip()]
    return name, values


def _sweep_cell(args):
    index, cfg, overrides = args
    row = {"cell": index}
    row.update(overrides)
    try:
        c = cfg.with_overrides(**overrides)
        c = replace(c, output=str(Path(cfg.output) / f"cell_{index:03d}"))
        row["regime"] = c.params.regime.value
        art = run(c, plots=False)
        rep = art.reports.get("u") or art.reports.get("w")
        row.update({"detected": rep.detected, "reason": rep.reason, "T_hat": rep.T_hat,
                    "min_rel_margin": art.min_rel_margin(), "checks_passed": art.checks_passed,
                    "error": ""})
    except Exception as exc:  # reported per cell; the sweep continues
        row.setdefault("regime", "")
        row.update({"detected": "", "reason": "", "T_hat": math.nan, "min_rel_margin": math.nan,
                    "checks_passed": False, "error": f"{type(exc).__name__}: {exc}"})
    return row


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def sweep(cfg: RunConfig, axes: Sequence[Tuple[str, list]], workers: Optional[int] = None) -> List[dict]:
    """One run per point of the Cartesian product of ``axes``; summary rows in order."""
    names = [a for a, _ in axes]
    points = list(itertools.product(*[v for _, v in axes])) if axes else []
    jobs = [(i, cfg, dict(zip(names, pt))) for i, pt in enumerate(points)]
    workers = workers or worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(j) for j in jobs]
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    io.write_table(out / io.SUMMARY, ["cell"] + names + SUMMARY_BASE[1:], rows,
                   {"table": "sweep summary", "axes": {a: v for a, v in axes}})
    return rows
