"""Explicit conservative finite-volume solver for the density u.

The flux through a sphere of radius r is F = r^{n-1} (u_r - u v_r): the
diffusive part is central, the advective part upwinded with a minmod
reconstruction. Reaction lambda u - mu u^kappa is applied pointwise after
the transport update.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import _kernels
from .blowup import (DT_COLLAPSE, HORIZON, NON_FINITE, THRESHOLD_HIT, BlowupReport,
                     fit_power_law)
from .errors import ParameterError, StepFailure
from .model import ModelParameters, RadialProfile, sphere_area

LIMITERS = {"minmod": 1, "none": 0}
GROWTH_LOG_SIZE = 16384


@dataclass(frozen=True)
class StepControl:
    """Time-step safety factors, stopping rules and recording cadence.

    ``blowup_threshold`` is a multiple of the initial maximum density.
    ``record_every`` of ``None`` records 100 evenly spaced snapshots.
    """

    cfl_diffusion: float = 0.6
    cfl_advection: float = 0.25
    dt_min: float = 1e-15
    blowup_threshold: float = 1e6
    T_end: float = 1.0
    record_every: Optional[float] = None
    limiter: str = "minmod"
    chunk_steps: int = 2_000_000

    def __post_init__(self):
        for name in ("cfl_diffusion", "cfl_advection"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ParameterError(name, f"must lie in (0, 1), got {v!r}")
        for name in ("dt_min", "blowup_threshold", "T_end"):
            v = getattr(self, name)
            if not v > 0:
                raise ParameterError(name, f"must be positive, got {v!r}")
        if self.record_every is not None and not self.record_every > 0:
            raise ParameterError("record_every", "must be positive")
        if self.limiter not in LIMITERS:
            raise ParameterError("limiter", f"unknown limiter {self.limiter!r}")

    @property
    def record_interval(self) -> float:
        return self.record_every if self.record_every is not None else self.T_end / 100


@dataclass(frozen=True)
class UState:
    u: RadialProfile
    t: float
    mean: float
    step_count: int = 0
    clipped_mass: float = 0.0

    def __post_init__(self):
        if self.t < 0:
            raise ParameterError("t", "time must be nonnegative")
        if np.any(self.u.values < 0):
            raise ParameterError("u", "density must be nonnegative")


class USnapshot(NamedTuple):
    """Recorder payload: (t, u, mean, max u, total mass)."""

    t: float
    u: RadialProfile
    mean: float
    max_u: float
    mass: float


class _Operator:
    """Grid geometry and scratch buffers for one run; not shared across runs."""

    def __init__(self, grid, p: ModelParameters, limiter: str):
        if grid.n != p.n:
            raise ParameterError("grid", f"grid dimension {grid.n} differs from n={p.n}")
        N = grid.n_cells
        self.grid = grid
        self.n = float(grid.n)
        self.Rn = grid.R ** grid.n
        self.vols = np.ascontiguousarray(grid.shell_volumes)
        self.inv_vols = 1.0 / self.vols
        self.area = grid.nodes ** (grid.n - 1)
        self.inv_area = np.zeros(N + 1)
        self.inv_area[1:] = 1.0 / self.area[1:]
        self.ball = grid.nodes ** grid.n / grid.n
        self.half_w = 0.5 * grid.widths
        dc = np.diff(grid.centers)
        self.inv_dc = np.zeros(N + 1)
        self.inv_dc[1:N] = 1.0 / dc
        self.kdiff = np.zeros(N + 1)
        self.kdiff[1:N] = self.area[1:N] * self.inv_dc[1:N]
        self.diff_rate = float(np.max((self.kdiff[:-1] + self.kdiff[1:]) / self.vols))
        self.lam, self.mu, self.kappa = float(p.lam), float(p.mu), float(p.kappa)
        self.limiter = LIMITERS[limiter]
        self.pre = np.empty(N + 1)
        self.vr = np.empty(N + 1)
        self.flux = np.empty(N + 1)
        self.mass_factor = sphere_area(grid.n)

    def fluxes(self, u):
        return _kernels.u_fluxes(u, self.vols, self.ball, self.inv_area, self.kdiff, self.half_w,
                                 self.inv_dc, self.n / self.Rn, self.limiter, self.inv_vols,
                                 self.pre, self.vr, self.flux)

    def select_dt(self, u, ctrl: StepControl) -> float:
        _, adv, umax = self.fluxes(u)
        return _kernels.u_select_dt(adv, umax, self.diff_rate, ctrl.cfl_diffusion,
                                    ctrl.cfl_advection, self.lam, self.mu, self.kappa)

    def advance(self, u, t, t_stop, ctrl, threshold, g_t, g_u, g_state):
        return _kernels.u_advance(
            u, t, t_stop, ctrl.chunk_steps, self.vols, self.ball, self.inv_area, self.kdiff,
            self.half_w, self.inv_dc, self.n / self.Rn, self.inv_vols, self.lam, self.mu,
            self.kappa, self.limiter, self.diff_rate, ctrl.cfl_diffusion, ctrl.cfl_advection,
            ctrl.dt_min, threshold, g_t, g_u, g_state, self.pre, self.vr, self.flux)

    def mass(self, u) -> float:
        return self.mass_factor * _kernels.compensated_sum(self.vols * u)

    def mean(self, u) -> float:
        return self.n * _kernels.compensated_sum(self.vols * u) / self.Rn


def stable_dt(state: UState, p: ModelParameters, ctrl: StepControl) -> float:
    """Largest explicit step allowed by the diffusion, advection and reaction limits."""
    op = _Operator(state.u.grid, p, ctrl.limiter)
    return op.select_dt(np.array(state.u.values), ctrl)


def step_u(state: UState, p: ModelParameters, ctrl: StepControl,
           dt: Optional[float] = None) -> UState:
    """Advance one explicit step; ``dt`` defaults to :func:`stable_dt`."""
    op = _Operator(state.u.grid, p, ctrl.limiter)
    u = np.array(state.u.values)
    limit = op.select_dt(u, ctrl)
    if dt is None:
        dt = limit
    if dt < ctrl.dt_min:
        raise StepFailure(state.t, dt)
    clipped, _ = _kernels.u_apply(u, dt, op.inv_vols, op.vols, op.flux, op.lam, op.mu, op.kappa)
    prof = RadialProfile(state.u.grid, u)
    return UState(prof, state.t + dt, op.mean(u), state.step_count + 1,
                  state.clipped_mass + op.mass_factor * clipped)


def _snapshot(op: _Operator, u, t) -> USnapshot:
    prof = RadialProfile(op.grid, u)
    return USnapshot(t, prof, op.mean(u), float(u.max()), op.mass(u))


def run_u(p: ModelParameters, u0: RadialProfile, ctrl: StepControl,
          recorder: Optional[Callable[[USnapshot], None]] = None) -> BlowupReport:
    """Integrate from ``u0`` until blow-up is detected or ``ctrl.T_end``.

    The recorder receives a :class:`USnapshot` at t = 0, at every multiple of
    the recording interval, and at the stopping time.
    """
    if np.any(u0.values < 0):
        raise ParameterError("u0", "initial density must be nonnegative")
    op = _Operator(u0.grid, p, ctrl.limiter)
    u = np.array(u0.values)
    u_init = float(u.max())
    threshold = ctrl.blowup_threshold * u_init
    g_t = np.zeros(GROWTH_LOG_SIZE)
    g_u = np.zeros(GROWTH_LOG_SIZE)
    g_t[0], g_u[0] = 0.0, u_init
    g_state = np.array([1.0, u_init])
    if recorder is not None:
        recorder(_snapshot(op, u, 0.0))

    interval = ctrl.record_interval
    t = 0.0
    k = 1
    steps = 0
    clipped = 0.0
    status = _kernels.RUNNING
    while True:
        t_stop = min(k * interval, ctrl.T_end)
        t, status, nsteps, clip, _ = op.advance(u, t, t_stop, ctrl, threshold, g_t, g_u, g_state)
        steps += nsteps
        clipped += clip
        if status != _kernels.RUNNING:
            break
        if t < t_stop:
            continue
        if recorder is not None:
            recorder(_snapshot(op, u, t))
        if t_stop >= ctrl.T_end:
            break
        k += 1

    finite = bool(np.all(np.isfinite(u)))
    if status != _kernels.RUNNING and recorder is not None and finite:
        recorder(_snapshot(op, u, t))
    count = int(g_state[0])
    return _report(status, t, u, u_init, steps, op.mass_factor * clipped,
                   g_t[:count].copy(), g_u[:count].copy())


def _report(status, t, u, u_init, steps, clipped, g_t, g_u) -> BlowupReport:
    reason = {
        _kernels.RUNNING: HORIZON,
        _kernels.THRESHOLD: THRESHOLD_HIT,
        _kernels.DT_COLLAPSE: DT_COLLAPSE,
        _kernels.NONFINITE: NON_FINITE,
    }[status]
    detected = status != _kernels.RUNNING
    max_u = float(np.max(u)) if np.all(np.isfinite(u)) else math.inf
    T_hat = alpha = coeff = math.nan
    if detected:
        T_hat, alpha, coeff = fit_power_law(g_t, g_u) if g_t.size >= 3 else (t, math.nan, math.nan)
        T_hat = max(T_hat, t)
    return BlowupReport(detected, reason, float(t), max_u, u_init, int(steps),
                        T_hat, alpha, coeff, clipped, g_t, g_u)
