"""Mass-accumulation formulation: w(s) = int_0^{s^{1/n}} rho^{n-1} u drho.

In s = r^n the density is u = n w_s, and the system collapses to one scalar
degenerate parabolic equation

    w_t = n^2 s^{2-2/n} w_ss + (n w - mean s) w_s + lam w - n^{kappa-1} mu int_0^s w_s^kappa

with w(0) = 0 and w(R^n) driven by the mass balance. This solver is kept
independent of the finite-volume u solver so the two can check each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import _kernels
from .errors import ParameterError, StepFailure
from .model import ModelParameters, RadialGrid, RadialProfile, sphere_area
from .usolver import GROWTH_LOG_SIZE, StepControl, _report

MONOTONE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SGrid:
    """Nodes 0 = s_0 < ... < s_M = R^n of the mass variable."""

    nodes: np.ndarray
    n: int

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ParameterError("sgrid", "need at least two intervals")
        if nodes[0] != 0.0:
            raise ParameterError("sgrid", "first node must be 0")
        if not np.all(np.diff(nodes) > 0):
            raise ParameterError("sgrid", "nodes must be strictly increasing")

    @classmethod
    def from_radial(cls, grid: RadialGrid) -> "SGrid":
        """Nodes at the images r_i^n of the cell faces (matched resolution)."""
        nodes = grid.nodes ** grid.n
        nodes[0] = 0.0
        return cls(nodes, grid.n)

    @classmethod
    def graded(cls, M: int, R: float, n: int) -> "SGrid":
        """s_j = R^n (j/M)^n, i.e. uniform in r = s^{1/n}."""
        nodes = R ** n * (np.arange(M + 1) / M) ** n
        nodes[-1] = R ** n
        return cls(nodes, n)

    @property
    def S(self) -> float:
        return float(self.nodes[-1])

    @property
    def R(self) -> float:
        return self.S ** (1.0 / self.n)

    @property
    def M(self) -> int:
        return self.nodes.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    def matches(self, grid: RadialGrid) -> bool:
        if grid.n != self.n or grid.n_cells != self.M:
            return False
        return bool(np.allclose(grid.nodes ** grid.n, self.nodes, rtol=1e-13, atol=0.0))


@dataclass(frozen=True, eq=False)
class WState:
    grid: SGrid
    w: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        if w.shape != self.grid.nodes.shape:
            raise ParameterError("w", f"expected {self.grid.nodes.size} nodal values")
        if not np.all(np.isfinite(w)):
            raise ParameterError("w", "non-finite values")
        if w[0] != 0.0:
            raise ParameterError("w", "w(0) must vanish")
        if self.t < 0:
            raise ParameterError("t", "time must be nonnegative")

    @property
    def mean(self) -> float:
        """Spatial mean of u, n w(R^n) / R^n."""
        return self.grid.n * float(self.w[-1]) / self.grid.S

    @property
    def mass(self) -> float:
        return sphere_area(self.grid.n) * float(self.w[-1])

    def slopes(self) -> np.ndarray:
        return np.diff(self.w) / self.grid.widths

    def density(self) -> np.ndarray:
        """Interval averages of u = n w_s."""
        return self.grid.n * self.slopes()

    def is_monotone(self, tol: float = MONOTONE_TOL) -> bool:
        return bool(np.all(np.diff(self.w) >= -tol * abs(self.w[-1])))


class WSnapshot(NamedTuple):
    """Recorder payload: (t, w, mean, max of n w_s, total mass)."""

    t: float
    w: WState
    mean: float
    max_u: float
    mass: float


def u_to_w(u: RadialProfile, sgrid: SGrid) -> WState:
    """Cumulative shell integrals of a cell-averaged density at the s-nodes.

    Exact for the piecewise-constant representation of ``u``.
    """
    if np.any(u.values < 0):
        raise ParameterError("u", "density must be nonnegative")
    grid = u.grid
    if grid.n != sgrid.n:
        raise ParameterError("sgrid", "dimension mismatch")
    if not math.isclose(grid.R ** grid.n, sgrid.S, rel_tol=1e-12):
        raise ParameterError("sgrid", "s-grid does not end at R^n")
    cum = np.empty(grid.n_cells + 1)
    _kernels.compensated_cumsum(np.ascontiguousarray(grid.shell_volumes * u.values), cum)
    if sgrid.matches(grid):
        w = cum
    else:
        # piecewise-constant u makes w piecewise linear in s
        s_faces = grid.nodes ** grid.n
        s_faces[-1] = sgrid.S
        w = np.interp(sgrid.nodes, s_faces, cum)
    w[0] = 0.0
    w = np.maximum.accumulate(w)
    return WState(sgrid, w, 0.0)


def w_to_u(state: WState, grid: RadialGrid) -> RadialProfile:
    """Cell averages of u = n w_s on ``grid``.

    On matched grids this is the exact difference quotient; otherwise w is
    interpolated with a monotone cubic (PCHIP) before differencing.
    """
    sgrid = state.grid
    if grid.n != sgrid.n:
        raise ParameterError("grid", "dimension mismatch")
    if not math.isclose(grid.R ** grid.n, sgrid.S, rel_tol=1e-12):
        raise ParameterError("grid", "radial grid does not match R^n")
    if sgrid.matches(grid):
        u = state.density()
    else:
        s_faces = np.clip(grid.nodes ** grid.n, 0.0, sgrid.S)
        W = PchipInterpolator(sgrid.nodes, state.w)(s_faces)
        u = grid.n * np.diff(W) / np.diff(s_faces)
    return RadialProfile(grid, np.maximum(u, 0.0))


class _WOperator:
    def __init__(self, sgrid: SGrid, p: ModelParameters):
        if sgrid.n != p.n:
            raise ParameterError("sgrid", f"dimension {sgrid.n} differs from n={p.n}")
        if not math.isclose(sgrid.S, p.R ** p.n, rel_tol=1e-12):
            raise ParameterError("sgrid", "s-grid does not end at R^n")
        M = sgrid.M
        self.grid = sgrid
        self.s = np.ascontiguousarray(sgrid.nodes)
        self.ds = np.ascontiguousarray(sgrid.widths)
        self.inv_ds = 1.0 / self.ds
        n = float(p.n)
        self.n = n
        self.n_over_S = n / sgrid.S
        # degenerate coefficient n^2 s^{2-2/n}; the node s = 0 is never used
        dcoef = n * n * self.s[1:M] ** (2.0 - 2.0 / n)
        self.dfac = np.zeros(M + 1)
        self.dfac[1:M] = 2.0 * dcoef / (self.ds[:-1] + self.ds[1:])
        self.drate = np.zeros(M + 1)
        self.drate[1:M] = 2.0 * dcoef / (self.ds[:-1] * self.ds[1:])
        self.lam, self.mu, self.kappa = float(p.lam), float(p.mu), float(p.kappa)
        self.damp = n ** (self.kappa - 1.0) * self.mu
        self.slope = np.empty(M)
        self.out = np.empty(M + 1)

    def rate(self, w):
        return _kernels.w_rate(w, self.s, self.inv_ds, self.dfac, self.drate, self.n,
                               self.n_over_S, self.lam, self.damp, self.kappa, self.slope,
                               self.out)

    def select_dt(self, w, cfl: float) -> float:
        rate, smax = self.rate(w)
        dt = cfl / rate if rate > 0 else math.inf
        react = self.lam + self.mu * self.kappa * (self.n * smax) ** (self.kappa - 1.0)
        if react > 0:
            dt = min(dt, 0.5 / react)
        return dt

    def advance(self, w, t, t_stop, ctrl, threshold, g_t, g_u, g_state):
        return _kernels.w_advance(
            w, t, t_stop, ctrl.chunk_steps, self.s, self.inv_ds, self.dfac, self.drate, self.n,
            self.n_over_S, self.lam, self.damp, self.mu, self.kappa, ctrl.cfl_diffusion,
            ctrl.dt_min, threshold, g_t, g_u, g_state, self.slope, self.out)

    def snapshot(self, w, t) -> WSnapshot:
        st = WState(self.grid, w.copy(), t)
        return WSnapshot(t, st, st.mean, float(st.density().max()), st.mass)


def stable_dt_w(state: WState, p: ModelParameters, ctrl: StepControl) -> float:
    """Explicit bound covering the degenerate diffusion, transport and reaction."""
    return _WOperator(state.grid, p).select_dt(np.array(state.w), ctrl.cfl_diffusion)


def step_w(state: WState, p: ModelParameters, dt: Optional[float] = None,
           ctrl: Optional[StepControl] = None) -> WState:
    """One explicit step of all right-hand-side terms; boundary node by mass balance."""
    ctrl = ctrl or StepControl()
    op = _WOperator(state.grid, p)
    w = np.array(state.w)
    limit = op.select_dt(w, ctrl.cfl_diffusion)
    if dt is None:
        dt = limit
    if dt < ctrl.dt_min:
        raise StepFailure(state.t, dt)
    op.rate(w)
    w[1:] += dt * op.out[1:]
    w[0] = 0.0
    return WState(state.grid, w, state.t + dt)


def run_w(p: ModelParameters, w0: WState, ctrl: StepControl,
          recorder: Optional[Callable[[WSnapshot], None]] = None):
    """Mirror of :func:`ksblowup.usolver.run_u`; blow-up is read off max n w_s."""
    op = _WOperator(w0.grid, p)
    w = np.array(w0.w)
    u_init = float(w0.density().max())
    threshold = ctrl.blowup_threshold * u_init
    g_t = np.zeros(GROWTH_LOG_SIZE)
    g_u = np.zeros(GROWTH_LOG_SIZE)
    g_t[0], g_u[0] = w0.t, u_init
    g_state = np.array([1.0, u_init])
    t = float(w0.t)
    if recorder is not None:
        recorder(op.snapshot(w, t))

    interval = ctrl.record_interval
    k = int(t / interval) + 1
    steps = 0
    status = _kernels.RUNNING
    while True:
        t_stop = min(k * interval, ctrl.T_end)
        t, status, nsteps, _ = op.advance(w, t, t_stop, ctrl, threshold, g_t, g_u, g_state)
        steps += nsteps
        if status != _kernels.RUNNING:
            break
        if t < t_stop:
            continue
        if recorder is not None:
            recorder(op.snapshot(w, t))
        if t_stop >= ctrl.T_end:
            break
        k += 1

    finite = bool(np.all(np.isfinite(w)))
    if status != _kernels.RUNNING and recorder is not None and finite:
        recorder(op.snapshot(w, t))
    u_final = op.n * np.diff(w) / op.ds if finite else np.array([math.inf])
    count = int(g_state[0])
    return _report(status, t, u_final, u_init, steps, 0.0,
                   g_t[:count].copy(), g_u[:count].copy())
