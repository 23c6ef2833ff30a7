"""Blow-up reports and power-law extrapolation of the blow-up time."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

THRESHOLD_HIT = "threshold hit"
DT_COLLAPSE = "dt collapse"
HORIZON = "horizon reached"
NON_FINITE = "non-finite state"


@dataclass(frozen=True)
class BlowupReport:
    detected: bool
    reason: str
    t_final: float
    max_u: float
    initial_max: float
    steps: int
    T_hat: float = math.nan
    alpha: float = math.nan
    coeff: float = math.nan
    clipped_mass: float = 0.0
    growth_t: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    growth_u: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def summary(self) -> dict:
        return {
            "detected": self.detected,
            "reason": self.reason,
            "t_final": self.t_final,
            "T_hat": self.T_hat,
            "alpha": self.alpha,
            "coeff": self.coeff,
            "max_u": self.max_u,
            "initial_max": self.initial_max,
            "steps": self.steps,
            "clipped_mass": self.clipped_mass,
        }


def _loglog_fit(T, t, logy):
    x = np.log(T - t)
    A = np.column_stack((np.ones_like(x), -x))
    coef, *_ = np.linalg.lstsq(A, logy, rcond=None)
    resid = logy - A @ coef
    return float(resid @ resid), coef


def fit_power_law(t, y, decades: float = 1.0):
    """Fit y ~ c (T - t)^(-alpha) to the last ``decades`` of growth of y.

    T is found by a logarithmic scan of T - t_last followed by a bounded
    1-D refinement; the remaining pair (log c, alpha) is linear least squares.
    Returns (T, alpha, c).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = y >= y[-1] / 10.0 ** decades
    if keep.sum() < 4:
        keep = np.zeros_like(keep)
        keep[-min(8, y.size):] = True
    ts, logy = t[keep], np.log(y[keep])
    t_last = ts[-1]
    span = t_last - ts[0]
    if ts.size < 3 or span <= 0:
        return t_last, math.nan, math.nan
    grid = span * np.logspace(-8, 2, 201)
    scores = np.array([_loglog_fit(t_last + d, ts, logy)[0] for d in grid])
    k = int(np.argmin(scores))
    lo = math.log(grid[max(k - 1, 0)])
    hi = math.log(grid[min(k + 1, grid.size - 1)])
    if hi > lo:
        res = optimize.minimize_scalar(
            lambda z: _loglog_fit(t_last + math.exp(z), ts, logy)[0],
            bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        delta = math.exp(res.x) if res.fun <= scores[k] else grid[k]
    else:
        delta = grid[k]
    T = t_last + delta
    _, (logc, alpha) = _loglog_fit(T, ts, logy)
    return float(T), float(alpha), float(math.exp(logc))
