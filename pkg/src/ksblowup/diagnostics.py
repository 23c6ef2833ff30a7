"""Moment functional phi, the terms of its time derivative, and run-time checks.

All integrals treat w as piecewise linear between s-nodes, which is exactly
what both solvers produce, and are evaluated in closed form cell by cell:
on a cell w = alpha + beta s, so every integrand is a combination of
powers s^p times (s0 - s). The first cell has alpha = 0 because w(0) = 0,
which keeps the singular weight integrable for every gamma < 2.

Checks return :class:`CheckRecord` entries written as ``lhs >= rhs``; the
margin is lhs - rhs and an entry passes when margin >= -tol.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .certificate import constant_C2, constant_C3, constant_C4, i1_factor
from .errors import DomainError, PreconditionError
from .model import ModelParameters, RadialProfile
from .wsolver import WState

REL_TOL = 1e-6
TOL_FLOOR = 1e-300
WS_TOL = 1e-8
MONOTONE_TOL = 1e-8
MASS_TOL = 1e-6


@dataclass(frozen=True)
class FunctionalSample:
    t: float
    gamma: float
    s0: float
    phi: float
    i1: float
    i2: float
    i3: float
    i4: float
    lambda_term: float
    mean: float

    @property
    def rhs(self) -> float:
        """I1 + I2 + I3 + lambda term + I4, the predicted d phi / dt."""
        return self.i1 + self.i2 + self.i3 + self.lambda_term + self.i4


@dataclass(frozen=True)
class CheckRecord:
    name: str
    t: float
    lhs: float
    rhs: float
    margin: float
    passed: bool
    tol: float


@dataclass
class InequalityReport:
    records: List[CheckRecord] = field(default_factory=list)

    def add(self, rec: CheckRecord) -> CheckRecord:
        self.records.append(rec)
        return rec

    def extend(self, recs: Iterable[CheckRecord]) -> None:
        self.records.extend(recs)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self) -> List[CheckRecord]:
        return [r for r in self.records if not r.passed]

    def by_name(self, name: str) -> List[CheckRecord]:
        return [r for r in self.records if r.name == name]

    def min_margin(self) -> float:
        return min((r.margin for r in self.records), default=math.inf)

    def rows(self) -> List[dict]:
        return [asdict(r) for r in self.records]


def make_record(name: str, t: float, lhs: float, rhs: float, tol: Optional[float] = None) -> CheckRecord:
    if tol is None:
        tol = REL_TOL * (abs(lhs) + abs(rhs) + TOL_FLOOR)
    margin = lhs - rhs
    ok = bool(math.isfinite(margin) and margin >= -tol) or (lhs == math.inf)
    return CheckRecord(name, float(t), float(lhs), float(rhs), float(margin), ok, float(tol))


def _check_domain(gamma: float, s0: float, S: float) -> None:
    if not 0.0 < gamma < 2.0:
        raise DomainError(f"gamma must lie in (0, 2), got {gamma!r}")
    if not 0.0 < s0 < S:
        raise DomainError(f"s0 must lie in (0, {S}), got {s0!r}")


class _Cells:
    """Cells of [0, s0] cut from the s-grid, with the power moments needed."""

    def __init__(self, s: np.ndarray, s0: float):
        k = int(np.searchsorted(s, s0, side="left"))  # s[k-1] < s0 <= s[k]
        self.k = k
        self.a = s[:k].copy()
        self.b = s[1:k + 1].copy()
        self.b[-1] = s0
        self.s0 = s0

    def moment(self, p: float) -> np.ndarray:
        """int_a^b s^p ds for every cell; inf on the first cell if divergent."""
        a, b = self.a, self.b
        if p == -1.0:
            with np.errstate(divide="ignore"):
                return np.log(b) - np.log(a)
        with np.errstate(divide="ignore"):
            return (b ** (p + 1.0) - a ** (p + 1.0)) / (p + 1.0)

    def weighted(self, p: float) -> np.ndarray:
        """int_a^b s^p (s0 - s) ds."""
        return self.s0 * self.moment(p) - self.moment(p + 1.0)


def _linear_pieces(s: np.ndarray, values: np.ndarray, cells: _Cells):
    """(alpha, beta) with values = alpha + beta s on each cut cell."""
    k = cells.k
    beta = np.diff(values[:k + 1]) / np.diff(s[:k + 1])
    alpha = values[:k] - beta * s[:k]
    alpha[0] = values[0]  # s[0] = 0 exactly
    return alpha, beta


def _weighted_linear(alpha, beta, cells: _Cells, gamma: float) -> float:
    """int_0^{s0} s^{-gamma} (s0 - s)(alpha + beta s) ds, exact per cell."""
    m0 = cells.weighted(-gamma)
    m1 = cells.weighted(1.0 - gamma)
    if alpha[0] == 0.0:
        m0 = m0.copy()
        m0[0] = 0.0  # avoids inf * 0 on the first cell when gamma >= 1
    return float(np.dot(alpha, m0) + np.dot(beta, m1))


def compute_phi(w: WState, gamma: float, s0: float) -> float:
    """phi(s0) = int_0^{s0} s^{-gamma} (s0 - s) w ds."""
    s = w.grid.nodes
    _check_domain(gamma, s0, w.grid.S)
    cells = _Cells(s, s0)
    alpha, beta = _linear_pieces(s, w.w, cells)
    return _weighted_linear(alpha, beta, cells, gamma)


def damping_integral(w: WState, kappa: float) -> np.ndarray:
    """Q(s_j) = int_0^{s_j} w_s^kappa at the nodes (exact for piecewise-linear w)."""
    d = np.maximum(w.slopes(), 0.0)
    q = np.zeros(w.w.size)
    q[1:] = np.cumsum(w.grid.widths * d ** kappa)
    return q


def compute_I_terms(w: WState, p: ModelParameters, gamma: float, s0: float) -> FunctionalSample:
    """phi, I1..I4 and the lambda term at one snapshot.

    I1 = n^2 [-(2 - 2/n - gamma) int s^{1-2/n-gamma}(s0-s) w_s + int_0^{s0} s^{2-2/n-gamma} w_s]
    I2 = n int s^{-gamma}(s0-s) w w_s
    I3 = -mean int s^{1-gamma}(s0-s) w_s
    I4 = -n^{kappa-1} mu int s^{-gamma}(s0-s) Q(s),  Q = int_0^s w_s^kappa
    """
    grid = w.grid
    s = grid.nodes
    n = p.n
    _check_domain(gamma, s0, grid.S)
    if not gamma < 2.0 - 2.0 / n:
        raise DomainError(f"I1 needs gamma < 2 - 2/n = {2 - 2 / n}, got {gamma!r}")
    cells = _Cells(s, s0)
    alpha, beta = _linear_pieces(s, w.w, cells)
    phi = _weighted_linear(alpha, beta, cells, gamma)
    mean = w.mean

    # beta is w_s on each cell
    e = 1.0 - 2.0 / n - gamma
    i1 = n * n * (-(2.0 - 2.0 / n - gamma) * float(np.dot(beta, cells.weighted(e)))
                  + float(np.dot(beta, cells.moment(e + 1.0))))
    i2 = n * _weighted_linear(beta * alpha, beta * beta, cells, gamma)
    i3 = -mean * float(np.dot(beta, cells.weighted(1.0 - gamma)))

    q = damping_integral(w, p.kappa)
    qa, qb = _linear_pieces(s, q, cells)
    i4 = -n ** (p.kappa - 1.0) * p.mu * _weighted_linear(qa, qb, cells, gamma)
    return FunctionalSample(float(w.t), gamma, s0, phi, i1, i2, i3, i4, p.lam * phi, mean)


# ---- pointwise estimates -------------------------------------------------

def check_ws_estimate(w: WState) -> List[CheckRecord]:
    """w_s <= w/s <= w_s(0) at every interior node, worst node reported.

    The slope tested at node j is the one of the cell ending at j, which is
    the larger of the two one-sided slopes for concave w.
    """
    s = w.grid.nodes
    d = w.slopes()
    ws0 = d[0]
    tol = WS_TOL * abs(ws0) + TOL_FLOOR
    ratio = w.w[1:] / s[1:]
    upper = ratio - d  # w/s - w_s at node j, using the left slope
    lower = ws0 - ratio
    j = int(np.argmin(upper))
    k = int(np.argmin(lower))
    return [
        make_record("ws_le_w_over_s", w.t, float(ratio[j]), float(d[j]), tol),
        make_record("w_over_s_le_ws0", w.t, float(ws0), float(ratio[k]), tol),
    ]


def check_monotone(u: RadialProfile, t: float = 0.0) -> CheckRecord:
    """u nonincreasing in r: worst forward difference u_i - u_{i+1} >= 0."""
    v = u.values
    drop = v[:-1] - v[1:]
    return make_record("monotone", t, float(drop.min()), 0.0, MONOTONE_TOL * float(v.max()) + TOL_FLOOR)


def check_mass_bound(times: Sequence[float], masses: Sequence[float], p: ModelParameters) -> List[CheckRecord]:
    """mass(t) <= e^{lam t} m0 (1 + 1e-6); with lam = 0 also nonincreasing."""
    out = []
    for t, m in zip(times, masses):
        env = math.exp(p.lam * t) * p.m0
        out.append(make_record("mass_bound", t, env, m, MASS_TOL * env))
    if p.lam == 0.0:
        for k in range(1, len(times)):
            out.append(make_record("mass_nonincreasing", times[k], masses[k - 1], masses[k],
                                   1e-12 * p.m0))
    return out


# ---- inequalities for the terms of phi_t ----------------------------------

def check_I1(sample: FunctionalSample, p: ModelParameters, gamma: float) -> CheckRecord:
    """I1 >= -n^{3/2} C1 s0^{(3-gamma)/2 - 2/n} sqrt(I2)."""
    n = p.n
    if not 0.0 < gamma < 2.0 - 4.0 / n:
        raise PreconditionError(f"check_I1 needs gamma in (0, {2 - 4 / n}), got {gamma!r}")
    rhs = -i1_factor(n, gamma) * sample.s0 ** ((3.0 - gamma) / 2.0 - 2.0 / n) * math.sqrt(max(sample.i2, 0.0))
    return make_record("I1", sample.t, sample.i1, rhs)


def check_I2_lower(sample: FunctionalSample, gamma: float, s0: float, n: int) -> CheckRecord:
    """I2 >= C2 s0^{-(3-gamma)} phi^2."""
    rhs = constant_C2(n, gamma) * s0 ** (-(3.0 - gamma)) * sample.phi ** 2
    return make_record("I2_lower", sample.t, sample.i2, rhs)


def check_I3(sample: FunctionalSample, p: ModelParameters, gamma: float, s0: float) -> CheckRecord:
    """I3 >= -C3 m0 s0^{(3-gamma)/2} sqrt(I2), for t < 1."""
    if not sample.t < 1.0:
        raise PreconditionError(f"check_I3 needs t < 1, got {sample.t!r}")
    rhs = -constant_C3(p, gamma) * p.m0 * s0 ** ((3.0 - gamma) / 2.0) * math.sqrt(max(sample.i2, 0.0))
    return make_record("I3", sample.t, sample.i3, rhs)


def check_I4_case1(sample: FunctionalSample, p: ModelParameters, gamma: float) -> CheckRecord:
    """kappa = 2, gamma in (1, 2): I4 >= -mu/(gamma - 1) I2."""
    if p.kappa != 2.0 or not 1.0 < gamma < 2.0:
        raise PreconditionError("check_I4_case1 needs kappa = 2 and gamma in (1, 2)")
    return make_record("I4_case1", sample.t, sample.i4, -p.mu / (gamma - 1.0) * sample.i2)


def check_I4_case2(sample: FunctionalSample, p: ModelParameters, gamma: float) -> CheckRecord:
    """kappa in (1, 2): |I4| <= C4 s0^{(2-kappa)/2} I2^{kappa/2}, written as I4 >= -bound."""
    if not sample.s0 < min(1.0, p.R ** p.n):
        raise PreconditionError("check_I4_case2 needs s0 < min(1, R^n)")
    C4 = constant_C4(p, gamma)
    bound = C4 * sample.s0 ** ((2.0 - p.kappa) / 2.0) * max(sample.i2, 0.0) ** (p.kappa / 2.0)
    return make_record("I4_case2", sample.t, sample.i4, -bound)


def check_I4(sample: FunctionalSample, p: ModelParameters, gamma: float) -> CheckRecord:
    """The I4 bound matching the dampening exponent."""
    if p.kappa == 2.0:
        return check_I4_case1(sample, p, gamma)
    return check_I4_case2(sample, p, gamma)


def check_sample(sample: FunctionalSample, p: ModelParameters) -> List[CheckRecord]:
    """Every inequality whose preconditions hold at this sample."""
    g, s0, n = sample.gamma, sample.s0, p.n
    out = [make_record("I2_nonneg", sample.t, sample.i2, 0.0),
           make_record("lambda_term_nonneg", sample.t, sample.lambda_term, 0.0),
           check_I2_lower(sample, g, s0, n)]
    if g < 2.0 - 4.0 / n:
        out.append(check_I1(sample, p, g))
    if sample.t < 1.0:
        out.append(check_I3(sample, p, g, s0))
    if p.kappa == 2.0 and 1.0 < g < 2.0:
        out.append(check_I4_case1(sample, p, g))
    elif 1.0 < p.kappa < 2.0 and 2.0 * (p.kappa - 1.0) / p.kappa < g < 1.0 \
            and s0 < min(1.0, p.R ** p.n):
        out.append(check_I4_case2(sample, p, g))
    return out


# ---- time-series checks ---------------------------------------------------

def identity_residuals(samples: Sequence[FunctionalSample]) -> np.ndarray:
    """Relative mismatch between a central-difference d phi/dt and the I-sum.

    Evaluated at interior samples; the scale is the larger of the two sides.
    """
    out = []
    for k in range(1, len(samples) - 1):
        a, b, c = samples[k - 1], samples[k], samples[k + 1]
        fd = (c.phi - a.phi) / (c.t - a.t)
        scale = max(abs(fd), abs(b.rhs), TOL_FLOOR)
        out.append(abs(fd - b.rhs) / scale)
    return np.asarray(out)


def check_riccati(samples: Sequence[FunctionalSample], d1: float, d2: float,
                  rel: float = 1e-2) -> List[CheckRecord]:
    """phi_t >= d1 phi^2 - d2 with a central-difference phi_t."""
    out = []
    for k in range(1, len(samples) - 1):
        a, b, c = samples[k - 1], samples[k], samples[k + 1]
        fd = (c.phi - a.phi) / (c.t - a.t)
        rhs = d1 * b.phi ** 2 - d2
        out.append(make_record("riccati", b.t, fd, rhs, rel * abs(d1 * b.phi ** 2)))
    return out
