"""Model parameters, radial grids, cell-averaged profiles and initial data."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .errors import InfeasibleDatumError, ParameterError


def ball_volume(n: int) -> float:
    """Volume |B_1| of the unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n, equal to n |B_1|."""
    return n * ball_volume(n)


class Regime(str, enum.Enum):
    BLOWUP_CASE1 = "BlowupCase1"
    BLOWUP_CASE2 = "BlowupCase2"
    UNCLASSIFIED = "Unclassified"

    @property
    def certifiable(self) -> bool:
        return self is not Regime.UNCLASSIFIED


@dataclass(frozen=True)
class ModelParameters:
    """Parameters (n, R, kappa, lambda, mu, m0, m1) of the dampened system."""

    n: int
    R: float
    kappa: float
    lam: float
    mu: float
    m0: float
    m1: float

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if int(self.n) != self.n or self.n < 3:
            raise ParameterError("n", f"dimension must be an integer >= 3, got {self.n!r}")
        if not (math.isfinite(self.R) and self.R > 0):
            raise ParameterError("R", f"radius must be positive, got {self.R!r}")
        if not (math.isfinite(self.kappa) and self.kappa > 1.0):
            raise ParameterError("kappa", f"dampening exponent must exceed 1, got {self.kappa!r}")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ParameterError("lam", f"growth rate must be >= 0, got {self.lam!r}")
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise ParameterError("mu", f"dampening strength must be > 0, got {self.mu!r}")
        if not (math.isfinite(self.m0) and self.m0 > 0):
            raise ParameterError("m0", f"total mass must be > 0, got {self.m0!r}")
        if not (0 < self.m1 < self.m0):
            raise ParameterError("m1", f"concentrated mass must lie in (0, m0), got {self.m1!r}")

    @property
    def domain_volume(self) -> float:
        return ball_volume(self.n) * self.R ** self.n

    @property
    def regime(self) -> Regime:
        return classify(self)

    def replace(self, **changes) -> "ModelParameters":
        values = {k: getattr(self, k) for k in ("n", "R", "kappa", "lam", "mu", "m0", "m1")}
        values.update(changes)
        return ModelParameters(**values)


def classify(p: ModelParameters) -> Regime:
    n, kappa, mu = p.n, p.kappa, p.mu
    if 1.0 < kappa < min(2.0, n / 2.0):
        return Regime.BLOWUP_CASE1
    if kappa == 2.0 and n >= 5 and 0 < mu < (n - 4) / n:
        return Regime.BLOWUP_CASE2
    return Regime.UNCLASSIFIED


def validate_parameters(p: ModelParameters) -> Regime:
    """Re-check the parameter invariants and return the blow-up regime.

    Parameters outside both blow-up regimes are accepted (they can still be
    simulated); only malformed values raise :class:`ParameterError`.
    Admissible dampening exponents are kappa in (1, 2] for the theory; larger
    exponents are allowed so the global-existence side can be simulated.
    """
    p.validate()
    return classify(p)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Finite-volume cells [r_i, r_{i+1}] covering [0, R] in dimension n.

    ``cluster`` is the ratio of the innermost to the outermost cell width
    (1.0 for a uniform grid).
    """

    nodes: np.ndarray
    n: int
    cluster: float = 1.0

    MIN_CELLS = 16

    def __post_init__(self):
        nodes = _frozen(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < self.MIN_CELLS + 1:
            raise ParameterError("grid", f"need at least {self.MIN_CELLS} cells")
        if nodes[0] != 0.0:
            raise ParameterError("grid", "first node must be 0")
        if not np.all(np.diff(nodes) > 0):
            raise ParameterError("grid", "nodes must be strictly increasing")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError("n", "dimension must be a positive integer")

    @classmethod
    def uniform(cls, n_cells: int, R: float, n: int) -> "RadialGrid":
        nodes = np.linspace(0.0, R, n_cells + 1)
        nodes[-1] = R
        return cls(nodes, n, 1.0)

    @classmethod
    def cored(cls, n_cells: int, R: float, n: int, core: float = 2.0) -> "RadialGrid":
        """Uniform grid whose innermost cell is ``core`` times wider.

        The origin cell of a uniform grid is the stiffest diffusive cell
        (rate n/h^2 against 2/h^2 in the interior); widening it lets the
        explicit step grow by up to n/2 without touching the interior.
        """
        if not core >= 1.0:
            raise ParameterError("core", f"must be >= 1, got {core!r}")
        h = R / (n_cells - 1 + core)
        nodes = np.concatenate(([0.0], core * h + h * np.arange(n_cells)))
        nodes[-1] = R
        return cls(nodes, n, 1.0 / core)

    @classmethod
    def geometric(cls, n_cells: int, R: float, n: int, cluster: float = 1e-3) -> "RadialGrid":
        """Widths grow geometrically outward; innermost/outermost = ``cluster``."""
        if not 0 < cluster <= 1:
            raise ParameterError("cluster", f"must lie in (0, 1], got {cluster!r}")
        if cluster == 1.0:
            return cls.uniform(n_cells, R, n)
        q = cluster ** (-1.0 / (n_cells - 1))
        widths = q ** np.arange(n_cells)
        nodes = np.concatenate(([0.0], np.cumsum(widths)))
        nodes *= R / nodes[-1]
        nodes[-1] = R
        return cls(nodes, n, cluster)

    @property
    def R(self) -> float:
        return float(self.nodes[-1])

    @property
    def n_cells(self) -> int:
        return self.nodes.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    @property
    def shell_volumes(self) -> np.ndarray:
        """Per-cell integrals of rho^{n-1}, i.e. (r_{i+1}^n - r_i^n)/n."""
        rn = self.nodes ** self.n
        return np.diff(rn) / self.n

    def cells_inside(self, r: float) -> int:
        """Number of cells lying entirely within [0, r]."""
        return int(np.searchsorted(self.nodes, r, side="right")) - 1

    def refined(self) -> "RadialGrid":
        """Every cell split in half."""
        mids = self.centers
        nodes = np.empty(2 * self.n_cells + 1)
        nodes[0::2] = self.nodes
        nodes[1::2] = mids
        return RadialGrid(nodes, self.n, self.cluster)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Cell averages of a radial scalar on a :class:`RadialGrid`."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.n_cells,):
            raise ParameterError("values", f"expected {self.grid.n_cells} cell values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("values", "profile contains non-finite values")

    @property
    def max(self) -> float:
        return float(self.values.max())

    def total_mass(self) -> float:
        return partial_mass(self, self.grid.R)


def partial_mass(u: RadialProfile, r: float) -> float:
    """Mass of ``u`` inside the ball of radius ``r`` (composite midpoint rule).

    Cell averages are treated as piecewise constant, so the result is
    exact for the finite-volume representation and additive over shells.
    """
    grid = u.grid
    if not 0.0 <= r <= grid.R:
        raise ParameterError("r", f"radius {r!r} outside [0, {grid.R}]")
    vols = grid.shell_volumes
    k = grid.cells_inside(r)
    inner = float(np.dot(vols[:k], u.values[:k])) if k > 0 else 0.0
    if k < grid.n_cells:
        inner += u.values[k] * (r ** grid.n - grid.nodes[k] ** grid.n) / grid.n
    return sphere_area(grid.n) * inner


@dataclass(frozen=True)
class InitialDatumSpec:
    """Smoothed plateau datum: flat core, C^k transition, positive floor.

    ``delta`` of ``None`` selects 1e-6 m0/|Omega|.
    """

    r1: float
    smoothness: int = 2
    delta: Optional[float] = None
    plateau: str = "auto"

    PLATEAU_END = 0.8
    TRANSITION_END = 1.05

    def __post_init__(self):
        if not (math.isfinite(self.r1) and self.r1 > 0):
            raise ParameterError("r1", f"concentration radius must be positive, got {self.r1!r}")
        if int(self.smoothness) != self.smoothness or self.smoothness < 1:
            raise ParameterError("smoothness", "transition order must be an integer >= 1")
        if self.delta is not None and not self.delta > 0:
            raise ParameterError("delta", "background floor must be positive")
        if self.plateau != "auto":
            raise ParameterError("plateau", "only 'auto' plateau height is supported")


def plateau_shape(r, r1: float, smoothness: int) -> np.ndarray:
    """1 on [0, 0.8 r1], 0 beyond 1.05 r1, C^k-smooth decreasing in between."""
    r = np.asarray(r, dtype=float)
    a = InitialDatumSpec.PLATEAU_END * r1
    b = InitialDatumSpec.TRANSITION_END * r1
    x = np.clip((r - a) / (b - a), 0.0, 1.0)
    k = smoothness + 1
    # regularized incomplete beta I_x(k, k) is the order-(k-1) smoothstep
    return 1.0 - special.betainc(k, k, x)


def make_initial_datum(p: ModelParameters, spec: InitialDatumSpec, grid: RadialGrid) -> RadialProfile:
    """Positive, radially nonincreasing datum with mass m0 and >= m1 inside r1."""
    if grid.n != p.n:
        raise ParameterError("grid", f"grid dimension {grid.n} differs from n={p.n}")
    if not math.isclose(grid.R, p.R, rel_tol=1e-12):
        raise ParameterError("grid", f"grid radius {grid.R} differs from R={p.R}")
    if spec.r1 > p.R:
        raise ParameterError("r1", f"r1={spec.r1} exceeds R={p.R}")
    vol = p.domain_volume
    delta = spec.delta if spec.delta is not None else 1e-6 * p.m0 / vol
    if delta * vol >= p.m0:
        raise InfeasibleDatumError(
            f"background floor {delta:.3e} alone carries mass >= m0={p.m0}")
    if spec.r1 == p.R:
        return RadialProfile(grid, np.full(grid.n_cells, p.m0 / vol))
    if grid.cells_inside(spec.r1) < 8:
        raise ParameterError("grid", f"fewer than 8 cells inside r1={spec.r1}")

    shape = plateau_shape(grid.centers, spec.r1, spec.smoothness)
    weight = sphere_area(p.n) * float(np.dot(grid.shell_volumes, shape))
    # total mass is affine in the plateau height, so the root is explicit
    height = delta + (p.m0 - delta * vol) / weight
    u0 = RadialProfile(grid, delta + (height - delta) * shape)
    inner = partial_mass(u0, spec.r1)
    if inner < p.m1:
        raise InfeasibleDatumError(
            f"mass {inner:.6g} inside r1={spec.r1} is below m1={p.m1}")
    return u0
