"""Quasi-static chemical gradient and spatial mean for a given density."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import RadialGrid, RadialProfile, ball_volume, partial_mass


@dataclass(frozen=True, eq=False)
class GradientProfile:
    """Radial derivative v_r at the cell faces, together with the mean it used.

    v is never reconstructed; only v_r enters the fluxes. ``vr[0]`` is zero
    by symmetry and ``vr[-1]`` vanishes up to rounding (Neumann condition).
    """

    grid: RadialGrid
    vr: np.ndarray
    mean: float


def compute_mean(u: RadialProfile) -> float:
    grid = u.grid
    return partial_mass(u, grid.R) / (ball_volume(grid.n) * grid.R ** grid.n)


def compute_vr(u: RadialProfile) -> GradientProfile:
    """Solve 0 = Laplace(v) - mean + u in radial form for v_r.

    r^{n-1} v_r(r) = int_0^r rho^{n-1} (mean - u) drho, so v_r <= 0 whenever
    u is nonincreasing: the gradient of v points toward the origin.
    """
    grid = u.grid
    N = grid.n_cells
    area = grid.nodes ** (grid.n - 1)
    vr = np.empty(N + 1)
    mean = _kernels.radial_velocity(
        np.ascontiguousarray(u.values), grid.shell_volumes, area, float(grid.n),
        grid.R ** grid.n, np.empty(N), np.empty(N + 1), vr)
    vr.setflags(write=False)
    return GradientProfile(grid, vr, float(mean))
