import numpy as np
import pytest
from hypothesis import given, strategies as st

from ksblowup.elliptic import compute_mean, compute_vr
from ksblowup.model import (InitialDatumSpec, ModelParameters, RadialGrid, RadialProfile,
                            ball_volume, make_initial_datum, sphere_area)


def test_mean_of_constant_and_zero():
    g = RadialGrid.uniform(100, 1.0, 4)
    assert compute_mean(RadialProfile(g, np.full(100, 2.5))) == pytest.approx(2.5, rel=1e-14)
    assert compute_mean(RadialProfile(g, np.zeros(100))) == 0.0


def test_mean_of_plateau_datum():
    p = ModelParameters(n=5, R=1.0, kappa=2.0, lam=0.0, mu=0.1, m0=1.0, m1=0.9)
    g = RadialGrid.cored(1024, 1.0, 5)
    u = make_initial_datum(p, InitialDatumSpec(r1=0.3), g)
    assert compute_mean(u) == pytest.approx(1.0 / ball_volume(5), rel=1e-10)


def test_balanced_source_gives_zero_gradient():
    g = RadialGrid.uniform(100, 1.0, 3)
    gp = compute_vr(RadialProfile(g, np.full(100, 0.7)))
    assert np.max(np.abs(gp.vr)) < 1e-14


def test_concentrated_mass_matches_cumulative_oracle():
    n, N = 3, 4000
    g = RadialGrid.uniform(N, 1.0, n)
    vals = np.zeros(N)
    inner = g.centers < 0.05
    vals[inner] = 1.0
    vols = g.shell_volumes
    vals *= 1.0 / (sphere_area(n) * np.sum(vals * vols))  # unit mass
    u = RadialProfile(g, vals)
    gp = compute_vr(u)
    m = compute_mean(u)
    r = g.nodes
    outside = (r > 0.1) & (r < 1.0)
    # physical sign: the gradient of v points toward the concentration
    expect = -(1.0 / sphere_area(n) - m * r[outside] ** 3 / 3.0) / r[outside] ** 2
    assert np.allclose(gp.vr[outside], expect, rtol=1e-10, atol=1e-12)


@given(st.integers(3, 6), st.lists(st.floats(0.0, 10.0), min_size=2, max_size=8))
def test_vr_nonpositive_for_decreasing_u_and_zero_at_ends(n, levels):
    N = 256
    g = RadialGrid.cored(N, 1.0, n)
    steps = np.sort(np.asarray(levels))[::-1]
    vals = np.repeat(steps, -(-N // len(steps)))[:N]
    gp = compute_vr(RadialProfile(g, vals))
    scale = np.max(np.abs(gp.vr)) + 1e-3 * (steps.max() + 1e-300)
    assert gp.vr[0] == 0.0
    assert abs(gp.vr[-1]) <= 1e-12 * scale + 1e-300
    assert np.all(gp.vr <= 1e-12 * scale)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_vr_linear_in_deviation(a, b):
    g = RadialGrid.uniform(128, 1.0, 4)
    x = np.linspace(1.0, 0.0, 128) ** 2
    y = np.cos(np.linspace(0, 3, 128))
    vx = compute_vr(RadialProfile(g, x)).vr
    vy = compute_vr(RadialProfile(g, y)).vr
    vz = compute_vr(RadialProfile(g, a * x + b * y)).vr
    assert np.allclose(vz, a * vx + b * vy, atol=1e-12 * (1 + np.abs(vz).max()))


def test_refinement_second_order():
    n = 4
    f = lambda r: 1.0 + np.cos(np.pi * r)
    errs = []
    for N in (64, 128, 256):
        g = RadialGrid.uniform(N, 1.0, n)
        fine = RadialGrid.uniform(8 * N, 1.0, n)
        # cell averages from a much finer grid
        ufine = f(fine.centers)
        vols = fine.shell_volumes
        avg = np.add.reduceat(ufine * vols, np.arange(0, 8 * N, 8)) / g.shell_volumes
        v = compute_vr(RadialProfile(g, avg)).vr
        ref = compute_vr(RadialProfile(fine, ufine)).vr[::8]
        errs.append(np.max(np.abs(v - ref)))
    assert errs[0] / errs[1] > 3.0 or errs[0] < 1e-12
