import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from ksblowup.certificate import (assemble_constants, beta_constant, certify, constant_C0,
                                  constant_C1, constant_C2, constant_C3, constant_C4,
                                  constant_C4prime, feasibility_margin, riccati_time_bound,
                                  select_gamma, sigma_integral)
from ksblowup.diagnostics import compute_phi
from ksblowup.errors import DomainError, PreconditionError, RegimeError
from ksblowup.model import InitialDatumSpec, ModelParameters, RadialGrid, make_initial_datum
from ksblowup.wsolver import SGrid, u_to_w


def params(**kw):
    base = dict(n=5, R=1.0, kappa=2.0, lam=0.0, mu=0.1, m0=1.0, m1=0.9)
    base.update(kw)
    return ModelParameters(**base)


def quad(f, a, b, epsrel=1e-13):
    return integrate.quad(f, a, b, limit=500, epsabs=0, epsrel=epsrel)[0]


@pytest.mark.parametrize("a", [-0.9, -0.5, 0.0, 1.0, 3.0])
def test_beta_against_quadrature(a):
    assert abs(beta_constant(a) - quad(lambda s: s ** a * (1 - s), 0, 1)) <= 1e-10


def test_beta_known_values():
    assert beta_constant(0.0) == 0.5
    assert beta_constant(1.0) == pytest.approx(1 / 6, rel=1e-15)
    assert beta_constant(-0.5) == pytest.approx(4 / 3, rel=1e-15)
    with pytest.raises(DomainError):
        beta_constant(-1.0)


@given(st.floats(-0.99, 5.0), st.floats(0.01, 10.0))
def test_beta_scaling(a, s0):
    val = quad(lambda s: s ** a * (s0 - s), 0, s0, epsrel=1e-10)
    assert val == pytest.approx(beta_constant(a) * s0 ** (a + 2), rel=1e-7)


@pytest.mark.parametrize("g", [0.3, 0.9, 1.0, 1.15, 1.6, 1.99])
def test_sigma_integral_closed_form(g):
    assert sigma_integral(g) == pytest.approx(quad(lambda x: x ** -g * (1 - x), 0.25, 1.0), rel=1e-12)


@pytest.mark.parametrize("kw, interval, gamma, eps", [
    (dict(n=5, kappa=2.0, mu=0.1), (1.1, 1.2), 1.15, 0.05),
    (dict(n=4, kappa=1.5, mu=1.0), (2 / 3, 1.0), 5 / 6, 1.0),
    (dict(n=3, kappa=1.4, mu=1.0), (0.8 / 1.4, 2 / 3), (0.8 / 1.4 + 2 / 3) / 2, 1.0),
])
def test_select_gamma(kw, interval, gamma, eps):
    g, e, (lo, hi) = select_gamma(params(**kw))
    assert (lo, hi) == pytest.approx(interval, rel=1e-14)
    assert g == pytest.approx(gamma, rel=1e-14)
    assert e == pytest.approx(eps, rel=1e-12)


def test_select_gamma_unclassified():
    with pytest.raises(RegimeError):
        select_gamma(params(n=3, kappa=1.6, mu=1.0))


def test_c1_c2_values():
    assert constant_C1(5, 1.15) == pytest.approx(0.45 * math.sqrt(1 / (0.05 * 1.05)), rel=1e-14)
    assert constant_C1(5, 1.15) == pytest.approx(1.964, abs=5e-4)
    assert constant_C2(5, 1.15) == pytest.approx(4.521, abs=5e-4)
    with pytest.raises(PreconditionError):
        constant_C1(5, 1.2)


def test_c3_matches_composition():
    p = params(lam=0.7)
    g = 1.15
    # |I3| <= mean sup * s0^{(3-g)/2} ... composed from mass <= e^lam m0 and phi <= sqrt(I2 s0^{3-g}/C2)
    expect = p.n * math.exp(0.7) / (p.domain_volume * math.sqrt(constant_C2(p.n, g)))
    assert constant_C3(p, g) == pytest.approx(expect, rel=1e-15)


def test_c4_formula_and_preconditions():
    p = params(n=3, kappa=1.4, mu=1.0)
    g = 0.6
    a = (g - 1) * 1.4 / 0.6
    B = 1 / ((a + 1) * (a + 2))
    expect = 3 ** 0.4 / 0.4 * B ** 0.3 * 3 ** -0.7
    assert constant_C4(p, g) == pytest.approx(expect, rel=1e-14)
    with pytest.raises(PreconditionError):
        constant_C4(p, 0.5)
    with pytest.raises(PreconditionError):
        constant_C4(params(), 1.15)


def test_c4prime_young_split():
    p = params(n=4, kappa=1.5, mu=1.0)
    g, eps = 5 / 6, 1.0
    C4, C4p = constant_C4(p, g), constant_C4prime(p, g, eps)
    theta = p.mu / (p.mu + eps)
    # C4 x^{k/2} <= theta x + C4' for every x >= 0 (s0 = 1 scaling)
    x = np.logspace(-8, 8, 2000)
    assert np.all(C4 * x ** 0.75 <= theta * x + C4p * (1 + 1e-12))
    # and the split is tight at the optimum
    assert np.min(theta * x + C4p - C4 * x ** 0.75) < 1e-4 * C4p


def test_riccati_unit():
    assert riccati_time_bound(4.0, 1.0, 1.0) == 0.5
    assert riccati_time_bound(4.0, 1.0, 2 * 0.5 + 4 / 4.0) < 0.5
    with pytest.raises(PreconditionError):
        riccati_time_bound(4.0, 1.0, 0.5)
    with pytest.raises(PreconditionError):
        riccati_time_bound(0.0, 1.0, 5.0)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.0, 100), st.floats(0.001, 50))
def test_riccati_monotone_in_phi0(d1, d2, extra, step):
    base = math.sqrt(d2 / d1) + 2 / d1 + extra
    assert riccati_time_bound(d1, d2, base + step) < riccati_time_bound(d1, d2, base)
    assert riccati_time_bound(d1, d2, base) <= 0.5 + 1e-15


def test_riccati_bound_dominates_actual_blowup():
    d1, d2, phi0 = 4.0, 1.0, 1.0
    d3 = 0.5
    K = (phi0 - d3) / (phi0 + d3)
    t_star = math.log(1 / K) / (2 * d1 * d3)
    assert t_star <= riccati_time_bound(d1, d2, phi0)


# regression goldens, produced by this pipeline
GOLDEN_CASE2 = dict(gamma=1.15, epsilon=0.05, C1=1.9639610121239313, K1=21.957751641341996,
                    C2=4.5209375, C3=0.4467425094856876, C0=0.024846517106498024,
                    c1=0.16666666666666646, c2=1447.027308037918, c3=0.7534895833333325,
                    s0=2.258630473752047e-06, r1=0.05628038224527826,
                    certified_bound=0.49999999999979616)
GOLDEN_CASE1 = dict(gamma=0.8333333333333333, epsilon=1.0, C1=1.5118578920369088,
                    C2=4.212962962962964, C3=0.3949084449309157, C4=4.559014113909554,
                    C4prime=364.49999999999966, C0=0.025110398747496227,
                    s0=6.386962705202647e-08, r1=0.011241094459439247,
                    certified_bound=0.49999999982442345)


@pytest.mark.parametrize("kw, golden, regime", [
    (dict(), GOLDEN_CASE2, "BlowupCase2"),
    (dict(n=4, kappa=1.5, mu=1.0), GOLDEN_CASE1, "BlowupCase1"),
])
def test_certificate_goldens(kw, golden, regime):
    c = certify(params(**kw))
    assert c.regime == regime
    for k, v in golden.items():
        assert getattr(c, k) == pytest.approx(v, rel=1e-12), k


def test_certificate_unclassified():
    with pytest.raises(RegimeError):
        certify(params(n=3, kappa=1.6, mu=1.0))


@pytest.mark.parametrize("kw", [dict(), dict(n=4, kappa=1.5, mu=1.0), dict(n=3, kappa=1.4, mu=0.5),
                                dict(n=6, mu=0.3), dict(mu=0.19), dict(n=5, kappa=1.9, mu=2.0, lam=0.5)])
def test_certificate_invariants(kw):
    c = certify(params(**kw))
    assert c.margin >= 0
    assert c.certified_bound <= 0.5
    assert abs(c.d1 * c.d3 ** 2 - c.d2) <= 1e-12 * c.d2
    assert feasibility_margin(c, c.s0) >= 0
    assert c.phi0 >= c.d3 + 2 / c.d1
    assert 0 < c.s0 < min(1.0, c.R ** c.n)
    assert c.r1 == pytest.approx((c.s0 / 4) ** (1 / c.n), rel=1e-15)


def test_certificate_deterministic_and_serializable():
    a, b = certify(params()), certify(params())
    assert a.to_json() == b.to_json()
    d = json.loads(a.to_json())
    assert d["gamma_interval"] == pytest.approx([1.1, 1.2])
    assert d["C4"] is None
    assert "certified_bound" in d["formulas"]


def test_gamma_override():
    c = certify(params(), gamma=1.12)
    assert c.gamma == 1.12 and c.epsilon == pytest.approx(0.02)
    with pytest.raises(PreconditionError):
        certify(params(), gamma=1.25)


def test_c0_lower_bound_by_quadrature():
    """phi(s0, 0) on the certificate datum is at least C0 s0^{2-gamma}."""
    p = params()
    c = certify(p)
    g = RadialGrid.uniform(2048, 1.0, 5)
    u0 = make_initial_datum(p, InitialDatumSpec(r1=c.r1), g)
    w = u_to_w(u0, SGrid.from_radial(g))
    phi = compute_phi(w, c.gamma, c.s0)
    assert phi >= c.phi0
    assert phi >= constant_C0(p, c.gamma) * c.s0 ** (2 - c.gamma)


def test_assemble_rejects_bad_epsilon():
    with pytest.raises(PreconditionError):
        assemble_constants(params(), 1.15, 0.0)
