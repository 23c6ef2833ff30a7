"""Explicit constant chain and Riccati comparison for a finite-time blow-up bound.

The chain runs parameters -> gamma (and epsilon) -> C0..C4' -> c1..c3 ->
the comparison data d1, d2, d3 at a cutoff s0. Whenever the moment of the
datum exceeds d3 + 2/d1, the comparison ODE phi' = d1 phi^2 - d2 forces
blow-up before t = 1/2.

Every constant is a plain function of its inputs so the diagnostics can
evaluate the same bounds on recorded runs.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace

from .errors import DomainError, InfeasibleCertificateError, PreconditionError, RegimeError
from .model import ModelParameters, Regime, classify, sphere_area

SCAN_RATIO = 0.9
S0_FLOOR = 1e-300


def beta_constant(a: float) -> float:
    """B with int_0^{s0} s^a (s0 - s) ds = B s0^{a+2}, i.e. 1/((a+1)(a+2))."""
    if not a > -1.0:
        raise DomainError(f"beta_constant needs a > -1, got {a!r}")
    return 1.0 / ((a + 1.0) * (a + 2.0))


def constant_C1(n: int, gamma: float) -> float:
    if not 0.0 < gamma < 2.0 - 4.0 / n:
        raise PreconditionError(f"C1 needs gamma in (0, {2 - 4 / n}), got {gamma!r}")
    return (2.0 - 2.0 / n - gamma) * math.sqrt(beta_constant(1.0 - gamma - 4.0 / n))


def i1_factor(n: int, gamma: float) -> float:
    """Coefficient K1 in I1 >= -K1 s0^{(3-gamma)/2 - 2/n} sqrt(I2).

    I1 carries n^2 and I2 carries n, so Cauchy-Schwarz leaves n^{3/2} C1.
    """
    return n ** 1.5 * constant_C1(n, gamma)


def constant_C2(n: int, gamma: float) -> float:
    if not 0.0 < gamma < 2.0:
        raise PreconditionError(f"C2 needs gamma in (0, 2), got {gamma!r}")
    return n * gamma * (2.0 - gamma) * (3.0 - gamma) / 2.0


def constant_C3(p: ModelParameters, gamma: float) -> float:
    """n e^lam / (|Omega| sqrt(C2)), valid on t < 1 through the mass bound."""
    return p.n * math.exp(p.lam) / (p.domain_volume * math.sqrt(constant_C2(p.n, gamma)))


def c4_exponent(kappa: float, gamma: float) -> float:
    return (gamma - 1.0) * kappa / (2.0 - kappa)


def constant_C4(p: ModelParameters, gamma: float) -> float:
    """Constant of |I4| <= C4 s0^{(2-kappa)/2} I2^{kappa/2} for kappa < 2, gamma < 1."""
    n, kappa = p.n, p.kappa
    if not 1.0 < kappa < 2.0:
        raise PreconditionError(f"C4 needs kappa in (1, 2), got {kappa!r}")
    lo = 2.0 * (kappa - 1.0) / kappa
    if not lo < gamma < 1.0:
        raise PreconditionError(f"C4 needs gamma in ({lo}, 1), got {gamma!r}")
    B = beta_constant(c4_exponent(kappa, gamma))
    return (n ** (kappa - 1.0) * p.mu / (1.0 - gamma) * p.R ** (n * (1.0 - gamma))
            * B ** ((2.0 - kappa) / 2.0) * n ** (-kappa / 2.0))


def constant_C4prime(p: ModelParameters, gamma: float, epsilon: float) -> float:
    """Young split C4 s0^{(2-k)/2} I2^{k/2} <= theta I2 + C4' s0, theta = mu/(mu+eps)."""
    if p.kappa == 2.0:
        return 0.0
    kappa = p.kappa
    theta = p.mu / (p.mu + epsilon)
    C4 = constant_C4(p, gamma)
    return ((2.0 - kappa) / 2.0 * C4 ** (2.0 / (2.0 - kappa))
            * (2.0 * theta / kappa) ** (-kappa / (2.0 - kappa)))


def sigma_integral(gamma: float) -> float:
    """int_{1/4}^1 sigma^{-gamma} (1 - sigma) d sigma in closed form."""
    def prim(x):
        if gamma == 1.0:
            return math.log(x) - x
        if gamma == 2.0:
            return -1.0 / x - math.log(x)
        return x ** (1.0 - gamma) / (1.0 - gamma) - x ** (2.0 - gamma) / (2.0 - gamma)
    return prim(1.0) - prim(0.25)


def constant_C0(p: ModelParameters, gamma: float) -> float:
    return p.m1 / sphere_area(p.n) * sigma_integral(gamma)


def select_gamma(p: ModelParameters):
    """Midpoint of the admissible gamma interval, epsilon and the interval itself."""
    regime = classify(p)
    n, kappa, mu = p.n, p.kappa, p.mu
    if regime is Regime.BLOWUP_CASE1:
        lo, hi = 2.0 * (kappa - 1.0) / kappa, min(2.0 - 4.0 / n, 1.0)
    elif regime is Regime.BLOWUP_CASE2:
        lo, hi = 1.0 + mu, 2.0 - 4.0 / n
    else:
        raise RegimeError(f"parameters are {regime.value}; no gamma interval")
    if not lo < hi:
        raise RegimeError(f"empty gamma interval ({lo}, {hi})")
    gamma = 0.5 * (lo + hi)
    epsilon = mu if regime is Regime.BLOWUP_CASE1 else gamma - 1.0 - mu
    return gamma, epsilon, (lo, hi)


@dataclass(frozen=True)
class BlowupCertificate:
    regime: str
    n: int
    R: float
    kappa: float
    lam: float
    mu: float
    m0: float
    m1: float
    gamma: float
    gamma_interval: tuple
    epsilon: float
    B_C1: float
    a_C1: float
    B_C4: float
    a_C4: float
    C0: float
    C1: float
    K1: float
    C2: float
    C3: float
    C4: float
    C4prime: float
    c1: float
    c2: float
    c3: float
    s0: float = math.nan
    s1: float = math.nan
    r1: float = math.nan
    d1: float = math.nan
    d2: float = math.nan
    d3: float = math.nan
    phi0: float = math.nan
    margin: float = math.nan
    certified_bound: float = math.nan

    FORMULAS = {
        "C0": "m1/(n|B1|) * int_{1/4}^1 sigma^-gamma (1-sigma)",
        "C1": "(2-2/n-gamma) sqrt(B(1-gamma-4/n))",
        "K1": "n^{3/2} C1",
        "C2": "n gamma (2-gamma)(3-gamma)/2",
        "C3": "n e^lam / (|Omega| sqrt(C2))",
        "C4": "n^{k-1} mu/(1-gamma) R^{n(1-gamma)} B((gamma-1)k/(2-k))^{(2-k)/2} n^{-k/2}",
        "C4prime": "(2-k)/2 C4^{2/(2-k)} (2 theta/k)^{-k/(2-k)}, theta = mu/(mu+eps); 0 if k = 2",
        "c1": "eps/(2(mu+eps))",
        "c2": "(2 K1^2 + 2 C3^2 m0^2)(mu+eps)/(2 eps) + C4prime",
        "c3": "C2 c1",
        "d1": "c3 s0^{-(3-gamma)}",
        "d2": "c2 s0",
        "d3": "sqrt(d2/d1)",
        "phi0": "C0 s0^{2-gamma}",
        "certified_bound": "1/(d1 (phi0 - d3))",
    }

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gamma_interval"] = list(self.gamma_interval)
        d["formulas"] = dict(self.FORMULAS)
        return d

    def to_json(self) -> str:
        d = {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in self.to_dict().items()}
        return json.dumps(d, indent=2, sort_keys=True)

    def comparison(self, s0: float):
        """(d1, d2, d3, phi0) at an arbitrary cutoff."""
        d1 = self.c3 * s0 ** (-(3.0 - self.gamma))
        d2 = self.c2 * s0
        return d1, d2, math.sqrt(d2 / d1), self.C0 * s0 ** (2.0 - self.gamma)


def assemble_constants(p: ModelParameters, gamma: float, epsilon: float) -> BlowupCertificate:
    regime = classify(p)
    if not regime.certifiable:
        raise RegimeError(f"parameters are {regime.value}")
    if not epsilon > 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon!r}")
    n = p.n
    a1 = 1.0 - gamma - 4.0 / n
    C1 = constant_C1(n, gamma)
    K1 = i1_factor(n, gamma)
    C2 = constant_C2(n, gamma)
    C3 = constant_C3(p, gamma)
    if p.kappa < 2.0:
        a4 = c4_exponent(p.kappa, gamma)
        B4 = beta_constant(a4)
        C4 = constant_C4(p, gamma)
    else:
        a4 = B4 = C4 = math.nan
    C4p = constant_C4prime(p, gamma, epsilon)
    c1 = epsilon / (2.0 * (p.mu + epsilon))
    c2 = (2.0 * K1 ** 2 + 2.0 * C3 ** 2 * p.m0 ** 2) * (p.mu + epsilon) / (2.0 * epsilon) + C4p
    c3 = C2 * c1
    return BlowupCertificate(
        regime=regime.value, n=n, R=p.R, kappa=p.kappa, lam=p.lam, mu=p.mu, m0=p.m0, m1=p.m1,
        gamma=gamma, gamma_interval=tuple(select_gamma(p)[2]), epsilon=epsilon,
        B_C1=beta_constant(a1), a_C1=a1, B_C4=B4, a_C4=a4,
        C0=constant_C0(p, gamma), C1=C1, K1=K1, C2=C2, C3=C3, C4=C4, C4prime=C4p,
        c1=c1, c2=c2, c3=c3)


def feasibility_margin(cert: BlowupCertificate, s0: float) -> float:
    """phi0 - d3 - 2/d1 at the cutoff s0."""
    d1, _, d3, phi0 = cert.comparison(s0)
    return phi0 - d3 - 2.0 / d1


def _scaled_margin(cert: BlowupCertificate, s0: float) -> float:
    # margin / s0^{2-gamma}; decreasing in s0, so its sign change is unique
    g = cert.gamma
    return (cert.C0 - math.sqrt(cert.c2 / cert.c3) * s0 ** (g / 2.0)
            - 2.0 / cert.c3 * s0)


def select_s0(cert: BlowupCertificate, p: ModelParameters):
    """Largest feasible s0 in (0, min(1, R^n)); returns (s0, r1)."""
    top = min(1.0, p.R ** p.n)
    s = top * SCAN_RATIO
    if _scaled_margin(cert, s) >= 0:
        return s, (s / 4.0) ** (1.0 / p.n)
    hi = s
    while _scaled_margin(cert, s) < 0:
        hi = s
        s *= SCAN_RATIO
        if s < S0_FLOOR:
            raise InfeasibleCertificateError("no feasible s0 above 1e-300")
    lo = s
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _scaled_margin(cert, mid) >= 0:
            lo = mid
        else:
            hi = mid
    # the returned cutoff must satisfy the unscaled criterion too
    while feasibility_margin(cert, lo) < 0:
        lo *= 1.0 - 1e-12
    return lo, (lo / 4.0) ** (1.0 / p.n)


def riccati_time_bound(d1: float, d2: float, phi0: float) -> float:
    """Upper bound 1/(d1 (phi0 - d3)) on the blow-up time of phi' >= d1 phi^2 - d2."""
    if not (d1 > 0 and d2 > 0):
        raise PreconditionError("d1 and d2 must be positive")
    d3 = math.sqrt(d2 / d1)
    if phi0 < d3 + 2.0 / d1:
        raise PreconditionError(
            f"phi0={phi0!r} is below the threshold d3 + 2/d1 = {d3 + 2.0 / d1!r}")
    return 1.0 / (d1 * (phi0 - d3))


def certify(p: ModelParameters, gamma: float = None) -> BlowupCertificate:
    """Full chain; ``gamma`` overrides the interval midpoint (epsilon follows)."""
    g_mid, eps, (lo, hi) = select_gamma(p)
    if gamma is None:
        gamma = g_mid
    elif not lo < gamma < hi:
        raise PreconditionError(f"gamma {gamma!r} outside ({lo}, {hi})")
    else:
        eps = p.mu if p.kappa < 2.0 else gamma - 1.0 - p.mu
    cert = assemble_constants(p, gamma, eps)
    s0, r1 = select_s0(cert, p)
    d1, d2, d3, phi0 = cert.comparison(s0)
    bound = riccati_time_bound(d1, d2, phi0)
    return replace(cert, s0=s0, s1=s0 / 4.0, r1=r1, d1=d1, d2=d2, d3=d3, phi0=phi0,
                   margin=phi0 - d3 - 2.0 / d1, certified_bound=bound)

