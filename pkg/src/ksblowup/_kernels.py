"""Compiled inner loops for the u and w solvers.

Everything here works on plain float arrays; the public modules wrap them.
Summation order is fixed so that runs are bit-reproducible.
"""
import math

import numpy as np
from numba import njit

RUNNING = 0
THRESHOLD = 1
DT_COLLAPSE = 2
NONFINITE = 3


@njit(cache=True)
def compensated_cumsum(x, out):
    """out[0] = 0, out[k] = sum(x[:k]) with Neumaier compensation."""
    s = 0.0
    c = 0.0
    out[0] = 0.0
    for i in range(x.size):
        v = x[i]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[i + 1] = s + c


@njit(cache=True)
def compensated_sum(x):
    s = 0.0
    c = 0.0
    for i in range(x.size):
        v = x[i]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


@njit(cache=True)
def radial_velocity(u, vols, area, n, Rn, excess, cum, vr):
    """Fill vr (faces) with v_r and return the spatial mean of u.

    v_r(r) = r^{1-n} int_0^r rho^{n-1} (mean - u) drho, cumulated cell by cell.
    """
    N = u.size
    for i in range(N):
        excess[i] = vols[i] * u[i]
    mean = n * compensated_sum(excess) / Rn
    for i in range(N):
        excess[i] = vols[i] * (u[i] - mean)
    compensated_cumsum(excess, cum)
    vr[0] = 0.0
    for f in range(1, N):
        vr[f] = -cum[f] / area[f]
    vr[N] = -cum[N] / area[N]
    return mean


@njit(cache=True)
def _minmod(a, b):
    if a * b <= 0.0:
        return 0.0
    if abs(a) < abs(b):
        return a
    return b


@njit(cache=True)
def power_km1(x, kappa):
    """x^(kappa-1) with pow avoided for the common exponents."""
    if kappa == 2.0:
        return x
    if kappa == 2.5:
        return x * math.sqrt(x)
    if kappa == 1.5:
        return math.sqrt(x)
    if kappa == 3.0:
        return x * x
    return x ** (kappa - 1.0)


@njit(cache=True)
def react(x, dt, lam, mu, kappa):
    """Explicit Euler for x' = lam x - mu x^kappa, sub-stepped when stiff."""
    if x <= 0.0:
        return 0.0
    px = power_km1(x, kappa)
    stiff = mu * px * dt
    if stiff <= 0.5:
        return x + dt * x * (lam - mu * px)
    m = int(math.ceil(stiff / 0.5))
    h = dt / m
    for _ in range(m):
        px = power_km1(x, kappa)
        x = x + h * x * (lam - mu * px)
        if x <= 0.0:
            return 0.0
    return x


@njit(cache=True)
def u_fluxes(u, vols, ball, inv_area, kdiff, half_w, inv_dc, n_over_Rn, limiter,
             inv_vols, pre, vr, flux):
    """Face fluxes F = r^{n-1}(u_r - u v_r) and v_r at every face.

    r^{n-1} v_r = -(M(r) - mean r^n/n) with M the prefix mass; the prefix
    sum has nonnegative addends, so it needs no compensation.
    Returns (mean, max outflow rate, max u).
    """
    N = u.size
    s = 0.0
    umax = 0.0
    pre[0] = 0.0
    for i in range(N):
        s += vols[i] * u[i]
        pre[i + 1] = s
        umax = max(umax, u[i])
    mean = n_over_Rn * s
    vr[0] = 0.0
    flux[0] = 0.0
    flux[N] = 0.0
    adv_max = 0.0
    out_prev = 0.0  # outflow of cell f-1 through its inner face
    slope_prev = 0.0  # limited slope of cell f-1 (zero in the origin cell)
    for f in range(1, N):
        cum = pre[f] - mean * ball[f]
        vr[f] = -cum * inv_area[f]
        slope_next = 0.0
        if limiter and f + 1 < N:
            d0 = (u[f] - u[f - 1]) * inv_dc[f]
            d1 = (u[f + 1] - u[f]) * inv_dc[f + 1]
            if d0 * d1 > 0.0:
                slope_next = d0 if abs(d0) < abs(d1) else d1
        if cum > 0.0:
            # inward transport, upwind cell is the outer one
            uf = u[f] - half_w[f] * slope_next
            rate = out_prev * inv_vols[f - 1]
            out_prev = cum
        else:
            uf = u[f - 1] + half_w[f - 1] * slope_prev
            rate = (out_prev - cum) * inv_vols[f - 1]
            out_prev = 0.0
        adv_max = max(adv_max, rate)
        slope_prev = slope_next
        flux[f] = kdiff[f] * (u[f] - u[f - 1]) + cum * uf
    vr[N] = -(pre[N] - mean * ball[N]) * inv_area[N]
    adv_max = max(adv_max, out_prev * inv_vols[N - 1])
    return mean, adv_max, umax


@njit(cache=True)
def u_apply(u, dt, inv_vols, vols, flux, lam, mu, kappa):
    """u += dt (F_{i+1} - F_i)/V_i, clip at zero, then react. Returns (clipped, max u)."""
    clipped = 0.0
    umax = 0.0
    stiff_at = 0.5 / (mu * dt)
    for i in range(u.size):
        x = u[i] + dt * (flux[i + 1] - flux[i]) * inv_vols[i]
        if x < 0.0:
            clipped -= x * vols[i]
            x = 0.0
        px = power_km1(x, kappa)
        if px <= stiff_at:
            x = x + dt * x * (lam - mu * px)
        else:
            x = react(x, dt, lam, mu, kappa)
        u[i] = x
        umax = max(umax, x)
    return clipped, umax


@njit(cache=True)
def u_select_dt(adv_max, umax, diff_rate, cfl_d, cfl_a, lam, mu, kappa):
    dt = cfl_d / diff_rate
    if adv_max > 0.0:
        dt = min(dt, cfl_a / adv_max)
    react_rate = lam + mu * kappa * power_km1(umax, kappa)
    if react_rate > 0.0:
        dt = min(dt, 0.5 / react_rate)
    return dt


@njit(cache=True)
def u_advance(u, t, t_stop, max_steps, vols, ball, inv_area, kdiff, half_w, inv_dc, n_over_Rn,
              inv_vols, lam, mu, kappa, limiter, diff_rate, cfl_d, cfl_a, dt_min, threshold,
              g_t, g_u, g_state, pre, vr, flux):
    """Step u in place until t_stop, the density threshold, or dt collapse.

    g_state = [count, last logged max]; the growth log records (t, max u)
    every time max u exceeds the previous logged value by 1%.
    Returns (t, status, steps, clipped mass, last dt).
    """
    steps = 0
    clipped = 0.0
    dt = 0.0
    while t < t_stop and steps < max_steps:
        mean, adv_max, umax = u_fluxes(u, vols, ball, inv_area, kdiff, half_w, inv_dc, n_over_Rn,
                                       limiter, inv_vols, pre, vr, flux)
        dt = u_select_dt(adv_max, umax, diff_rate, cfl_d, cfl_a, lam, mu, kappa)
        remaining = t_stop - t
        last = False
        if dt >= remaining:
            dt = remaining
            last = True
        elif dt < dt_min:
            return t, DT_COLLAPSE, steps, clipped, dt
        clip, umax = u_apply(u, dt, inv_vols, vols, flux, lam, mu, kappa)
        clipped += clip
        if last:
            t = t_stop
        else:
            t = t + dt
        steps += 1
        if not math.isfinite(umax):
            return t, NONFINITE, steps, clipped, dt
        if umax > 1.01 * g_state[1]:
            k = int(g_state[0])
            if k < g_t.size:
                g_t[k] = t
                g_u[k] = umax
                g_state[0] = k + 1
            g_state[1] = umax
        if umax >= threshold:
            return t, THRESHOLD, steps, clipped, dt
    return t, RUNNING, steps, clipped, dt


@njit(cache=True)
def w_rate(w, s, inv_ds, dfac, drate, n, n_over_S, lam, damp, kappa, slope, out):
    """Right-hand side of the mass-accumulation equation at every node.

    dfac[i] = 2 n^2 s_i^{2-2/n} / (ds_{i-1} + ds_i) and drate[i] is the
    matching diffusive stability rate. The damping integral int_0^s w_s^kappa
    is a prefix sum of nonnegative terms accumulated in the same sweep.
    Returns (max stable rate of the transport part, max slope).
    """
    M = w.size - 1
    mean = n_over_S * w[M]
    smax = 0.0
    for j in range(M):
        d = (w[j + 1] - w[j]) * inv_ds[j]
        slope[j] = d
        smax = max(smax, d)
    q = 0.0
    rate_max = 0.0
    out[0] = 0.0
    d_prev = slope[0]
    if d_prev > 0.0:
        q = d_prev * power_km1(d_prev, kappa) * (s[1] - s[0])
    for i in range(1, M):
        d = slope[i]
        c = n * w[i] - mean * s[i]
        if c > 0.0:
            adv = c * d
            arate = c * inv_ds[i]
        else:
            adv = c * d_prev
            arate = -c * inv_ds[i - 1]
        out[i] = dfac[i] * (d - d_prev) + adv + lam * w[i] - damp * q
        rate_max = max(rate_max, drate[i] + arate)
        if d > 0.0:
            q += d * power_km1(d, kappa) * (s[i + 1] - s[i])
        d_prev = d
    out[M] = lam * w[M] - damp * q
    return rate_max, smax


@njit(cache=True)
def w_advance(w, t, t_stop, max_steps, s, inv_ds, dfac, drate, n, n_over_S, lam, damp, mu,
              kappa, cfl, dt_min, threshold, g_t, g_u, g_state, slope, out):
    """Explicit stepping of w in place; threshold applies to n * max w_s."""
    steps = 0
    dt = 0.0
    M = w.size - 1
    while t < t_stop and steps < max_steps:
        rate, smax = w_rate(w, s, inv_ds, dfac, drate, n, n_over_S, lam, damp, kappa, slope, out)
        umax = n * smax
        if not math.isfinite(umax):
            return t, NONFINITE, steps, dt
        if umax > 1.01 * g_state[1]:
            k = int(g_state[0])
            if k < g_t.size:
                g_t[k] = t
                g_u[k] = umax
                g_state[0] = k + 1
            g_state[1] = umax
        if umax >= threshold:
            return t, THRESHOLD, steps, dt
        dt = cfl / rate if rate > 0.0 else t_stop - t
        react_rate = lam + mu * kappa * power_km1(umax, kappa)
        if react_rate > 0.0:
            dt = min(dt, 0.5 / react_rate)
        remaining = t_stop - t
        last = False
        if dt >= remaining:
            dt = remaining
            last = True
        elif dt < dt_min:
            return t, DT_COLLAPSE, steps, dt
        for i in range(1, M + 1):
            w[i] += dt * out[i]
        if last:
            t = t_stop
        else:
            t = t + dt
        steps += 1
    return t, RUNNING, steps, dt
