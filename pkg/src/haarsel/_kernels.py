"""Compiled inner loops for the penalized IRLS solver."""

import numpy as np
from numba import njit

PEN_NONE = 0
PEN_L1 = 1
PEN_SCAD = 2
PEN_RIDGE = 3


@njit(cache=True)
def soft_threshold(z, gamma):
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


@njit(cache=True)
def scad_value(theta, lam, tau):
    t = abs(theta)
    if t <= lam:
        return lam * t
    if t <= tau * lam:
        return -(t * t - 2.0 * tau * lam * t + lam * lam) / (2.0 * (tau - 1.0))
    return (tau + 1.0) * lam * lam / 2.0


@njit(cache=True)
def _scad_objective(w, u, a, lam, tau):
    return 0.5 * a * (w - u) ** 2 + scad_value(w, lam, tau)


@njit(cache=True)
def scad_update(u, a, lam, tau):
    """argmin_w a/2 (w - u)^2 + SCAD(|w|), exact for any curvature a > 0.

    Each of the three branches is solved on its own interval (the middle
    one is concave when a (tau - 1) <= 1, so its endpoints are used) and
    the best candidate is returned.
    """
    if u == 0.0:
        return 0.0
    sgn = 1.0 if u > 0 else -1.0
    au = abs(u)
    # |w| <= lam
    c1 = min(max(au - lam / a, 0.0), lam)
    # lam < |w| <= tau lam
    denom = 1.0 - 1.0 / ((tau - 1.0) * a)
    if denom > 0.0:
        c2 = (au - tau * lam / ((tau - 1.0) * a)) / denom
        c2 = min(max(c2, lam), tau * lam)
    else:
        c2 = lam
        if _scad_objective(tau * lam, au, a, lam, tau) < _scad_objective(lam, au, a, lam, tau):
            c2 = tau * lam
    # |w| > tau lam
    c3 = max(au, tau * lam)
    best = 0.0
    fbest = _scad_objective(0.0, au, a, lam, tau)
    for c in (c1, c2, c3):
        f = _scad_objective(c, au, a, lam, tau)
        if f < fbest:
            fbest = f
            best = c
    return sgn * best


@njit(cache=True)
def cd_solve(X, W, s, w, b0, pen_kind, lam, pen_w, tau, free, tol, max_cycles, active_every):
    """Coordinate descent on 1/2 sum_m W_m (z_m - b0 - x_m w)^2 + penalty.

    ``s`` holds the weighted residual ``W * (z - b0 - X w)`` and is updated
    in place along with ``w``. Returns the new intercept and cycle count.
    """
    M, K = X.shape
    a = np.zeros(K)
    for k in range(K):
        if free[k]:
            acc = 0.0
            for m in range(M):
                acc += W[m] * X[m, k] * X[m, k]
            a[k] = acc
    sw = 0.0
    for m in range(M):
        sw += W[m]
    cycles = 0
    full = True
    since_full = 0
    while cycles < max_cycles:
        cycles += 1
        maxd = 0.0
        if sw > 0.0:
            acc = 0.0
            for m in range(M):
                acc += s[m]
            db = acc / sw
            if db != 0.0:
                b0 += db
                for m in range(M):
                    s[m] -= db * W[m]
                if abs(db) > maxd:
                    maxd = abs(db)
        for k in range(K):
            if not free[k] or a[k] <= 0.0:
                continue
            if not full and w[k] == 0.0:
                continue
            g = 0.0
            for m in range(M):
                g += X[m, k] * s[m]
            ak = a[k]
            u = w[k] + g / ak
            if pen_kind == PEN_L1:
                new = soft_threshold(ak * u, lam * pen_w[k]) / ak
            elif pen_kind == PEN_SCAD:
                new = scad_update(u, ak, lam, tau)
            elif pen_kind == PEN_RIDGE:
                new = ak * u / (ak + lam * pen_w[k])
            else:
                new = u
            d = new - w[k]
            if d != 0.0:
                w[k] = new
                for m in range(M):
                    s[m] -= d * W[m] * X[m, k]
                if abs(d) > maxd:
                    maxd = abs(d)
        if full:
            if maxd < tol:
                break
            full = False
            since_full = 0
        else:
            since_full += 1
            if maxd < tol or since_full >= active_every:
                full = True
    return b0, cycles
