"""Numba kernels for the hot loops (grid Green functions, Böttcher products,
figure-eight labels).

Every kernel is a pure per-element map, so results do not depend on the
number of threads.  Thread count is capped by ``BIFCC_THREADS``.
"""

import math
import os

import numba
import numpy as np
from numba import njit, prange

# TBB in this image is too old for numba; workqueue is always available
numba.config.THREADING_LAYER = "workqueue"

# |z| above which the Green tail is below double precision for any
# parameter we handle (|c| <= 1e6); cubing stays finite.
BIG = 1e60
# Böttcher factor considered equal to one.
FACTOR_TOL = 1e-15
# Component margin as a fraction of G^-.
MARGIN = 0.02


def configure_threads():
    value = os.environ.get("BIFCC_THREADS")
    if value:
        try:
            n = max(1, int(value))
        except ValueError:
            return
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


configure_threads()


@njit(cache=True)
def f_eval(c, v, z):
    # factored form near the critical points, monomial form far out
    if abs(z) <= 3.0 * abs(c):
        d = z - c
        return d * d * (z + 2.0 * c) + v
    return z * z * z - 3.0 * c * c * z + 2.0 * c * c * c + v


@njit(cache=True)
def escape_radius(c, v):
    return max(4.0, 4.0 * (abs(c) + abs(v) ** (1.0 / 3.0)))


@njit(cache=True)
def green_point(c, v, z, budget):
    """Return (value, iterations, escaped) for one orbit."""
    r = escape_radius(c, v)
    n = 0
    escaped = False
    for _ in range(budget):
        if abs(z) > r:
            escaped = True
            break
        z = f_eval(c, v, z)
        n += 1
    if not escaped:
        if abs(z) > r:
            escaped = True
        else:
            return 0.0, n, False
    # certified escape: push far out so the tail is negligible
    for _ in range(200):
        if abs(z) > BIG:
            break
        z = f_eval(c, v, z)
        n += 1
    return math.log(abs(z)) / 3.0 ** n, n, True


@njit(cache=True, parallel=True)
def green_grid(c, v, z, budget):
    m = c.size
    out = np.empty(m)
    esc = np.empty(m, dtype=np.bool_)
    for i in prange(m):
        g, _, e = green_point(c[i], v[i], z[i], budget)
        out[i] = g
        esc[i] = e
    return out, esc


@njit(cache=True, parallel=True)
def green_pm_grid(c, v, budget):
    """G^+ and G^- on flat arrays of parameters."""
    m = c.size
    gp = np.empty(m)
    gm = np.empty(m)
    ep = np.empty(m, dtype=np.bool_)
    em = np.empty(m, dtype=np.bool_)
    for i in prange(m):
        g, _, e = green_point(c[i], v[i], c[i], budget)
        gp[i] = g
        ep[i] = e
        g, _, e = green_point(c[i], v[i], -c[i], budget)
        gm[i] = g
        em[i] = e
    return gp, gm, ep, em


@njit(cache=True)
def bottcher_product(c, v, z):
    """Principal-branch product for the Böttcher coordinate at z.

    Returns (value, ok); ok is False when a factor leaves the right
    half-plane, i.e. the principal branch cannot be trusted.
    """
    acc = 0j
    w = z
    scale = 1.0 / 3.0
    for _ in range(400):
        if abs(w) > 1e100:
            break
        w3 = w * w * w
        if w3 == 0:
            return 0j, False
        nxt = f_eval(c, v, w)
        ratio = nxt / w3
        if ratio.real <= 0.0:
            return 0j, False
        if abs(ratio - 1.0) < FACTOR_TOL:
            break
        acc += np.log(ratio) * scale
        scale /= 3.0
        w = nxt
    return z * np.exp(acc), True


@njit(cache=True, parallel=True)
def phi_minus_grid(c, v):
    m = c.size
    out = np.empty(m, dtype=np.complex128)
    ok = np.empty(m, dtype=np.bool_)
    for i in prange(m):
        val, good = bottcher_product(c[i], v[i], 2.0 * c[i])
        out[i] = val
        ok[i] = good
    return out, ok


@njit(cache=True)
def lobe_of(c, v, z, steps):
    """Figure-eight lobe of z: 1, 2, or 0 when undecided.

    The degree-one inverse branch of f is continued from f(-2c) = v (where
    it equals -2c) to w = f(z) along the straight segment; z is in U_1
    exactly when it coincides with that branch value.
    """
    w = f_eval(c, v, z)
    zeta = -2.0 * c
    dw = (w - v) / steps
    for k in range(1, steps + 1):
        target = v + dw * k
        d = 3.0 * (zeta * zeta - c * c)
        if d == 0:
            return 0
        zeta = zeta + dw / d
        for _ in range(4):
            d = 3.0 * (zeta * zeta - c * c)
            if d == 0:
                return 0
            zeta = zeta - (f_eval(c, v, zeta) - target) / d
    scale = abs(w) + abs(c) ** 3 + 1.0
    if abs(f_eval(c, v, zeta) - w) > 1e-9 * scale:
        return 0
    # remaining preimages solve zeta^2 + zeta1*zeta + zeta1^2 - 3c^2 = 0
    disc = np.sqrt(zeta * zeta - 4.0 * (zeta * zeta - 3.0 * c * c) + 0j)
    r1 = (-zeta + disc) / 2.0
    r2 = (-zeta - disc) / 2.0
    d1 = abs(z - zeta)
    d2 = min(abs(z - r1), abs(z - r2))
    sep = min(abs(zeta - r1), abs(zeta - r2))
    if sep == 0.0:
        return 0
    if d1 < 0.25 * sep and d1 < d2:
        return 1
    if d2 < 0.25 * sep and d2 < d1:
        return 2
    return 0


@njit(cache=True)
def itinerary_point(c, v, depth, budget, steps, out):
    """Fill out[:depth] with symbols of +c; return defined depth.

    Symbols: 1, 2, 0 (ambiguous); entries past the defined depth are -1.
    """
    for i in range(depth):
        out[i] = -1
    gm, _, em = green_point(c, v, -c, budget)
    if not em:
        return 0
    limit = gm * (1.0 - MARGIN)
    z = c
    gz, _, ez = green_point(c, v, z, budget)
    defined = 0
    for i in range(depth):
        # G_f(f^i(c)) = 3^i G^+
        level = gz * 3.0 ** i if ez else 0.0
        if level >= gm:
            break
        if level >= limit:
            out[i] = 0
        else:
            out[i] = lobe_of(c, v, z, steps)
        defined += 1
        z = f_eval(c, v, z)
    return defined


@njit(cache=True, parallel=True)
def itinerary_grid(c, v, depth, budget, steps):
    m = c.size
    sym = np.empty((m, depth), dtype=np.int8)
    defined = np.empty(m, dtype=np.int32)
    for i in prange(m):
        row = np.empty(depth, dtype=np.int8)
        defined[i] = itinerary_point(c[i], v[i], depth, budget, steps, row)
        for j in range(depth):
            sym[i, j] = row[j]
    return sym, defined


@njit(cache=True)
def chart_point(k, y, x, tol, max_iter):
    """Newton for phi^-(1/x, y/x) = k in x with a central difference slope.

    Returns (x, residual, ok).
    """
    best_x = x
    best_r = math.inf
    for _ in range(max_iter):
        c = 1.0 / x
        val, good = bottcher_product(c, y * c, 2.0 * c)
        if not good:
            return best_x, best_r, False
        r = abs(val - k)
        if r < best_r:
            best_x, best_r = x, r
        if r < tol:
            return x, r, True
        h = 1e-6 * abs(x)
        cp = 1.0 / (x + h)
        cm = 1.0 / (x - h)
        fp, gp = bottcher_product(cp, y * cp, 2.0 * cp)
        fm, gm = bottcher_product(cm, y * cm, 2.0 * cm)
        if not (gp and gm):
            return best_x, best_r, False
        d = (fp - fm) / (2.0 * h)
        if d == 0:
            return best_x, best_r, False
        x = x - (val - k) / d
    return best_x, best_r, best_r < tol


@njit(cache=True, parallel=True)
def chart_grid(k, y, x0, tol, max_iter):
    m = y.size
    xs = np.empty(m, dtype=np.complex128)
    res = np.empty(m)
    ok = np.empty(m, dtype=np.bool_)
    for i in prange(m):
        xi, ri, oi = chart_point(k, y[i], x0[i], tol, max_iter)
        xs[i] = xi
        res[i] = ri
        ok[i] = oi
    return xs, res, ok
