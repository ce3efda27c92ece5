"""Dynamics of a single cubic f(z) = (z - c)^2 (z + 2c) + v.

The critical points are +c and -c, the critical values v and v + 4c^3.
Everything here is a pure function of (c, v, z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from . import _kernels
from .errors import BranchError, DomainError

DEFAULT_BUDGET = 1024
GREEN_TOL = 1e-12


@dataclass(frozen=True)
class CubicParam:
    """A point (c, v) of parameter space, i.e. the polynomial f_{c,v}."""

    c: complex
    v: complex

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))
        object.__setattr__(self, "v", complex(self.v))

    def __iter__(self):
        yield self.c
        yield self.v

    def __repr__(self):
        return f"CubicParam(c={self.c!r}, v={self.v!r})"


@dataclass(frozen=True)
class GreenResult:
    value: float
    iterations: int
    error_bound: float
    escaped: bool

    @property
    def bounded(self) -> bool:
        return not self.escaped


@dataclass(frozen=True)
class Cycle:
    points: tuple
    period: int
    multiplier: complex
    residual: float = 0.0

    @property
    def attracting(self) -> bool:
        return abs(self.multiplier) < 1.0

    @property
    def repelling(self) -> bool:
        return abs(self.multiplier) > 1.0


def _finite(z: complex) -> bool:
    return math.isfinite(z.real) and math.isfinite(z.imag)


def eval_poly(p: CubicParam, z: complex) -> complex:
    """f_{c,v}(z); returns complex infinity on overflow."""
    c, v = p.c, p.v
    z = complex(z)
    try:
        if abs(z) <= 3.0 * abs(c):
            d = z - c
            w = d * d * (z + 2.0 * c) + v
        else:
            w = z * z * z - 3.0 * c * c * z + 2.0 * c * c * c + v
    except OverflowError:
        return complex(math.inf, 0.0)
    if not _finite(w):
        return complex(math.inf, 0.0)
    return w


def eval_monomial(p: CubicParam, z: complex) -> complex:
    c, v = p.c, p.v
    return z * z * z - 3.0 * c * c * z + 2.0 * c * c * c + v


def eval_factored(p: CubicParam, z: complex) -> complex:
    c, v = p.c, p.v
    return (z - c) * (z - c) * (z + 2.0 * c) + v


def eval_derivative(p: CubicParam, z: complex) -> complex:
    return 3.0 * (z * z - p.c * p.c)


def escape_radius(p: CubicParam) -> float:
    """Radius beyond which every orbit escapes with |f(w)| > 2|w|."""
    return max(4.0, 4.0 * (abs(p.c) + abs(p.v) ** (1.0 / 3.0)))


def _tail_eps(p: CubicParam, w: complex) -> float:
    # |f(w)/w^3 - 1| <= eps
    aw = abs(w)
    return (3.0 * abs(p.c) ** 2 * aw + abs(2.0 * p.c ** 3 + p.v)) / aw ** 3


def green_dynamical(p: CubicParam, z: complex, budget: int = DEFAULT_BUDGET,
                    tol: float = GREEN_TOL) -> GreenResult:
    """Escape rate lim 3^-n log|f^n(z)| with a certified tail bound.

    Bounded orbits (never leaving the escape radius within ``budget``
    steps) return value 0 with an infinite error bound.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    r = escape_radius(p)
    w = complex(z)
    n = 0
    while abs(w) <= r:
        if n >= budget:
            return GreenResult(0.0, n, math.inf, False)
        w = eval_poly(p, w)
        n += 1
    # past the escape radius: |log|f(w)/w^3|| <= -log(1 - eps(w))
    while True:
        eps = _tail_eps(p, w)
        bound = -math.log1p(-eps) / 2.0 / 3.0 ** n if eps < 1 else math.inf
        if bound < tol or abs(w) > _kernels.BIG:
            break
        w = eval_poly(p, w)
        n += 1
    return GreenResult(math.log(abs(w)) / 3.0 ** n, n, bound, True)


def bottcher_at(p: CubicParam, z: complex, check_domain: bool = True) -> complex:
    """Böttcher coordinate by the principal-branch infinite product.

    Requires G_f(z) >= max(G^+, G^-).  Raises BranchError when a factor
    f^{k+1}(z)/f^k(z)^3 leaves the right half-plane; callers needing the
    coordinate deeper in must iterate forward first.
    """
    z = complex(z)
    if check_domain:
        gz = green_dynamical(p, z)
        gp = green_dynamical(p, p.c)
        gm = green_dynamical(p, -p.c)
        # boundary points such as the cocritical 2c are limits of U_f
        if not gz.escaped or gz.value < max(gp.value, gm.value) * (1.0 - 1e-9):
            raise DomainError("z is not in the Böttcher domain of f")
    val, ok = _kernels.bottcher_product(p.c, p.v, z)
    if not ok:
        raise BranchError("Böttcher factor left the right half-plane")
    return complex(val)


def iterate(p: CubicParam, z: complex, n: int) -> complex:
    for _ in range(n):
        z = eval_poly(p, z)
    return z


def iterate_with_derivative(p: CubicParam, z: complex, n: int):
    """f^n(z) and (f^n)'(z)."""
    d = 1.0 + 0j
    for _ in range(n):
        d *= eval_derivative(p, z)
        z = eval_poly(p, z)
    return z, d


def refine_cycle(p: CubicParam, seed: complex, period: int, tol: float = 1e-13,
                 max_iter: int = 60) -> Optional[Cycle]:
    """Newton on f^q(w) - w from ``seed``; returns the cycle whatever its type."""
    w = complex(seed)
    for _ in range(max_iter):
        fw, dfw = iterate_with_derivative(p, w, period)
        if not _finite(fw):
            return None
        denom = dfw - 1.0
        if denom == 0:
            break
        step = (fw - w) / denom
        w -= step
        if abs(step) <= tol * max(1.0, abs(w)):
            break
    pts = [w]
    mult = 1.0 + 0j
    z = w
    for _ in range(period):
        mult *= eval_derivative(p, z)
        z = eval_poly(p, z)
        pts.append(z)
    residual = abs(pts[-1] - w)
    if not _finite(pts[-1]) or residual > 1e-8 * max(1.0, abs(w)):
        return None
    # minimal period
    for q in range(1, period):
        if period % q == 0 and abs(pts[q] - w) <= 1e-9 * max(1.0, abs(w)):
            return refine_cycle(p, w, q, tol, max_iter)
    return Cycle(tuple(pts[:-1]), period, mult, residual)


def find_attracting_cycle(p: CubicParam, seed: complex, budget: int = 4000,
                          max_period: int = 64, tol: float = 1e-9) -> Optional[Cycle]:
    """Detect an attracting cycle reached by the orbit of ``seed``.

    Returns None if the orbit escapes or no recurrence is seen.
    """
    r = escape_radius(p)
    z = complex(seed)
    for _ in range(budget):
        z = eval_poly(p, z)
        if abs(z) > r:
            return None
    scale = max(1.0, abs(z))
    w = z
    for q in range(1, max_period + 1):
        w = eval_poly(p, w)
        if abs(w - z) < tol * scale:
            cyc = refine_cycle(p, z, q)
            if cyc is not None and abs(cyc.multiplier) < 1.0:
                return cyc
            return None
    return None


def critical_orbit(p: CubicParam, sign: int, n: int) -> list:
    z = p.c if sign > 0 else -p.c
    out = [z]
    for _ in range(n):
        z = eval_poly(p, z)
        out.append(z)
    return out

