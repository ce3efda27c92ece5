"""Per^±(n,k) curves {f^n(±c) = f^k(±c)}: defining values, v-roots on
vertical lines, degree checks, sampling and the equidistribution potential.
"""

from __future__ import annotations

import cmath
import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Sequence

import mpmath
import numpy as np

from .cubic import CubicParam, eval_derivative, eval_poly
from .errors import ConditioningError, DomainError
from .params import marking_involution

ROOT_TOL = 1e-8
CLUSTER_TOL = 1e-6


class Sign(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class PerSpec:
    sign: Sign
    n: int
    k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sign", Sign(self.sign))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.k < self.n:
            raise ValueError("need 0 <= k < n")

    @property
    def v_degree(self) -> int:
        return 3 ** (self.n - 1)

    @property
    def total_degree(self) -> int:
        # only exact for k = 0; an upper bound otherwise
        return 3 ** (self.n - 1) if self.sign is Sign.PLUS else 3 ** self.n

    def __str__(self):
        sym = "+" if self.sign is Sign.PLUS else "-"
        return f"Per{sym}({self.n},{self.k})"


def _start(s: PerSpec, p: CubicParam) -> complex:
    return p.c if s.sign is Sign.PLUS else -p.c


def per_value(s: PerSpec, p: CubicParam) -> complex:
    """f^n(±c) - f^k(±c); complex infinity if the orbit overflows.

    Use :func:`per_log_abs` for far-escaped orbits.
    """
    z = _start(s, p)
    zk = z
    for i in range(s.n):
        if i == s.k:
            zk = z
        z = eval_poly(p, z)
        if math.isinf(z.real):
            return complex(math.inf, 0.0)
    return z - zk


def per_value_dv(s: PerSpec, p: CubicParam):
    """per_value and its derivative in v (forward mode)."""
    z = _start(s, p)
    dz = 0j
    zk, dzk = z, dz
    for i in range(s.n):
        if i == s.k:
            zk, dzk = z, dz
        dz = eval_derivative(p, z) * dz + 1.0
        z = eval_poly(p, z)
    return z - zk, dz - dzk


def per_log_abs(s: PerSpec, p: CubicParam, prec: int = 80) -> float:
    """log|f^n(±c) - f^k(±c)| without overflow (unbounded exponent range)."""
    with mpmath.workprec(prec):
        c = mpmath.mpc(p.c)
        v = mpmath.mpc(p.v)
        z = c if s.sign is Sign.PLUS else -c
        zk = z
        for i in range(s.n):
            if i == s.k:
                zk = z
            z = (z - c) ** 2 * (z + 2 * c) + v
        d = z - zk
        if d == 0:
            return -math.inf
        return float(mpmath.log(abs(d)))


def equidist_potential(s: PerSpec, p: CubicParam) -> float:
    """3^-n log|f^n(±c) - f^k(±c)|; -inf exactly on the curve."""
    val = per_log_abs(s, p)
    return val / 3.0 ** s.n if math.isfinite(val) else -math.inf


def aberth(coeffs: Sequence[complex], tol: float = 1e-14, max_iter: int = 500) -> np.ndarray:
    """All roots of a polynomial (highest degree first) by Aberth iteration."""
    a = np.trim_zeros(np.asarray(coeffs, dtype=complex), "f")
    deg = len(a) - 1
    if deg < 1:
        return np.empty(0, dtype=complex)
    a = a / a[0]
    da = np.polyder(a)
    center = -a[1] / deg
    shifted = np.poly1d(a)(np.poly1d([1.0, center]))
    b = np.asarray(shifted.coeffs, dtype=complex)
    rad = max(abs(b[j]) ** (1.0 / j) for j in range(1, deg + 1)) or 1.0
    z = center + rad * np.exp(2j * np.pi * (np.arange(deg) + 0.25) / deg)
    last = math.inf
    for _ in range(max_iter):
        pv = np.polyval(a, z)
        dv = np.polyval(da, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pv / dv
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            s = np.sum(1.0 / diff, axis=1)
            w = ratio / (1.0 - ratio * s)
        w = np.where(np.isfinite(w), w, 0.0)
        z = z - w
        if np.all(np.abs(w) <= tol * (1.0 + np.abs(z))):
            break
        # rounding floor reached: corrections stop shrinking
        size = float(np.max(np.abs(w) / (1.0 + np.abs(z))))
        if size < 1e-11 and size >= last:
            break
        last = size
    return z


def _interp_coeffs(fn, deg: int, center: complex, radius: float) -> np.ndarray:
    """Coefficients (lowest first) of a degree-``deg`` polynomial in
    (v - center)/radius from its values on deg + 1 circle nodes."""
    m = deg + 1
    w = np.exp(2j * np.pi * np.arange(m) / m)
    vals = np.array([fn(center + radius * wi) for wi in w])
    if not np.all(np.isfinite(vals)):
        raise ConditioningError("interpolation values overflowed")
    return np.fft.fft(vals) / m


def _interp_coeffs_mp(fn_mp, deg: int, center: complex, radius: float, prec: int):
    with mpmath.workprec(prec):
        m = deg + 1
        nodes = [mpmath.mpc(center) + radius * mpmath.expjpi(mpmath.mpf(2 * j) / m)
                 for j in range(m)]
        vals = [fn_mp(x) for x in nodes]
        coefs = []
        for q in range(m):
            acc = mpmath.mpc(0)
            for j in range(m):
                acc += vals[j] * mpmath.expjpi(-mpmath.mpf(2 * j * q) / m)
            coefs.append(acc / m)
        return coefs


def _polish_v(s: PerSpec, c0: complex, v: complex, iters: int = 60) -> complex:
    best, best_res = v, abs(per_value(s, CubicParam(c0, v)))
    for _ in range(iters):
        val, dval = per_value_dv(s, CubicParam(c0, v))
        if dval == 0 or not cmath.isfinite(val):
            break
        step = val / dval
        v = v - step
        res = abs(per_value(s, CubicParam(c0, v)))
        if res < best_res:
            best, best_res = v, res
        if res == 0 or abs(step) < 1e-16 * max(1.0, abs(v)):
            break
    return best


def cluster_roots(roots: Iterable[complex], tol: float = CLUSTER_TOL) -> List[tuple]:
    """Group nearby roots: [(representative, multiplicity), ...]."""
    out: List[list] = []
    for r in roots:
        for entry in out:
            if abs(entry[0] - r) <= tol * max(1.0, abs(r)):
                entry[1] += 1
                break
        else:
            out.append([r, 1])
    return [(r, m) for r, m in out]


def _roots_acceptable(s: PerSpec, c0: complex, roots) -> bool:
    """Polished roots must solve the equation and not have merged."""
    deg = s.v_degree
    scale = max(1.0, abs(c0)) ** deg
    for r, mult in cluster_roots(roots):
        val, dval = per_value_dv(s, CubicParam(c0, r))
        if not abs(val) <= 1e-9 * scale:
            return False
        # a genuine multiple root has a (nearly) vanishing v-derivative
        if mult > 1 and abs(dval) > 1e-3 * scale / max(1.0, abs(c0)):
            return False
    return True


def _per_dv_array(s: PerSpec, c0: complex, v: np.ndarray):
    c = complex(c0)
    z = np.full(v.shape, c if s.sign is Sign.PLUS else -c, dtype=complex)
    dz = np.zeros_like(z)
    zk, dzk = z, dz
    with np.errstate(all="ignore"):
        for i in range(s.n):
            if i == s.k:
                zk, dzk = z, dz
            dz = 3.0 * (z * z - c * c) * dz + 1.0
            z = (z - c) ** 2 * (z + 2.0 * c) + v
    return z - zk, dz - dzk


def _aberth_exact(s: PerSpec, c0: complex, seeds: np.ndarray, max_iter: int = 200) -> np.ndarray:
    """Aberth sweeps driven by the exact iterated map; the mutual repulsion
    keeps seeds from collapsing onto the same simple root."""
    z = np.array(seeds, dtype=complex)
    last = math.inf
    for _ in range(max_iter):
        val, dval = _per_dv_array(s, c0, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = val / dval
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            w = ratio / (1.0 - ratio * np.sum(1.0 / diff, axis=1))
        w = np.where(np.isfinite(w), w, 0.0)
        z = z - w
        size = float(np.max(np.abs(w) / (1.0 + np.abs(z)))) if len(z) else 0.0
        if size < 1e-15 or (size < 1e-10 and size >= last):
            break
        last = size
    return z


def _plus_v_roots(s: PerSpec, c0: complex) -> list:
    deg = s.v_degree
    radius = max(1.0, abs(c0))
    fn = lambda v: per_value(s, CubicParam(c0, v))
    coefs = _interp_coeffs(fn, deg, 0j, radius)
    seeds = _aberth_exact(s, c0, radius * aberth(coefs[::-1]))
    roots = [_polish_v(s, c0, complex(v)) for v in seeds]
    if _roots_acceptable(s, c0, roots):
        return roots
    # the interpolant only seeds Newton; retry in extended precision
    roots = [_polish_v(s, c0, v) for v in _plus_v_roots_mp(s, c0, deg, radius)]
    if not _roots_acceptable(s, c0, roots):
        raise ConditioningError(f"v-roots of {s} at c0={c0} failed the residual check")
    return roots


def _plus_v_roots_mp(s: PerSpec, c0: complex, deg: int, radius: float) -> np.ndarray:
    prec = 160

    def fn_mp(v):
        c = mpmath.mpc(c0)
        z = c
        zk = z
        for i in range(s.n):
            if i == s.k:
                zk = z
            z = (z - c) ** 2 * (z + 2 * c) + v
        return z - zk

    coefs = _interp_coeffs_mp(fn_mp, deg, 0j, radius, prec)
    with mpmath.workprec(prec):
        try:
            r = mpmath.polyroots(coefs[::-1], maxsteps=400, extraprec=prec)
        except mpmath.libmp.libhyper.NoConvergence as exc:
            raise ConditioningError(f"v-root interpolation failed for {s} at c0={c0}") from exc
    return np.array([complex(x) * radius for x in r])


def v_roots_on_line(s: PerSpec, c0: complex, with_multiplicity: bool = False):
    """The 3^(n-1) roots v of per_value(s, (c0, v)), counted with multiplicity.

    Per^- roots are read off Per^+ at -c0 through the marking involution,
    which keeps the interpolation circle centred on the roots.
    """
    c0 = complex(c0)
    if s.sign is Sign.MINUS:
        plus = PerSpec(Sign.PLUS, s.n, s.k)
        # iota(-c0, u) = (c0, u + 4(-c0)^3) = (c0, u - 4c0^3)
        roots = [_polish_v(s, c0, u - 4.0 * c0 ** 3) for u in _plus_v_roots(plus, -c0)]
    else:
        roots = _plus_v_roots(s, c0)
    roots.sort(key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    if with_multiplicity:
        return cluster_roots(roots)
    return roots


def total_degree_check(s: PerSpec, seed: int = 0, max_lines: int = 5) -> int:
    """Degree of per_value restricted to a random complex line in C^2."""
    if s.n > 5:
        raise DomainError("total_degree_check supports n <= 5")
    rng = np.random.default_rng(seed)
    bound = 3 ** s.n
    m = 2 * bound + 2
    nodes = np.exp(2j * np.pi * np.arange(m) / m)
    best = None
    for _ in range(max_lines):
        p0 = complex(*rng.normal(size=2)) * 0.5, complex(*rng.normal(size=2)) * 0.5
        q = np.exp(2j * np.pi * rng.random(2))
        rho = 4.0
        vals = np.array([per_value(s, CubicParam(p0[0] + rho * t * q[0], p0[1] + rho * t * q[1]))
                         for t in nodes])
        if not np.all(np.isfinite(vals)):
            continue
        coefs = np.abs(np.fft.fft(vals) / m)
        top = coefs.max()
        idx = np.nonzero(coefs > 1e-8 * top)[0]
        deg = int(idx.max())
        # a line nearly parallel to a degeneracy shows up as a weak top term
        if coefs[deg] > 1e-5 * top:
            return deg
        best = deg if best is None else max(best, deg)
    if best is None:
        raise ConditioningError("no usable line for the degree check")
    return best


def sample_curve(s: PerSpec, c_window, resolution: int = 16) -> List[CubicParam]:
    """Points of the curve over a c-grid (or an explicit list of c values)."""
    if isinstance(c_window, (tuple, list)) and len(c_window) == 4 and all(
            isinstance(x, (int, float)) for x in c_window) and c_window[1] > c_window[0]:
        x0, x1, y0, y1 = c_window
        xs = np.linspace(x0, x1, resolution)
        ys = np.linspace(y0, y1, resolution) if y1 > y0 else np.array([y0])
        cs = [complex(x, y) for y in ys for x in xs]
    else:
        cs = [complex(c) for c in c_window]
    out = []
    for c0 in cs:
        for v in v_roots_on_line(s, c0):
            p = CubicParam(c0, v)
            if abs(per_value(s, p)) < ROOT_TOL:
                out.append(p)
    return out


def write_curve_csv(s: PerSpec, points: Sequence[CubicParam], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sign", "n", "k", "re_c", "im_c", "re_v", "im_v", "residual"])
        for p in points:
            w.writerow([s.sign.value, s.n, s.k, repr(p.c.real), repr(p.c.imag),
                        repr(p.v.real), repr(p.v.imag), repr(abs(per_value(s, p)))])
    return path


def involution_partner(s: PerSpec) -> PerSpec:
    other = Sign.MINUS if s.sign is Sign.PLUS else Sign.PLUS
    return PerSpec(other, s.n, s.k)


__all__ = [
    "Sign", "PerSpec", "per_value", "per_value_dv", "per_log_abs", "equidist_potential",
    "aberth", "cluster_roots", "v_roots_on_line", "total_degree_check", "sample_curve",
    "write_curve_csv", "involution_partner", "marking_involution",
]
