"""Misiurewicz parameters, intersection estimates of mu_bif = T+ ^ T- and the
Monge-Ampere grid estimate of (dd^c max(G+, G-))^2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .cubic import CubicParam, eval_poly, refine_cycle
from .errors import DomainError
from .params import green_minus, green_plus, green_pm_array
from .percurves import PerSpec, v_roots_on_line

DEDUP_TOL = 1e-7
RESIDUAL_TOL = 1e-9
DEGENERATE_C = 1e-6
COND_LIMIT = 1e8
MAX_CELLS = 64 ** 4
GRID_BUDGET = 64


# --- the polynomial system ----------------------------------------------------

def orbit_jet(c, v, start_sign: int, n: int, k: int):
    """f^n(s c) - f^k(s c) with its partials in c and v (forward mode).

    Works elementwise on numpy arrays as well as on scalars.
    """
    z = start_sign * c
    zc = start_sign * np.ones_like(c)
    zv = np.zeros_like(c)
    zk, zkc, zkv = z, zc, zv
    for i in range(n):
        if i == k:
            zk, zkc, zkv = z, zc, zv
        fp = 3.0 * (z * z - c * c)
        # explicit dependence: d/dc [(z-c)^2 (z+2c)] = -6c(z - c)
        zc = fp * zc - 6.0 * c * (z - c)
        zv = fp * zv + 1.0
        z = (z - c) ** 2 * (z + 2.0 * c) + v
    return z - zk, zc - zkc, zv - zkv


def system(c, v, spec):
    n, k, m, l = spec
    f1, f1c, f1v = orbit_jet(c, v, 1, n, k)
    f2, f2c, f2v = orbit_jet(c, v, -1, m, l)
    return (f1, f2), ((f1c, f1v), (f2c, f2v))


def _newton(c: complex, v: complex, spec, max_iter: int = 60, tol: float = 1e-14):
    """Damped Newton; returns (c, v, ok, jacobian condition)."""
    cond = math.inf
    for _ in range(max_iter):
        (f1, f2), ((a, b), (d, e)) = system(c, v, spec)
        jac = np.array([[a, b], [d, e]], dtype=complex)
        if not np.all(np.isfinite(jac)) or not (np.isfinite(f1) and np.isfinite(f2)):
            return c, v, False, cond
        try:
            step = np.linalg.solve(jac, np.array([f1, f2]))
            cond = float(np.linalg.cond(jac))
        except np.linalg.LinAlgError:
            return c, v, False, math.inf
        r0 = max(abs(f1), abs(f2))
        lam = 1.0
        while lam > 1e-6:
            c1, v1 = c - lam * step[0], v - lam * step[1]
            (g1, g2), _ = system(c1, v1, spec)
            if np.isfinite(g1) and np.isfinite(g2) and max(abs(g1), abs(g2)) <= r0:
                break
            lam /= 2.0
        c, v = c1, v1
        if abs(step[0]) + abs(step[1]) <= tol * (1.0 + abs(c) + abs(v)):
            break
    (f1, f2), _ = system(c, v, spec)
    ok = abs(f1) < RESIDUAL_TOL * 1e2 and abs(f2) < RESIDUAL_TOL * 1e2
    return complex(c), complex(v), bool(ok), cond


# --- Misiurewicz parameters -----------------------------------------------------

@dataclass
class MisiurewiczCandidate:
    p: CubicParam
    spec: Tuple[int, int, int, int]
    residuals: Tuple[float, float]
    plus_multiplier: Optional[complex]
    minus_multiplier: Optional[complex]
    strict: Tuple[bool, bool]
    degenerate: bool = False
    condition: float = math.nan
    provenance: str = "grid"

    @property
    def is_misiurewicz(self) -> bool:
        return all(self.strict) and not self.degenerate

    def to_json(self) -> dict:
        def cx(z):
            return None if z is None else [z.real, z.imag]
        return {"c": cx(self.p.c), "v": cx(self.p.v), "spec": list(self.spec),
                "residuals": list(self.residuals),
                "plus_multiplier": cx(self.plus_multiplier),
                "minus_multiplier": cx(self.minus_multiplier),
                "strict": list(self.strict), "degenerate": self.degenerate,
                "misiurewicz": self.is_misiurewicz, "condition": self.condition,
                "provenance": self.provenance}


def _landing(p: CubicParam, sign: int, n: int, k: int):
    """(strict, multiplier) for the orbit of sign*c landing after k steps."""
    z0 = sign * p.c
    z = z0
    for _ in range(k):
        z = eval_poly(p, z)
    cyc = refine_cycle(p, z, n - k)
    if cyc is None:
        return False, None
    on_cycle = any(abs(z0 - w) <= DEDUP_TOL * max(1.0, abs(w)) for w in cyc.points)
    strict = k >= 1 and not on_cycle and abs(cyc.multiplier) > 1.0
    return strict, complex(cyc.multiplier)


def classify(p: CubicParam, spec, provenance: str = "grid", condition: float = math.nan):
    n, k, m, l = spec
    (f1, f2), _ = system(p.c, p.v, spec)
    degenerate = abs(p.c) < DEGENERATE_C
    sp, mp = _landing(p, 1, n, k)
    sm, mm = _landing(p, -1, m, l)
    if degenerate:
        sp = sm = False
    return MisiurewiczCandidate(p, tuple(spec), (float(abs(f1)), float(abs(f2))), mp, mm,
                                (sp, sm), degenerate, condition, provenance)


def _in_region(c: complex, v: complex, region) -> bool:
    if region is None:
        return True
    cw = region[0] if len(region) == 2 else region
    ok = cw[0] <= c.real <= cw[1] and cw[2] <= c.imag <= cw[3]
    if len(region) == 2 and region[1] is not None:
        vw = region[1]
        ok = ok and vw[0] <= v.real <= vw[1] and vw[2] <= v.imag <= vw[3]
    return ok


def _dedup(points: List[Tuple[complex, complex, float]]):
    out: List[Tuple[complex, complex, float]] = []
    for c, v, cond in points:
        scale = 1.0 + abs(c) + abs(v)
        if all(abs(c - c2) + abs(v - v2) > DEDUP_TOL * scale for c2, v2, _ in out):
            out.append((c, v, cond))
    return out


def grid_seeds(spec, c_window, resolution: int = 64):
    """(c, v) seeds: local minima of |Per^-| over the Per^+ sheets of a c-grid.

    Sheets are matched between neighbouring c cells by nearest v-root.
    """
    n, k, m, l = spec
    plus = PerSpec("plus", n, k)
    x0, x1, y0, y1 = c_window
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    roots = np.empty((resolution, resolution), dtype=object)
    vals = np.empty((resolution, resolution), dtype=object)
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            c = complex(x, y)
            vs = np.array(v_roots_on_line(plus, c), dtype=complex)
            f2, _, _ = orbit_jet(np.full(vs.shape, c), vs, -1, m, l)
            roots[j, i] = vs
            vals[j, i] = np.abs(f2)
    seeds = []
    for j in range(resolution):
        for i in range(resolution):
            for r, (v, q) in enumerate(zip(roots[j, i], vals[j, i])):
                best = True
                for dj in (-1, 0, 1):
                    for di in (-1, 0, 1):
                        jj, ii = j + dj, i + di
                        if (dj or di) and 0 <= jj < resolution and 0 <= ii < resolution:
                            near = int(np.argmin(np.abs(roots[jj, ii] - v)))
                            if vals[jj, ii][near] < q:
                                best = False
                if best:
                    seeds.append((complex(xs[i], ys[j]), complex(v)))
    return seeds


@dataclass
class SolveReport:
    candidates: List[MisiurewiczCandidate]
    dropped_singular: int = 0
    seeds: int = 0

    @property
    def misiurewicz(self) -> List[MisiurewiczCandidate]:
        return [m for m in self.candidates if m.is_misiurewicz]

    @property
    def filtered(self) -> List[MisiurewiczCandidate]:
        return [m for m in self.candidates if not m.is_misiurewicz]

    def to_json(self) -> dict:
        return {"points": [m.to_json() for m in self.candidates],
                "dropped_singular": self.dropped_singular, "seeds": self.seeds}


def misiurewicz_solve(n: int, k: int, m: int, l: int, region=(-2.0, 2.0, -2.0, 2.0),
                      seed_resolution: int = 64, method: str = "grid") -> SolveReport:
    """All solutions of f^n(c) = f^k(c), f^m(-c) = f^l(-c) found in ``region``.

    ``region`` is a c-window (reMin, reMax, imMin, imMax) or a pair
    (c-window, v-window).  ``method="grid"`` seeds Newton from grid minima;
    ``method="homotopy"`` tracks every path of a total-degree homotopy.
    """
    spec = (n, k, m, l)
    if not (0 <= k < n and 0 <= l < m):
        raise ValueError("need k < n and l < m")
    if n + m > 8:
        raise DomainError("n + m <= 8 supported")
    cw = region[0] if len(region) == 2 else region
    dropped = 0
    found = []
    if method == "grid":
        seeds = grid_seeds(spec, cw, seed_resolution)
        for c, v in seeds:
            c1, v1, ok, cond = _newton(c, v, spec)
            if not ok:
                dropped += 1
                continue
            found.append((c1, v1, cond))
    elif method == "homotopy":
        seeds = []
        for pt in homotopy_solve(spec).points:
            found.append((pt.c, pt.v, pt.condition))
    else:
        raise ValueError(f"unknown method {method!r}")
    out = []
    for c, v, cond in _dedup(found):
        if _in_region(c, v, region):
            out.append(classify(CubicParam(c, v), spec, method, cond))
    out.sort(key=lambda mc: (round(mc.p.c.real, 9), round(mc.p.c.imag, 9),
                             round(mc.p.v.real, 9), round(mc.p.v.imag, 9)))
    return SolveReport(out, dropped, len(seeds))


def write_candidates_csv(cands: Sequence[MisiurewiczCandidate], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re_c", "im_c", "re_v", "im_v", "res_plus", "res_minus",
                    "strict_plus", "strict_minus", "degenerate"])
        for mc in cands:
            w.writerow([repr(mc.p.c.real), repr(mc.p.c.imag), repr(mc.p.v.real),
                        repr(mc.p.v.imag), repr(mc.residuals[0]), repr(mc.residuals[1]),
                        int(mc.strict[0]), int(mc.strict[1]), int(mc.degenerate)])
    return path


# --- total-degree homotopy ------------------------------------------------------

@dataclass
class Endpoint:
    c: complex
    v: complex
    multiplicity: int
    condition: float
    degenerate: bool
    residual: float


@dataclass
class HomotopyResult:
    spec: Tuple[int, int, int, int]
    points: List[Endpoint]
    paths: int
    failed: int
    bezout: int


def _degrees(spec):
    n, k, m, l = spec
    return 3 ** (n - 1), 3 ** m


def homotopy_solve(spec, seed: int = 1, max_steps: int = 20000) -> HomotopyResult:
    """Track H = (1 - t) gamma G + t F from the roots of G = (c^d1 - 1, v^d2 - 1).

    F has no zeros at infinity, so all d1 * d2 paths end at affine roots;
    endpoints are clustered to read off multiplicities.
    """
    d1, d2 = _degrees(spec)
    rng = np.random.default_rng(seed)
    gamma = np.exp(2j * np.pi * rng.random())
    r1 = np.exp(2j * np.pi * np.arange(d1) / d1)
    r2 = np.exp(2j * np.pi * np.arange(d2) / d2)
    c = np.repeat(r1, d2).astype(complex)
    v = np.tile(r2, d1).astype(complex)
    npath = c.size
    t = np.zeros(npath)
    dt = np.full(npath, 0.01)
    active = np.ones(npath, dtype=bool)
    failed = np.zeros(npath, dtype=bool)
    t_end = 1.0 - 1e-10
    # equations are rescaled to unit size at the start points
    (s1, s2), _ = system(c, v, spec)
    w1 = 1.0 / max(1.0, float(np.median(np.abs(s1))))
    w2 = 1.0 / max(1.0, float(np.median(np.abs(s2))))

    def h_and_jac(c, v, t):
        (f1, f2), ((f1c, f1v), (f2c, f2v)) = system(c, v, spec)
        f1, f1c, f1v = w1 * f1, w1 * f1c, w1 * f1v
        f2, f2c, f2v = w2 * f2, w2 * f2c, w2 * f2v
        g1 = c ** d1 - 1.0
        g2 = v ** d2 - 1.0
        s = 1.0 - t
        h1 = s * gamma * g1 + t * f1
        h2 = s * gamma * g2 + t * f2
        j11 = s * gamma * d1 * c ** (d1 - 1) + t * f1c
        j12 = t * f1v
        j21 = t * f2c
        j22 = s * gamma * d2 * v ** (d2 - 1) + t * f2v
        ht1 = f1 - gamma * g1
        ht2 = f2 - gamma * g2
        return (h1, h2), (j11, j12, j21, j22), (ht1, ht2)

    def solve2(j, r1_, r2_):
        j11, j12, j21, j22 = j
        det = j11 * j22 - j12 * j21
        return (j22 * r1_ - j12 * r2_) / det, (-j21 * r1_ + j11 * r2_) / det

    with np.errstate(all="ignore"):
        for _ in range(max_steps):
            idx = np.nonzero(active)[0]
            if idx.size == 0:
                break
            ci, vi, ti, hi = c[idx], v[idx], t[idx], np.minimum(dt[idx], t_end - t[idx])
            # Euler predictor along dx/dt = -H_x^{-1} H_t
            _, j, ht = h_and_jac(ci, vi, ti)
            dc, dv = solve2(j, ht[0], ht[1])
            cp, vp, tp = ci - hi * dc, vi - hi * dv, ti + hi
            ok = np.isfinite(cp) & np.isfinite(vp)
            for _ in range(3):
                (h1, h2), j, _ = h_and_jac(cp, vp, tp)
                sc, sv = solve2(j, h1, h2)
                cp, vp = cp - sc, vp - sv
            scale = 1.0 + np.abs(cp) + np.abs(vp)
            conv = ok & np.isfinite(cp) & np.isfinite(vp) & (np.abs(sc) + np.abs(sv) < 1e-8 * scale)
            good = idx[conv]
            c[good], v[good], t[good] = cp[conv], vp[conv], tp[conv]
            dt[good] = np.minimum(dt[good] * 1.5, 0.05)
            bad = idx[~conv]
            dt[bad] /= 2.0
            failed[bad[dt[bad] < 1e-14]] = True
            active = (t < t_end) & ~failed
    # Newton on F at the end points
    points = []
    raw = []
    # paths stalling close to t = 1 run into singular end points; keep them
    lost = failed & (t < 0.95)
    for i in range(npath):
        if lost[i]:
            continue
        ci, vi, _, cond = _newton(complex(c[i]), complex(v[i]), spec, max_iter=100)
        raw.append((ci, vi, cond))
    clusters: List[list] = []
    for ci, vi, cond in raw:
        # simple roots polish to full accuracy; multiple ones only to ~eps^(1/mult)
        singular = not cond < COND_LIMIT
        tol = 1e-3 if singular else 1e-8
        for cl in clusters:
            t_cl = 1e-3 if not cl[2] < COND_LIMIT else tol
            if abs(cl[0] - ci) + abs(cl[1] - vi) < t_cl * (1.0 + abs(ci) + abs(vi)):
                cl[3] += 1
                break
        else:
            clusters.append([ci, vi, cond, 1])
    for ci, vi, cond, mult in clusters:
        (f1, f2), _ = system(ci, vi, spec)
        points.append(Endpoint(ci, vi, mult, cond, abs(ci) < DEGENERATE_C or cond > COND_LIMIT,
                               float(max(abs(f1), abs(f2)))))
    return HomotopyResult(tuple(spec), points, npath, int(lost.sum()), d1 * d2)


@dataclass
class PairTotal:
    plus: Tuple[int, int]
    minus: Tuple[int, int]
    count: int
    weight: Fraction
    total: float
    total_without_degenerate: float
    degenerate_count: int
    flagged: List[Endpoint] = field(default_factory=list)
    points: List[Endpoint] = field(default_factory=list)
    failed_paths: int = 0

    @property
    def cap(self) -> float:
        n, m = self.plus[0], self.minus[0]
        return 3.0 ** (n - 1) * 3.0 ** m * 3.0 ** (-n - m)

    def to_json(self) -> dict:
        return {"plus": list(self.plus), "minus": list(self.minus), "count": self.count,
                "weight": str(self.weight), "total": self.total,
                "total_without_degenerate": self.total_without_degenerate,
                "degenerate_count": self.degenerate_count, "cap": self.cap,
                "failed_paths": self.failed_paths,
                "points": [{"c": [p.c.real, p.c.imag], "v": [p.v.real, p.v.imag],
                            "multiplicity": p.multiplicity, "degenerate": p.degenerate}
                           for p in self.points]}


@dataclass
class IntersectionEstimate:
    pairs: List[PairTotal]
    total: float
    region: Optional[tuple]

    def to_json(self) -> dict:
        return {"pairs": [p.to_json() for p in self.pairs], "total": self.total,
                "region": None if self.region is None else [list(r) if r else None for r in
                                                            (self.region if len(self.region) == 2 else (self.region,))]}


def default_pairs(n_max: int):
    return [((n, 0), (n, 0)) for n in range(1, n_max + 1)]


def intersection_total(plus: Tuple[int, int], minus: Tuple[int, int], region=None) -> PairTotal:
    n, k = plus
    m, l = minus
    res = homotopy_solve((n, k, m, l))
    weight = Fraction(1, 3 ** (n + m))
    inside = [p for p in res.points if _in_region(p.c, p.v, region)]
    count = sum(p.multiplicity for p in inside)
    degen = sum(p.multiplicity for p in inside if abs(p.c) < DEGENERATE_C)
    flagged = [p for p in inside if p.degenerate]
    return PairTotal(plus, minus, count, weight, float(count * weight),
                     float((count - degen) * weight), degen, flagged, inside, res.failed)


def mu_bif_intersection_estimate(n_max: int = 2, region=None, pairs=None) -> IntersectionEstimate:
    """Weighted intersections 3^(-n-m) [Per+(n,k)] ^ [Per-(m,l)] per pair.

    ``total`` is the estimate from the last (highest-degree) pair.  Points
    at c = 0 are kept with their multiplicity and also reported apart.
    """
    if n_max > 4:
        raise DomainError("n_max <= 4 supported")
    pairs = default_pairs(n_max) if pairs is None else pairs
    if region is not None and _empty_region(region):
        return IntersectionEstimate([], 0.0, region)
    out = [intersection_total(tuple(a), tuple(b), region) for a, b in pairs]
    return IntersectionEstimate(out, out[-1].total if out else 0.0, region)


def _empty_region(region) -> bool:
    wins = region if len(region) == 2 else (region,)
    return any(w is not None and (w[1] < w[0] or w[3] < w[2]) for w in wins)


# --- Monge-Ampere grid estimate -------------------------------------------------

def max_green(p: CubicParam) -> float:
    return max(green_plus(p).value, green_minus(p).value)


@dataclass
class MongeAmpere:
    masses: np.ndarray
    total: float
    clamped_mass: float
    spacing: Tuple[float, float, float, float]
    c_window: tuple
    v_window: tuple
    smoothing: int


def _axes(window, n):
    return np.linspace(window[0], window[1], n), np.linspace(window[2], window[3], n)


def max_green_grid(c_window, v_window, resolution: int, budget: int = GRID_BUDGET) -> np.ndarray:
    """G = max(G+, G-) on the 4-d grid, axes ordered (Re c, Im c, Re v, Im v).

    An orbit still inside the escape radius after ``budget`` steps has
    G < log(r) / 3^budget, so it is recorded as 0 without loss.
    """
    a, b = _axes(c_window, resolution)
    x, y = _axes(v_window, resolution)
    c = a[:, None] + 1j * b[None, :]
    v = x[:, None] + 1j * y[None, :]
    cc = np.broadcast_to(c[:, :, None, None], (resolution,) * 4)
    vv = np.broadcast_to(v[None, None, :, :], (resolution,) * 4)
    gp, gm, _, _ = green_pm_array(cc.ravel(), vv.ravel(), budget)
    return np.maximum(gp, gm).reshape((resolution,) * 4)


def monge_ampere_density(u: np.ndarray, h: Sequence[float]) -> np.ndarray:
    """(8/pi^2) det of the complex Hessian of u on the interior points.

    Axes are (a, b, x, y) with c = a + ib, v = x + iy.
    """
    ha, hb, hx, hy = h
    inner = (slice(1, -1),) * 4

    def d2(axis, hh):
        sl_p = [slice(1, -1)] * 4
        sl_m = [slice(1, -1)] * 4
        sl_p[axis] = slice(2, None)
        sl_m[axis] = slice(None, -2)
        return (u[tuple(sl_p)] - 2.0 * u[inner] + u[tuple(sl_m)]) / hh ** 2

    def dmix(ax1, h1, ax2, h2):
        def sl(s1, s2):
            s = [slice(1, -1)] * 4
            s[ax1] = s1
            s[ax2] = s2
            return tuple(s)
        up, dn = slice(2, None), slice(None, -2)
        return (u[sl(up, up)] - u[sl(up, dn)] - u[sl(dn, up)] + u[sl(dn, dn)]) / (4.0 * h1 * h2)

    ucc = (d2(0, ha) + d2(1, hb)) / 4.0
    uvv = (d2(2, hx) + d2(3, hy)) / 4.0
    re = (dmix(0, ha, 2, hx) + dmix(1, hb, 3, hy)) / 4.0
    im = (dmix(0, ha, 3, hy) - dmix(1, hb, 2, hx)) / 4.0
    return (8.0 / math.pi ** 2) * (ucc * uvv - re * re - im * im)


def mu_bif_grid_estimate(c_window, v_window, resolution: int = 32, smoothing: int = 2,
                         potential=None, radius: Optional[float] = None) -> MongeAmpere:
    """Discrete (dd^c G)^2 for G = max(G+, G-) on a c-window x v-window grid.

    G is box-averaged over (2 smoothing + 1)^4 cells before the second
    differences; negative cell masses are clamped and reported.  Passing
    ``radius`` fixes the averaging radius in parameter units instead, so
    that refining the grid keeps the smoothed potential the same.
    """
    if resolution < 16:
        raise ValueError("resolution per axis must be >= 16")
    if resolution ** 4 > MAX_CELLS:
        raise MemoryError(f"{resolution}^4 cells exceeds the {MAX_CELLS} cell guard")
    h = ((c_window[1] - c_window[0]) / (resolution - 1), (c_window[3] - c_window[2]) / (resolution - 1),
         (v_window[1] - v_window[0]) / (resolution - 1), (v_window[3] - v_window[2]) / (resolution - 1))
    if radius is not None:
        smoothing = max(1, int(round(radius / max(h))))
    # pad so every kept cell is averaged and differenced over true samples only
    pad = smoothing + 1
    cw = (c_window[0] - pad * h[0], c_window[1] + pad * h[0], c_window[2] - pad * h[1], c_window[3] + pad * h[1])
    vw = (v_window[0] - pad * h[2], v_window[1] + pad * h[2], v_window[2] - pad * h[3], v_window[3] + pad * h[3])
    n = resolution + 2 * pad
    u = max_green_grid(cw, vw, n) if potential is None else potential(cw, vw, n)
    if smoothing > 0:
        u = ndimage.uniform_filter(u, size=2 * smoothing + 1, mode="nearest")
    u = u[(slice(smoothing, n - smoothing),) * 4]
    dens = monge_ampere_density(u, h)
    cell = dens * h[0] * h[1] * h[2] * h[3]
    negative = cell < 0
    clamped = float(cell[negative].sum())
    masses = np.where(negative, 0.0, cell)
    return MongeAmpere(masses, float(math.fsum(masses.ravel())), clamped, h,
                       tuple(c_window), tuple(v_window), smoothing)


def window_around(center: complex, radius: float):
    center = complex(center)
    return (center.real - radius, center.real + radius, center.imag - radius, center.imag + radius)
