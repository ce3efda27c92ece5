"""The wringing group acting on H = {Re u > 0}, the radial maps g_u, leaf
tracing by invariant-pair continuation and transversal disks {phi^- = k}.
"""

from __future__ import annotations

import cmath
import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import _kernels
from .cubic import CubicParam, find_attracting_cycle, refine_cycle
from .errors import ContinuationError, DomainError, RegionExitError
from .params import from_near_infinity, green_minus, phi_minus, phi_minus_near
from .percurves import PerSpec, per_value

TWO_23 = 2.0 ** (2.0 / 3.0)
K_MIN = TWO_23 * 500.0
FD_STEP = 1e-6
MAX_HALVINGS = 8


@dataclass(frozen=True)
class WringU:
    """u = s + it with s > 0."""

    s: float
    t: float = 0.0

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError("wringing parameter needs Re u > 0")
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "t", float(self.t))

    def __mul__(self, other: "WringU") -> "WringU":
        return wring_compose(self, other)

    def __complex__(self):
        return complex(self.s, self.t)

    @classmethod
    def from_complex(cls, u: complex) -> "WringU":
        u = complex(u)
        return cls(u.real, u.imag)


def wring_compose(u1: WringU, u2: WringU) -> WringU:
    """(s1 + i t1) * (s2 + i t2) = (s1 + i t1) s2 + i t2."""
    return WringU(u1.s * u2.s, u1.t * u2.s + u2.t)


def wring_identity() -> WringU:
    return WringU(1.0, 0.0)


def g_u(u: WringU, z: complex) -> complex:
    """z |z|^(u-1), defined for |z| > 1."""
    z = complex(z)
    r = abs(z)
    if not r > 1.0:
        raise DomainError("g_u needs |z| > 1")
    return z * cmath.exp((complex(u) - 1.0) * math.log(r))


class Constraint(str, enum.Enum):
    SUPERATTRACTING = "superattracting"
    MULTIPLIER = "multiplier"
    NONE = "none"


@dataclass
class HeldInvariant:
    """Second equation of the leaf system, zero at the base parameter."""

    kind: Constraint
    fn: Callable[[CubicParam], complex]
    label: str = ""

    def __call__(self, p: CubicParam) -> complex:
        return self.fn(p)


def per_plus_invariant(n: int) -> HeldInvariant:
    """Superattracting leaf: +c periodic of period n, f^n(c) - c = 0."""
    spec = PerSpec("plus", n, 0)
    return HeldInvariant(Constraint.SUPERATTRACTING, lambda p: per_value(spec, p),
                         f"per-plus-{n}")


def multiplier_invariant(base: CubicParam, seed: Optional[complex] = None) -> HeldInvariant:
    """Hyperbolic leaf: the attracting cycle of +c keeps its multiplier."""
    cyc = find_attracting_cycle(base, base.c if seed is None else seed)
    if cyc is None:
        raise DomainError("base has no attracting cycle for +c")
    target = cyc.multiplier
    state = {"point": cyc.points[0]}

    def fn(p: CubicParam) -> complex:
        found = refine_cycle(p, state["point"], cyc.period)
        if found is None or found.period != cyc.period:
            return complex(math.inf, 0.0)
        state["point"] = found.points[0]
        return found.multiplier - target

    return HeldInvariant(Constraint.MULTIPLIER, fn, f"multiplier-{cyc.period}")


def no_invariant() -> HeldInvariant:
    return HeldInvariant(Constraint.NONE, lambda p: 0j, "none")


@dataclass
class LeafStep:
    u: WringU
    p: CubicParam
    residual_phi: float
    residual_inv: float
    phi: complex


@dataclass
class LeafTrace:
    base: CubicParam
    constraint: str
    steps: List[LeafStep] = field(default_factory=list)
    phi_base: complex = 0j

    def rows(self):
        for st in self.steps:
            yield (st.u.s, st.u.t, st.p.c.real, st.p.c.imag, st.p.v.real, st.p.v.imag,
                   st.residual_phi, st.residual_inv)

    def write_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "t", "re_c", "im_c", "re_v", "im_v", "residual_phi", "residual_inv"])
            for row in self.rows():
                w.writerow([repr(float(x)) for x in row])
        return path


def _phi(p: CubicParam, ref: complex) -> complex:
    try:
        return phi_minus_near(p, ref).value
    except DomainError as exc:
        raise RegionExitError(str(exc)) from exc


def _system(p: CubicParam, target: complex, ref: complex, inv: HeldInvariant):
    return np.array([_phi(p, ref) - target, inv(p)])


def _jacobian(p: CubicParam, target, ref, inv: HeldInvariant):
    jac = np.empty((2, 2), dtype=complex)
    for col, (dc, dv) in enumerate(((1.0, 0.0), (0.0, 1.0))):
        h = FD_STEP * (1.0 + abs(p.c) + abs(p.v))
        plus = CubicParam(p.c + h * dc, p.v + h * dv)
        minus = CubicParam(p.c - h * dc, p.v - h * dv)
        jac[:, col] = (_system(plus, target, ref, inv) - _system(minus, target, ref, inv)) / (2 * h)
    return jac


def _scales(target: complex, p: CubicParam):
    return max(1.0, abs(target)), max(1.0, abs(p.c) ** 3 + abs(p.v))


def solve_leaf_point(seed: CubicParam, target: complex, ref: complex, inv: HeldInvariant,
                     tol: float = 1e-12, max_iter: int = 40):
    """Damped Newton on {phi^- = target, inv = 0}; returns (p, residuals) or None."""
    p = seed
    f0 = _system(p, target, ref, inv)
    s_phi, s_inv = _scales(target, p)

    def norm(f):
        return max(abs(f[0]) / s_phi, abs(f[1]) / s_inv)

    r0 = norm(f0)
    for _ in range(max_iter):
        if not np.all(np.isfinite(f0)):
            return None
        if r0 < tol:
            break
        jac = _jacobian(p, target, ref, inv)
        try:
            if inv.kind is Constraint.NONE:
                step = np.linalg.lstsq(jac[:1], f0[:1], rcond=None)[0]
            else:
                step = np.linalg.solve(jac, f0)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while lam > 1e-4:
            q = CubicParam(p.c - lam * step[0], p.v - lam * step[1])
            try:
                f1 = _system(q, target, ref, inv)
            except RegionExitError:
                f1 = np.array([np.inf, np.inf])
            if np.all(np.isfinite(f1)) and norm(f1) < r0:
                break
            lam /= 2.0
        else:
            break
        p, f0, r0 = q, f1, norm(f1)
    if r0 > 1e3 * tol:
        return None
    return p, abs(f0[0]), abs(f0[1])


def trace_leaf(base: CubicParam, u_path: Sequence[WringU],
               constraint="per-plus-1") -> LeafTrace:
    """Follow w(base, u) along ``u_path``.

    Each point solves phi^-(p) = phi^-(base) |phi^-(base)|^(u - 1) together
    with the held invariant, seeded from the previous point scaled by the
    change in phi^-.  Failed steps are halved up to MAX_HALVINGS times.
    """
    inv = _resolve_constraint(base, constraint)
    phi_b = phi_minus(base).value
    trace = LeafTrace(base, inv.label, [], phi_b)
    prev_u, prev_p, prev_phi = wring_identity(), base, phi_b
    for u in u_path:
        goal = u
        halvings = 0
        while True:
            target = g_u(goal, phi_b)
            ratio = target / prev_phi
            seed = CubicParam(prev_p.c * ratio, prev_p.v * ratio)
            try:
                sol = solve_leaf_point(seed, target, target, inv)
                if sol is None:
                    sol = solve_leaf_point(prev_p, target, target, inv)
            except RegionExitError as exc:
                raise RegionExitError(str(exc), last_good=trace) from exc
            if sol is not None:
                prev_u, prev_p, prev_phi = goal, sol[0], target
                if goal == u:
                    trace.steps.append(LeafStep(u, sol[0], sol[1], sol[2], target))
                    break
                goal = u
                halvings = 0
                continue
            halvings += 1
            if halvings > MAX_HALVINGS:
                raise ContinuationError(f"Newton stagnated before u={complex(u)}",
                                        last_good=trace)
            goal = WringU((prev_u.s + goal.s) / 2.0, (prev_u.t + goal.t) / 2.0)
    return trace


def _resolve_constraint(base: CubicParam, constraint) -> HeldInvariant:
    if isinstance(constraint, HeldInvariant):
        return constraint
    if constraint in (None, "none", Constraint.NONE):
        return no_invariant()
    if constraint in ("multiplier", Constraint.MULTIPLIER):
        return multiplier_invariant(base)
    if isinstance(constraint, str) and constraint.startswith("per-plus-"):
        return per_plus_invariant(int(constraint.rsplit("-", 1)[1]))
    raise ValueError(f"unknown constraint {constraint!r}")


def s_path(s_end: float, steps: int = 20, s_start: float = 1.0) -> List[WringU]:
    """Real wringing path s_start -> s_end, excluding the start."""
    return [WringU(s) for s in np.linspace(s_start, s_end, steps + 1)[1:]]


def t_path(t_end: float, steps: int = 20, s: float = 1.0) -> List[WringU]:
    return [WringU(s, t) for t in np.linspace(0.0, t_end, steps + 1)[1:]]


@dataclass
class Transversal:
    """Graph x(y) of {phi^- = k} in the chart (x, y) = (1/c, v/c).

    ``ys`` and ``xs`` are 2-d arrays on a square y-grid; ``ok`` marks the
    points where Newton met the tolerance, the rest are gaps.
    """

    k: complex
    ys: np.ndarray
    xs: np.ndarray
    residual: np.ndarray
    ok: np.ndarray
    y_window: tuple
    tol: float = 1e-8

    @property
    def chart(self):
        return [(complex(y), complex(x)) for y, x in zip(self.ys[self.ok], self.xs[self.ok])]

    @property
    def success_rate(self) -> float:
        return float(self.ok.mean())

    @property
    def bidisk(self):
        xr = float(np.max(np.abs(self.xs[self.ok]))) if self.ok.any() else 0.0
        return {"y_window": list(self.y_window), "x_radius": xr}

    def params(self):
        c = 1.0 / self.xs
        return c, self.ys * c

    def lipschitz(self) -> float:
        """Largest |x(y) - x(y')| / |y - y'| over grid neighbours."""
        best = 0.0
        for axis in (0, 1):
            dx = np.abs(np.diff(self.xs, axis=axis))
            dy = np.abs(np.diff(self.ys, axis=axis))
            good = self.ok & np.roll(self.ok, -1, axis=axis)
            good = good.take(range(self.xs.shape[axis] - 1), axis=axis)
            if good.any():
                best = max(best, float(np.max(dx[good] / dy[good])))
        return best

    def write_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["re_y", "im_y", "re_x", "im_x"])
            for y, x in self.chart:
                w.writerow([repr(y.real), repr(y.imag), repr(x.real), repr(x.imag)])
        return path


def y_grid(window: float = 3.0, resolution: int = 64, center: complex = 0j) -> np.ndarray:
    """Cell-centred square grid of half-width ``window``."""
    h = 2.0 * window / resolution
    t = -window + h * (np.arange(resolution) + 0.5)
    return center + t[None, :] + 1j * t[:, None]


def solve_chart(k: complex, ys: np.ndarray, x_seed=None, tol: float = 1e-8,
                max_iter: int = 60):
    """Vectorized chart solve; returns (xs, residual, ok) shaped like ys."""
    k = complex(k)
    ys = np.asarray(ys, dtype=complex)
    if x_seed is None:
        x0 = np.full(ys.size, TWO_23 / k, dtype=complex)
    else:
        x0 = np.broadcast_to(np.asarray(x_seed, dtype=complex), ys.shape).ravel().copy()
    xs, res, ok = _kernels.chart_grid(k, ys.ravel(), x0, tol, max_iter)
    return xs.reshape(ys.shape), res.reshape(ys.shape), ok.reshape(ys.shape)


def transversal_disk(k: complex, ys=None, x_seed=None, window: float = 3.0,
                     resolution: int = 64, tol: float = 1e-8,
                     k_min: float = K_MIN) -> Transversal:
    """Solve the fiber {phi^- = k} as a graph over a y-grid."""
    k = complex(k)
    if abs(k) < k_min:
        raise DomainError(f"|k| = {abs(k):.4g} is below k_min = {k_min:.4g}")
    if ys is None:
        ys = y_grid(window, resolution)
    ys = np.atleast_2d(np.asarray(ys, dtype=complex))
    xs, res, ok = solve_chart(k, ys, x_seed, tol)
    win = float(np.max(np.abs(np.concatenate([ys.real.ravel(), ys.imag.ravel()]))))
    return Transversal(k, ys, np.where(ok, xs, np.nan + 0j), res, ok, (-win, win), tol)


def charts_min_distance(a: Transversal, b: Transversal) -> float:
    """Min distance in C^2 between the graph points of two charts."""
    pa = np.stack([a.ys[a.ok], a.xs[a.ok]], axis=1)
    pb = np.stack([b.ys[b.ok], b.xs[b.ok]], axis=1)
    best = math.inf
    for chunk in np.array_split(pa, max(1, len(pa) // 512)):
        d = np.sqrt(np.abs(chunk[:, None, 0] - pb[None, :, 0]) ** 2
                    + np.abs(chunk[:, None, 1] - pb[None, :, 1]) ** 2)
        best = min(best, float(d.min()))
    return best


def chart_param(x: complex, y: complex) -> CubicParam:
    return from_near_infinity(x, y)


def scaling_residual(trace: LeafTrace) -> float:
    """max over steps of |G^-(p_u) / G^-(base) - s|."""
    g0 = green_minus(trace.base).value
    return max((abs(green_minus(st.p).value / g0 - st.u.s) for st in trace.steps), default=0.0)
