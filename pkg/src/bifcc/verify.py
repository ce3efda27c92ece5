"""Acceptance checks, one function per criterion, grouped into CLI suites.

Each check returns a :class:`Check` with a pass flag, the measured numbers
and the wall time.  Numba kernels are compiled before the clock starts.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List

import numpy as np

from .bifmeasure import (intersection_total, misiurewicz_solve, mu_bif_grid_estimate,
                         window_around)
from .cubic import CubicParam, eval_poly
from .itinerary import (coding_chart, cylinder_statistics, nu_conditional, periodic_fraction,
                        periodic_nu_bound, sample_itineraries)
from .params import green_minus, green_plus, marking_involution, phi_minus
from .percurves import PerSpec, equidist_potential, total_degree_check, v_roots_on_line
from .wringing import (TWO_23, WringU, charts_min_distance, s_path, scaling_residual, t_path,
                       trace_leaf, transversal_disk, wring_compose, wring_identity)

EPS = np.finfo(float).eps

# settings of the itinerary sampling used by the cylinder checks
CYLINDER_RESOLUTION = 256
CYLINDER_REFINE = 5
MA_RADIUS = 0.13


@dataclass
class Check:
    name: str
    passed: bool
    details: Dict = field(default_factory=dict)
    seconds: float = 0.0
    budget: float = math.inf

    @property
    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name} ({self.seconds:.1f}s)"

    def to_json(self) -> dict:
        out = asdict(self)
        out["budget"] = None if math.isinf(self.budget) else self.budget
        return out


def _timed(name: str, budget: float = math.inf):
    def wrap(fn: Callable[[], tuple]):
        def run() -> Check:
            t0 = time.perf_counter()
            ok, details = fn()
            dt = time.perf_counter() - t0
            within = dt <= budget
            if not within:
                details["over_budget"] = True
            return Check(name, bool(ok and within), details, dt, budget)
        run.__name__ = fn.__name__
        run.check_name = name
        return run
    return wrap


def warm_up() -> None:
    """Trigger compilation (or cache loading) of every kernel used below."""
    p = CubicParam(10.0, 10.0)
    green_plus(p)
    green_minus(p)
    phi_minus(p)
    t = transversal_disk(TWO_23 * 1000.0, resolution=8)
    sample_itineraries(coding_chart(resolution=8), 1, 8, max_refine=1)
    mu_bif_grid_estimate((0, 1, 0, 1), (0, 1, 0, 1), 16, smoothing=0)
    del t


def _random_params(rng, n: int, c_radius: float, v_radius: float):
    c = c_radius * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))
    v = v_radius * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))
    return [CubicParam(a, b) for a, b in zip(c, v)]


def _ulps(a: complex, b: complex, scale: float) -> float:
    return abs(a - b) / (EPS * max(scale, np.finfo(float).tiny))


@_timed("1 algebraic identities", budget=1.0)
def check_identities():
    rng = np.random.default_rng(1)
    worst = 0.0
    worst_green = 0.0
    for p in _random_params(rng, 1000, 2.0, 4.0):
        c, v = p.c, p.v
        scale = abs(v) + 4.0 * abs(c) ** 3 + abs(c) ** 3
        fc, fmc = eval_poly(p, c), eval_poly(p, -c)
        worst = max(worst,
                    _ulps(fc, v, scale),
                    _ulps(fmc, v + 4.0 * c ** 3, scale),
                    _ulps(eval_poly(p, 2.0 * c), fmc, scale),
                    _ulps(eval_poly(p, -2.0 * c), fc, scale))
        q = marking_involution(marking_involution(p))
        worst = max(worst, _ulps(q.c, c, abs(c)), _ulps(q.v, v, scale))
        ip = marking_involution(p)
        gp, gm = green_plus(p).value, green_minus(p).value
        worst_green = max(worst_green,
                          _ulps(green_plus(ip).value, gm, max(gm, 1.0)),
                          _ulps(green_minus(ip).value, gp, max(gp, 1.0)))
    return worst <= 8 and worst_green <= 8, {"worst_ulps": worst, "worst_green_ulps": worst_green}


@_timed("2 degrees", budget=30.0)
def check_degrees():
    got = {}
    ok = True
    for n in range(1, 5):
        dp = total_degree_check(PerSpec("plus", n, 0))
        dm = total_degree_check(PerSpec("minus", n, 0))
        got[f"Per+({n})"] = dp
        got[f"Per-({n})"] = dm
        ok &= dp == 3 ** (n - 1) and dm == 3 ** n
    rng = np.random.default_rng(2)
    bad = 0
    for n in range(1, 5):
        s = PerSpec("plus", n, 0)
        for c0 in 2.0 * (rng.random(50) - 0.5) + 2j * (rng.random(50) - 0.5):
            if len(v_roots_on_line(s, complex(c0))) != 3 ** (n - 1):
                bad += 1
    return ok and bad == 0, {"degrees": got, "bad_root_counts": bad}


@_timed("3 Boettcher asymptotic", budget=10.0)
def check_boettcher():
    worst = {}
    ok = True
    for radius, tol in ((1e2, 0.05), (1e4, 0.005)):
        errs = []
        for j in range(16):
            c = radius * complex(math.cos(2 * math.pi * j / 16), math.sin(2 * math.pi * j / 16))
            val = phi_minus(CubicParam(c, 0.0)).value
            errs.append(abs(val / (TWO_23 * c) - 1.0))
        worst[str(radius)] = max(errs)
        ok &= max(errs) < tol
    return ok, {"worst_relative_error": worst}


@_timed("4 Kiwi bounds")
def check_kiwi():
    rng = np.random.default_rng(4)
    worst_minus = 0.0
    worst_plus = -math.inf
    for i in range(200):
        r = (1e2, 1e3, 1e4)[i % 3]
        c = r * np.exp(2j * np.pi * rng.random())
        v = 3.0 * r * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        p = CubicParam(c, v)
        worst_minus = max(worst_minus, abs(green_minus(p).value - math.log(r)))
        worst_plus = max(worst_plus, green_plus(p).value - math.log(r) / 3.0)
    return worst_minus <= 1.5 and worst_plus <= 1.5, {
        "max |G- - log|c||": worst_minus, "max G+ - log|c|/3": worst_plus}


def escape_locus_points(count: int = 20, seed: int = 5):
    """Random parameters with both critical orbits escaping."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        p = _random_params(rng, 1, 3.0, 6.0)[0]
        if min(green_plus(p).value, green_minus(p).value) > 0.05:
            out.append(p)
    return out


@_timed("5 equidistribution potential")
def check_equidist():
    fitted = 0.0
    for p in escape_locus_points():
        for sign, g in (("plus", green_plus(p).value), ("minus", green_minus(p).value)):
            for n in range(4, 11):
                for k in (0, n - 1):
                    err = abs(equidist_potential(PerSpec(sign, n, k), p) - g)
                    fitted = max(fitted, err * 3.0 ** n)
    return fitted < 10.0, {"A": fitted}


@_timed("6 wringing", budget=20.0)
def check_wringing():
    rng = np.random.default_rng(6)
    # dyadic values keep every group operation exact
    us = [WringU(float(rng.integers(1, 64)) / 16.0, float(rng.integers(-64, 64)) / 16.0)
          for _ in range(30)]
    e = wring_identity()
    group = all(wring_compose(a, wring_compose(b, c)) == wring_compose(wring_compose(a, b), c)
                for a, b, c in zip(us, us[1:], us[2:]))
    group &= all(wring_compose(a, e) == a and wring_compose(e, a) == a for a in us)
    base = CubicParam(10.0, 10.0)
    trace = trace_leaf(base, s_path(2.0, 20), "per-plus-1")
    g0 = green_minus(base).value
    step_res = [abs(green_minus(st.p).value / g0 - st.u.s) for st in trace.steps]
    phi0 = abs(phi_minus(base).value)
    arc = trace_leaf(base, t_path(1.0, 20), "per-plus-1")
    arc_err = max(abs(abs(phi_minus(st.p).value) - phi0) / phi0 for st in arc.steps)
    ok = group and max(step_res) < 1e-6 and arc_err < 1e-8 and len(trace.steps) == 20
    return ok, {"group_axioms": group, "max_scaling_residual": max(step_res),
                "scaling_residual": scaling_residual(trace), "rotation_rel_err": arc_err}


@_timed("7 transversal graphs")
def check_transversal():
    k = TWO_23 * 1e3
    a = transversal_disk(k)
    b = transversal_disk(1.5 * k)
    lip = a.lipschitz()
    gap = charts_min_distance(a, b)
    ok = a.success_rate >= 0.99 and math.isfinite(lip) and gap > 1e-6
    return ok, {"success_rate": a.success_rate, "lipschitz": lip, "min_distance": gap}


def _rel_errors(fractions: Dict[str, float], depth: int):
    out = {}
    for w in ("".join(x) for x in itertools.product("12", repeat=depth - 1)):
        word = "2" + w
        target = float(nu_conditional([int(ch) for ch in word]))
        out[word] = abs(fractions.get(word, 0.0) - target) / target
    return out


@_timed("8 cylinder statistics", budget=600.0)
def check_cylinders():
    chart = coding_chart()
    sample = sample_itineraries(chart, 3, CYLINDER_RESOLUTION, max_refine=CYLINDER_REFINE)
    s2 = cylinder_statistics(chart, 2, CYLINDER_RESOLUTION, sample=sample)
    s3 = cylinder_statistics(chart, 3, CYLINDER_RESOLUTION, sample=sample)
    e2 = _rel_errors(s2.fractions, 2)
    e3 = _rel_errors(s3.fractions, 3)
    excl = max(s2.excluded_mass, s3.excluded_mass)
    ok = max(e2.values()) < 0.05 and max(e3.values()) < 0.07 and excl < 0.10
    return ok, {"depth2": s2.fractions, "depth3": s3.fractions, "rel_err2": e2, "rel_err3": e3,
                "excluded": excl, "k": [chart.k.real, chart.k.imag]}


@_timed("9 point-component proxy")
def check_point_components():
    chart = coding_chart()
    values = {}
    bounds = {}
    for d in (2, 4, 6):
        sample = sample_itineraries(chart, d, CYLINDER_RESOLUTION, max_refine=CYLINDER_REFINE)
        values[d] = periodic_fraction(chart, d, CYLINDER_RESOLUTION, sample=sample)
        bounds[d] = float(periodic_nu_bound(d))
    decreasing = values[2] > values[4] > values[6]
    below = all(values[d] <= bounds[d] + 0.05 for d in values)
    return decreasing and below, {"periodic_fraction": values, "nu_bound": bounds}


@_timed("10 Misiurewicz", budget=60.0)
def check_misiurewicz():
    rep = misiurewicz_solve(2, 1, 2, 1, (-2.0, 2.0, -2.0, 2.0))
    target = next((m for m in rep.candidates if abs(m.p.c - 1) < 1e-6 and abs(m.p.v + 2) < 1e-6), None)
    impostor = next((m for m in rep.candidates
                     if abs(m.p.c - 0.5) < 1e-6 and abs(m.p.v + 1) < 1e-6), None)
    ok = target is not None and impostor is not None
    det = {}
    if target is not None:
        ok &= max(target.residuals) < 1e-9 and target.strict == (True, True)
        ok &= abs(target.plus_multiplier - 9) < 1e-6 and abs(target.minus_multiplier - 9) < 1e-6
        det["target"] = target.to_json()
    if impostor is not None:
        ok &= not impostor.is_misiurewicz and impostor not in rep.misiurewicz
        det["impostor"] = impostor.to_json()
    pair = intersection_total((1, 0), (1, 0))
    ok &= abs(pair.total - 1.0 / 3.0) < 1e-12 and pair.count == 3
    det["pair_total"] = pair.total
    det["found"] = len(rep.candidates)
    return ok, det


def _ma_windows():
    return {"escape": (10.0, 10.0, 0.5), "interior": (0.0, 0.0, 0.1), "misiurewicz": (1.0, -2.0, 0.5)}


@_timed("11 Monge-Ampere sanity", budget=900.0)
def check_monge_ampere():
    totals = {}
    for name, (c, v, r) in _ma_windows().items():
        for n in (16, 32):
            m = mu_bif_grid_estimate(window_around(c, r), window_around(v, r), n, radius=MA_RADIUS)
            totals[f"{name}@{n}"] = m.total
    ref = totals["misiurewicz@32"]
    floor = 1e-3 * ref
    zero = all(totals[f"{w}@{n}"] < floor for w in ("escape", "interior") for n in (16, 32))
    lo, hi = sorted((totals["misiurewicz@16"], ref))
    stable = lo > 0 and (hi - lo) / hi <= 0.30
    return zero and stable, {"totals": totals, "noise_floor": floor,
                             "relative_change": (hi - lo) / hi if hi > 0 else None}


@_timed("mass: (1,0)x(1,0) intersection total")
def check_pair_total():
    pair = intersection_total((1, 0), (1, 0))
    return abs(pair.total - 1.0 / 3.0) < 1e-12, {
        "total": pair.total, "exact": str(pair.weight * pair.count), "points": pair.count}


CRITERIA: List[Callable[[], Check]] = [
    check_identities, check_degrees, check_boettcher, check_kiwi, check_equidist,
    check_wringing, check_transversal, check_cylinders, check_point_components,
    check_misiurewicz, check_monge_ampere]

SUITES: Dict[str, List[Callable[[], Check]]] = {
    "identities": [check_identities],
    "degrees": [check_degrees, check_equidist],
    "kiwi": [check_boettcher, check_kiwi],
    "wring": [check_wringing, check_transversal],
    "cylinders": [check_cylinders, check_point_components],
    "misiurewicz": [check_misiurewicz],
    "mass": [check_pair_total, check_monge_ampere],
}


def run_suite(name: str) -> List[Check]:
    if name not in SUITES:
        raise KeyError(name)
    warm_up()
    return [fn() for fn in SUITES[name]]


def degree_report() -> Dict[str, int]:
    return {**{f"Per+({n})": total_degree_check(PerSpec("plus", n, 0)) for n in range(1, 5)},
            **{f"Per-({n})": total_degree_check(PerSpec("minus", n, 0)) for n in range(1, 5)}}


__all__ = ["Check", "CRITERIA", "SUITES", "run_suite", "warm_up"]
