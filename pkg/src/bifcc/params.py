"""Parameter-space potentials: G^+, G^-, the Lyapunov exponent, the marking
involution, locus classification and the escape invariant phi^-.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .cubic import DEFAULT_BUDGET, CubicParam, GreenResult, eval_poly, green_dynamical
from .errors import BranchError, DegenerateError, DomainError

J_MAX = 6
# |c| of the reference point where phi^- is read off the principal product
REFERENCE_RADIUS = 1e3


class LocusClass(str, enum.Enum):
    C = "C"
    C_PLUS_ONLY = "C+only"
    C_MINUS_ONLY = "C-only"
    SHIFT = "Shift"
    UNDECIDED = "budget-exhausted"

    @property
    def code(self) -> int:
        return _LOCUS_CODES[self]


_LOCUS_CODES = {
    LocusClass.C: 0,
    LocusClass.C_PLUS_ONLY: 1,
    LocusClass.C_MINUS_ONLY: 2,
    LocusClass.SHIFT: 3,
    LocusClass.UNDECIDED: 4,
}


@dataclass(frozen=True)
class PhiMinusValue:
    """phi^- together with the branch bookkeeping used to obtain it.

    ``power_level`` j means (phi^-)^(3^j) was the unambiguous quantity and
    the 3^j-th root was continued from ``branch_basepoint``.
    """

    value: complex
    power_level: int
    branch_basepoint: CubicParam


def green_plus(p: CubicParam, budget: int = DEFAULT_BUDGET) -> GreenResult:
    return green_dynamical(p, p.c, budget)


def green_minus(p: CubicParam, budget: int = DEFAULT_BUDGET) -> GreenResult:
    return green_dynamical(p, -p.c, budget)


def lyapunov(p: CubicParam, budget: int = DEFAULT_BUDGET) -> float:
    """Lyapunov exponent of the maximal-entropy measure: log 3 + G^+ + G^-."""
    return math.log(3.0) + green_plus(p, budget).value + green_minus(p, budget).value


def marking_involution(p: CubicParam) -> CubicParam:
    """Swap the marking of the critical points: (c, v) -> (-c, v + 4c^3)."""
    return CubicParam(-p.c, p.v + 4.0 * p.c ** 3)


def _orbit_status(p: CubicParam, z: complex, budget: int) -> str:
    r = _kernels.escape_radius(p.c, p.v)
    tail = max(1, budget // 10)
    peak = 0.0
    for i in range(budget):
        if abs(z) > r:
            return "escaped"
        if i >= budget - tail:
            peak = max(peak, abs(z))
        z = eval_poly(p, z)
    if abs(z) > r:
        return "escaped"
    # still wandering near the escape radius at the end of the budget
    return "undecided" if peak > 0.5 * r else "bounded"


def classify_locus(p: CubicParam, budget: int = DEFAULT_BUDGET) -> LocusClass:
    plus = _orbit_status(p, p.c, budget)
    minus = _orbit_status(p, -p.c, budget)
    if "undecided" in (plus, minus):
        return LocusClass.UNDECIDED
    if plus == "bounded" and minus == "bounded":
        return LocusClass.C
    if plus == "bounded":
        return LocusClass.C_PLUS_ONLY
    if minus == "bounded":
        return LocusClass.C_MINUS_ONLY
    return LocusClass.SHIFT


def classify_codes(c: np.ndarray, v: np.ndarray, budget: int = 256) -> np.ndarray:
    """Vectorized locus codes (0 C, 1 C+only, 2 C-only, 3 Shift)."""
    _, _, ep, em = _kernels.green_pm_grid(np.ravel(c).astype(complex),
                                          np.ravel(v).astype(complex), budget)
    codes = np.where(~ep & ~em, 0, np.where(~ep, 1, np.where(~em, 2, 3)))
    return codes.reshape(np.shape(c))


def near_infinity_coords(p: CubicParam):
    """Chart (x, y) = (1/c, v/c) around the line at infinity."""
    if p.c == 0:
        raise DegenerateError("near-infinity chart undefined at c = 0")
    return 1.0 / p.c, p.v / p.c


def from_near_infinity(x: complex, y: complex) -> CubicParam:
    if x == 0:
        raise DegenerateError("x = 0 is the line at infinity")
    c = 1.0 / complex(x)
    return CubicParam(c, complex(y) * c)


def _phi_power(p: CubicParam, j: int):
    """(phi^-)^(3^j) as the Böttcher product at f^j(2c); None if not tame."""
    z = 2.0 * p.c
    for _ in range(j):
        z = eval_poly(p, z)
    val, ok = _kernels.bottcher_product(p.c, p.v, z)
    return complex(val) if ok else None


def _greens(p: CubicParam, budget: int):
    gp, _, _ = _kernels.green_point(p.c, p.v, p.c, budget)
    gm, _, em = _kernels.green_point(p.c, p.v, -p.c, budget)
    return gp, gm, em


def _usable_level(p: CubicParam, budget: int, j_start: int = 0):
    """Smallest j >= j_start with G^+ < 3^j G^- and a tame product."""
    gp, gm, em = _greens(p, budget)
    if not em or gm <= 0.0:
        return None, None
    for j in range(j_start, J_MAX + 1):
        if gp < 3.0 ** j * gm * (1.0 - 1e-9):
            val = _phi_power(p, j)
            if val is not None:
                return j, val
    return None, None


def phi_minus(p: CubicParam, budget: int = DEFAULT_BUDGET) -> PhiMinusValue:
    """phi^-(p) = phi_f(2c), continued as a 3^j-th root where G^+ >= G^-.

    Where the principal product at 2c is usable it is returned directly.
    Otherwise the root branch is followed along the ray (lc, lv), l from
    large to 1, starting where phi^- ~ 2^(2/3) c.
    """
    gp, gm, em = _greens(p, budget)
    if not em or gm <= 0.0:
        raise DomainError("-c does not escape; phi^- undefined")
    if not any(gp < 3.0 ** j * gm for j in range(J_MAX + 1)):
        raise DomainError("G^+ >= 3^j G^- for every supported power level")
    if gp < gm * (1.0 - 1e-9):
        val = _phi_power(p, 0)
        if val is not None:
            return PhiMinusValue(val, 0, p)
    if p.c == 0:
        raise DegenerateError("phi^- continuation needs c != 0")
    return _continue_phi_minus(p, budget)


def _continue_phi_minus(p: CubicParam, budget: int) -> PhiMinusValue:
    lam = max(1.0, REFERENCE_RADIUS / abs(p.c))
    ref = CubicParam(lam * p.c, lam * p.v)
    j, val = _usable_level(ref, budget)
    if j != 0:
        raise BranchError("no principal reference point on the ray through p")
    prev = val
    level = 0
    ratio = 0.9
    halvings = 0
    while lam > 1.0:
        nxt = max(1.0, lam * ratio)
        q = CubicParam(nxt * p.c, nxt * p.v)
        j, big = _usable_level(q, budget)
        if j is None:
            raise DomainError("phi^- undefined along the continuation ray")
        n = 3 ** j
        base = cmath.exp(cmath.log(big) / n)
        guess = prev * (nxt / lam)
        k = round(cmath.phase(guess / base) * n / (2.0 * math.pi))
        cand = base * cmath.exp(2j * math.pi * k / n)
        sep = abs(base) * abs(1.0 - cmath.exp(2j * math.pi / n)) if n > 1 else math.inf
        if abs(cand - guess) > 0.25 * sep:
            halvings += 1
            if halvings > 40:
                raise BranchError("root branch could not be followed")
            ratio = math.sqrt(ratio)
            continue
        prev, lam, level = cand, nxt, j
        ratio = max(0.9, ratio * ratio)
        halvings = 0
    return PhiMinusValue(prev, level, ref)


def phi_minus_near(p: CubicParam, ref: complex, budget: int = DEFAULT_BUDGET) -> PhiMinusValue:
    """phi^- on the branch closest to ``ref`` (a nearby known value).

    Cheap local continuation: only the 3^j-th root nearest ``ref`` is
    taken, so ``ref`` must lie within half a branch separation.
    """
    j, big = _usable_level(p, budget)
    if j is None:
        raise DomainError("phi^- undefined at this parameter")
    if j == 0:
        return PhiMinusValue(big, 0, p)
    n = 3 ** j
    base = cmath.exp(cmath.log(big) / n)
    k = round(cmath.phase(ref / base) * n / (2.0 * math.pi))
    return PhiMinusValue(base * cmath.exp(2j * math.pi * k / n), j, p)


def phi_minus_array(c: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Principal-branch phi^- on arrays; NaN where the product is not tame."""
    c = np.asarray(c, dtype=complex)
    v = np.asarray(v, dtype=complex)
    val, ok = _kernels.phi_minus_grid(c.ravel(), v.ravel())
    val = np.where(ok, val, np.nan + 0j)
    return val.reshape(c.shape)


def green_pm_array(c, v, budget: int = 512):
    c = np.asarray(c, dtype=complex)
    v = np.asarray(v, dtype=complex)
    gp, gm, ep, em = _kernels.green_pm_grid(c.ravel(), v.ravel(), budget)
    shape = c.shape
    return gp.reshape(shape), gm.reshape(shape), ep.reshape(shape), em.reshape(shape)
