"""Figure-eight decomposition of {G_f < G^-}, two-symbol itineraries of +c,
the (1/3, 2/3) Bernoulli measure and transverse measures on charts.

Symbols: 1 and 2 name the components U_1 (degree 1) and U_2 (degree 2,
containing +c); 0 marks an ambiguous symbol.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from . import _kernels
from .cubic import CubicParam, eval_poly
from .errors import DomainError, ResolutionError
from .grids import GridField
from .params import green_minus, green_plus
from .wringing import TWO_23, Transversal, solve_chart, transversal_disk

MARGIN = _kernels.MARGIN
AMBIGUOUS = 0
LOBE_STEPS = 64
ITIN_BUDGET = 1000
# chart |k| = 2^(2/3) CODING_C0 for the cylinder statistics
CODING_C0 = 1.2


# --- dynamical plane ---------------------------------------------------------

def coding_window(p: CubicParam) -> Tuple[float, float, float, float]:
    """A square containing {G_f < G^-}: both lobes sit within ~2|c| of 0."""
    r = 3.0 * abs(p.c) + 2.0 * abs(p.v) ** (1.0 / 3.0) + 1.0
    return (-r, r, -r, r)


def _green_window(p: CubicParam, window, resolution: int):
    x0, x1, y0, y1 = window
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    z = xs[None, :] + 1j * ys[:, None]
    flat = z.ravel()
    g, esc = _kernels.green_grid(np.full(flat.size, p.c), np.full(flat.size, p.v),
                                 flat, ITIN_BUDGET)
    g = np.where(esc, g, 0.0)
    return z, g.reshape(z.shape)


def _label_once(p: CubicParam, window, resolution: int, limit: float):
    z, g = _green_window(p, window, resolution)
    mask = g < limit
    labels, count = ndimage.label(mask)
    return z, labels, count


def figure_eight_labels(p: CubicParam, window=None, resolution: int = 512) -> GridField:
    """Flood-fill {G_f < (1 - margin) G^-} into U_1 (1), U_2 (2), outside (0).

    Refines once at double resolution if the component count is not two.
    """
    gp = green_plus(p).value
    gm_res = green_minus(p)
    gm = gm_res.value
    if not gm_res.escaped or gp >= gm * (1.0 - MARGIN):
        raise DomainError("coding region needs G^+ < (1 - margin) G^-")
    window = coding_window(p) if window is None else tuple(map(float, window))
    limit = gm * (1.0 - MARGIN)
    res = resolution
    for attempt in range(2):
        z, labels, count = _label_once(p, window, res, limit)
        if count == 2:
            break
        res *= 2
    else:
        raise ResolutionError(f"flood fill found {count} components, expected 2")
    j, i = _nearest(z, p.c)
    own = labels[j, i]
    if own == 0:
        raise ResolutionError("+c fell outside the labelled region")
    out = np.where(labels == own, 2, np.where(labels > 0, 1, 0)).astype(float)
    dx = (window[1] - window[0]) / (res - 1)
    dy = (window[3] - window[2]) / (res - 1)
    return GridField(complex(window[0], window[2]), (dx, dy), (res, res), out,
                     "product-slice", 0j,
                     {"field": "figure-eight", "c": [p.c.real, p.c.imag],
                      "v": [p.v.real, p.v.imag], "components": 2})


def _nearest(z: np.ndarray, w: complex):
    x0, y0 = z[0, 0].real, z[0, 0].imag
    dx = z[0, 1].real - x0
    dy = z[1, 0].imag - y0
    i = int(round((w.real - x0) / dx))
    j = int(round((w.imag - y0) / dy))
    ny, nx = z.shape
    return min(max(j, 0), ny - 1), min(max(i, 0), nx - 1)


def label_at(labels: GridField, z: complex) -> int:
    j, i = _nearest(labels.coords(), complex(z))
    return int(labels.values[j, i])


def lobe(p: CubicParam, z: complex, steps: int = LOBE_STEPS) -> int:
    """Lobe of z by continuing the degree-one inverse branch of f."""
    return int(_kernels.lobe_of(p.c, p.v, complex(z), steps))


def preimages(p: CubicParam, w: complex) -> np.ndarray:
    c, v = p.c, p.v
    return np.roots([1.0, 0.0, -3.0 * c * c, 2.0 * c ** 3 + v - w])


def preimage_split(p: CubicParam, w: complex, labels: Optional[GridField] = None):
    """Counts (in U_1, in U_2, unresolved) over the three preimages of w."""
    counts = [0, 0, 0]
    for z in preimages(p, w):
        s = label_at(labels, z) if labels is not None else lobe(p, z)
        counts[{1: 0, 2: 1}.get(s, 2)] += 1
    return tuple(counts)


# --- itineraries -----------------------------------------------------------------

@dataclass(frozen=True)
class Itinerary:
    symbols: Tuple[int, ...]
    depth: int
    defined_depth: int

    @property
    def word(self) -> Tuple[int, ...]:
        return self.symbols[: self.defined_depth]

    @property
    def ambiguous(self) -> bool:
        return AMBIGUOUS in self.word

    def __str__(self):
        return "".join("?" if s == AMBIGUOUS else str(s) for s in self.word)


def itinerary_of_critical(p: CubicParam, depth: int, method: str = "branch",
                          labels: Optional[GridField] = None) -> Itinerary:
    """Symbols of +c, f(c), ... while the orbit stays in the coding region.

    ``method="branch"`` decides each lobe by inverse-branch continuation;
    ``method="flood"`` reads a figure-eight label grid instead.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if depth == 0:
        return Itinerary((), 0, 0)
    out = np.empty(depth, dtype=np.int8)
    defined = int(_kernels.itinerary_point(p.c, p.v, depth, ITIN_BUDGET, LOBE_STEPS, out))
    syms = [int(s) for s in out[:defined]]
    if method == "flood":
        if labels is None:
            labels = figure_eight_labels(p)
        z = p.c
        for i in range(defined):
            if syms[i] != AMBIGUOUS:
                syms[i] = label_at(labels, z) or AMBIGUOUS
            z = eval_poly(p, z)
    elif method != "branch":
        raise ValueError(f"unknown method {method!r}")
    return Itinerary(tuple(syms), depth, defined)


def nu_cylinder_mass(word: Sequence[int]) -> Fraction:
    """(d_{a_0} ... d_{a_{n-1}}) / 3^n with d_1 = 1, d_2 = 2."""
    m = Fraction(1)
    for a in word:
        if a not in (1, 2):
            raise ValueError("words use the symbols 1 and 2")
        m *= Fraction(a, 3)
    return m


def words(depth: int, first: Optional[int] = None):
    for w in itertools.product((1, 2), repeat=depth):
        if first is None or w[0] == first:
            yield w


def nu_conditional(word: Sequence[int]) -> Fraction:
    """nu-mass of the cylinder given that the first symbol is 2."""
    if not word or word[0] != 2:
        return Fraction(0)
    return nu_cylinder_mass(word) / Fraction(2, 3)


def periodic_consistent(word: Sequence[int], max_period: Optional[int] = None) -> bool:
    """Prefix of a purely periodic word with period <= len/2."""
    n = len(word)
    q_max = n // 2 if max_period is None else max_period
    return any(all(word[i] == word[i % q] for i in range(n)) for q in range(1, q_max + 1))


def periodic_nu_bound(depth: int) -> Fraction:
    """Exact conditional nu-mass of the period-consistent depth cylinders."""
    return sum((nu_conditional(w) for w in words(depth, first=2) if periodic_consistent(w)),
               Fraction(0))


# --- transverse measures -------------------------------------------------------

def _chart_grid(t: Transversal, n: int, ghost: int = 1):
    lo, hi = t.y_window
    h = (hi - lo) / n
    idx = np.arange(-ghost, n + ghost) + 0.5
    axis = lo + h * idx
    return axis[None, :] + 1j * axis[:, None], h


def _signed_masses(g: np.ndarray, h: float) -> np.ndarray:
    """5-point Laplacian / 2pi times cell area on the interior of g."""
    return (g[2:, 1:-1] + g[:-2, 1:-1] + g[1:-1, 2:] + g[1:-1, :-2]
            - 4.0 * g[1:-1, 1:-1]) / (2.0 * math.pi)


def _green_plus_on(c: np.ndarray, v: np.ndarray, floor: float = 0.0) -> np.ndarray:
    gp, _, ep, _ = _kernels.green_pm_grid(c.ravel(), v.ravel(), ITIN_BUDGET)
    return np.maximum(np.where(ep, gp, 0.0), floor).reshape(c.shape)


def coding_level(t: Transversal, depth: int, theta: float = 0.5) -> float:
    """Level eps with 3^(depth-1) eps = theta (1 - margin) G^-.

    G^- = log|k| on the whole chart, so every point with G^+ near eps has
    a defined depth-``depth`` itinerary.
    """
    return theta * (1.0 - MARGIN) * math.log(abs(t.k)) / 3.0 ** (max(depth, 1) - 1)


def coding_chart(c0: float = CODING_C0, resolution: int = 64) -> Transversal:
    """The chart {phi^- = 2^(2/3) c0} used for cylinder statistics.

    Small |k| keeps the levels G^+ = eps_d well separated at moderate
    grid sizes, so deep words stay resolvable.
    """
    return transversal_disk(TWO_23 * c0, resolution=resolution, k_min=0.0)


@dataclass
class TransverseMeasure:
    chart: Transversal
    cell_masses: np.ndarray
    total: float
    signed_total: float
    clamped_mass: float
    missing_fraction: float
    resolution: int
    supersample: int

    def as_grid(self) -> GridField:
        lo, hi = self.chart.y_window
        n = self.resolution
        h = (hi - lo) / n
        return GridField(complex(lo + h / 2, lo + h / 2), (h, h), (n, n),
                         self.cell_masses, "transversal", 0j,
                         {"field": "Tplus-transverse", "k": [self.chart.k.real, self.chart.k.imag]})


def transverse_measure(t: Transversal, resolution: int = 128, supersample: int = 4) -> TransverseMeasure:
    """Discrete ddc of G^+ pulled back to the chart y -> (x(y), y).

    Signed Laplacian masses are computed on a grid ``supersample`` times
    finer and summed over each cell before negatives are clamped, which
    keeps the clamped total stable under refinement.
    """
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    s = int(supersample)
    ys, h = _chart_grid(t, resolution * s)
    xs, _, ok = solve_chart(t.k, ys, tol=t.tol)
    c = 1.0 / xs
    g = _green_plus_on(c, ys * c)
    fine = _signed_masses(g, h)
    # a fine mass is trustworthy only if its whole stencil solved
    good = ok[1:-1, 1:-1] & ok[2:, 1:-1] & ok[:-2, 1:-1] & ok[1:-1, 2:] & ok[1:-1, :-2]
    fine = np.where(good, fine, 0.0)
    n = resolution
    blocks = fine.reshape(n, s, n, s).sum(axis=(1, 3))
    cell_good = good.reshape(n, s, n, s).all(axis=(1, 3))
    blocks = np.where(cell_good, blocks, 0.0)
    negative = blocks < 0
    masses = np.where(negative, 0.0, blocks)
    return TransverseMeasure(
        chart=t, cell_masses=masses, total=math.fsum(masses.ravel()),
        signed_total=math.fsum(blocks.ravel()), clamped_mass=math.fsum(blocks[negative]),
        missing_fraction=float(1.0 - cell_good.mean()), resolution=n, supersample=s)


@dataclass
class ItinerarySample:
    """Leaves of the refined chart sampling: one word and signed mass each."""

    symbols: np.ndarray
    defined: np.ndarray
    masses: np.ndarray
    depth: int
    levels: int
    missing_mass: float = 0.0
    points: int = 0
    level: float = 0.0


def _words_at(c: np.ndarray, v: np.ndarray, depth: int):
    sym, defined = _kernels.itinerary_grid(c.ravel(), v.ravel(), depth, ITIN_BUDGET, LOBE_STEPS)
    return sym, defined


def _resolved(sym: np.ndarray, defined: np.ndarray, depth: int) -> np.ndarray:
    return (defined >= depth) & np.all(sym[:, :depth] != AMBIGUOUS, axis=1)


def sample_itineraries(t: Transversal, depth: int, resolution: int = 256,
                       supersample: int = 4, max_refine: int = 3, split: int = 4,
                       rel_threshold: float = 1e-7, level: Optional[float] = None) -> ItinerarySample:
    """Mass-weighted itineraries of +c over the chart with local refinement.

    Masses are the signed discrete ddc of max(G^+, level).  For each
    component W of {G^+ < level} this puts the T^+ mass of W on the level
    curve bounding it, where the depth-``depth`` itinerary is defined and
    constant; ``level`` defaults to :func:`coding_level`.  Pass 0 to use
    G^+ itself.

    A point whose word is undefined or ambiguous and whose |mass| exceeds
    ``rel_threshold`` of the total is replaced by a split x split block of
    sub-cells with masses recomputed at the finer spacing.
    """
    eps = coding_level(t, depth) if level is None else float(level)
    n = resolution * supersample
    ys, h = _chart_grid(t, n)
    xs, _, ok = solve_chart(t.k, ys, tol=t.tol)
    c = 1.0 / xs
    g = _green_plus_on(c, ys * c, eps)
    masses = _signed_masses(g, h).ravel()
    good = (ok[1:-1, 1:-1] & ok[2:, 1:-1] & ok[:-2, 1:-1] & ok[1:-1, 2:] & ok[1:-1, :-2]).ravel()
    missing = float(np.abs(masses[~good]).sum())
    masses = np.where(good, masses, 0.0)
    total = abs(masses.sum()) or 1.0
    active = np.abs(masses) > 1e-15 * total
    yc = ys[1:-1, 1:-1].ravel()[active]
    xc = xs[1:-1, 1:-1].ravel()[active]
    mc = masses[active]
    leaves_sym, leaves_def, leaves_m = [], [], []
    level = 0
    points = n * n
    while True:
        cc = 1.0 / xc
        sym, defined = _words_at(cc, yc * cc, depth)
        res = _resolved(sym, defined, depth)
        refine = (~res) & (np.abs(mc) > rel_threshold * total) & (level < max_refine)
        keep = ~refine
        leaves_sym.append(sym[keep])
        leaves_def.append(defined[keep])
        leaves_m.append(mc[keep])
        if not refine.any():
            break
        yc, xc, mc, miss = _refine(t, yc[refine], xc[refine], h, split, eps)
        missing += miss
        points += len(yc)
        h /= split
        level += 1
    return ItinerarySample(np.concatenate(leaves_sym), np.concatenate(leaves_def),
                           np.concatenate(leaves_m), depth, level, missing, points, eps)


def _refine(t: Transversal, y0: np.ndarray, x0: np.ndarray, h: float, r: int,
            eps: float = 0.0):
    """Sub-cells of each (y0, h) cell with their recomputed masses."""
    hs = h / r
    off = (np.arange(-1, r + 1) - (r - 1) / 2.0) * hs
    grid = off[None, :] + 1j * off[:, None]
    ys = y0[:, None, None] + grid[None]
    seeds = np.broadcast_to(x0[:, None, None], ys.shape)
    xs, _, ok = solve_chart(t.k, ys, x_seed=seeds, tol=t.tol)
    c = 1.0 / xs
    g = _green_plus_on(c, ys * c, eps)
    m = (g[:, 2:, 1:-1] + g[:, :-2, 1:-1] + g[:, 1:-1, 2:] + g[:, 1:-1, :-2]
         - 4.0 * g[:, 1:-1, 1:-1]) / (2.0 * math.pi)
    good = (ok[:, 1:-1, 1:-1] & ok[:, 2:, 1:-1] & ok[:, :-2, 1:-1]
            & ok[:, 1:-1, 2:] & ok[:, 1:-1, :-2])
    miss = float(np.abs(m[~good]).sum())
    m = np.where(good, m, 0.0)
    return ys[:, 1:-1, 1:-1].ravel(), xs[:, 1:-1, 1:-1].ravel(), m.ravel(), miss


@dataclass
class CylinderStats:
    k: complex
    depth: int
    resolution: int
    fractions: Dict[str, float]
    excluded_mass: float
    total: float
    word_masses: Dict[str, float] = field(default_factory=dict)
    refine_levels: int = 0

    def to_json(self) -> dict:
        return {"k": [self.k.real, self.k.imag], "depth": self.depth,
                "resolution": self.resolution, "fractions": self.fractions,
                "excluded_mass": self.excluded_mass, "total": self.total,
                "refine_levels": self.refine_levels}

    def write_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")
        return path


def _word_str(w) -> str:
    return "".join(str(int(s)) for s in w)


def word_masses(sample: ItinerarySample, depth: int):
    """Signed mass per resolved depth-prefix, and the unresolved mass."""
    if depth > sample.depth:
        raise ValueError("sample is shallower than the requested depth")
    res = _resolved(sample.symbols, sample.defined, depth)
    acc: Dict[str, float] = {}
    prefixes = sample.symbols[res, :depth]
    m = sample.masses[res]
    if depth == 0:
        return {"": float(m.sum())}, float(sample.masses[~res].sum())
    keys, inverse = np.unique(prefixes, axis=0, return_inverse=True)
    sums = np.zeros(len(keys))
    np.add.at(sums, inverse.ravel(), m)
    for key, val in zip(keys, sums):
        acc[_word_str(key)] = float(val)
    return acc, float(sample.masses[~res].sum())


def stats_from_sample(sample: ItinerarySample, depth: int, k: complex,
                      resolution: int) -> CylinderStats:
    """Per-word signed masses are clamped at zero, then normalized; fractions
    are conditioned on the first symbol 2."""
    acc, unresolved = word_masses(sample, depth)
    clamped = {w: max(m, 0.0) for w, m in acc.items()}
    kept = math.fsum(v for w, v in clamped.items() if w.startswith("2") or depth == 0)
    dropped = math.fsum(v for w, v in clamped.items() if depth > 0 and not w.startswith("2"))
    excluded = max(unresolved, 0.0) + dropped
    whole = kept + excluded
    fractions = {w: (v / kept if kept > 0 else 0.0) for w, v in sorted(clamped.items())
                 if depth == 0 or w.startswith("2")}
    return CylinderStats(complex(k), depth, resolution, fractions,
                         excluded / whole if whole > 0 else 0.0, whole,
                         {w: v for w, v in sorted(acc.items())}, sample.levels)


def cylinder_statistics(t: Transversal, depth: int, resolution: int = 256,
                        sample: Optional[ItinerarySample] = None, **kw) -> CylinderStats:
    """Empirical mu_Delta distribution of depth-prefixes of the itinerary of +c."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if sample is None:
        sample = sample_itineraries(t, max(depth, 1), resolution, **kw)
    return stats_from_sample(sample, depth, t.k, resolution)


def periodic_fraction(t: Transversal, depth: int, resolution: int = 256,
                      sample: Optional[ItinerarySample] = None, **kw) -> float:
    """mu_Delta-fraction of resolved mass whose depth-prefix is consistent
    with a period <= depth/2.  Zero on a chart carrying no mass."""
    stats = cylinder_statistics(t, depth, resolution, sample=sample, **kw)
    if stats.total <= 0 or not stats.fractions:
        return 0.0
    return math.fsum(v for w, v in stats.fractions.items()
                     if periodic_consistent([int(ch) for ch in w]))
