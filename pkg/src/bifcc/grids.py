"""Rectangular grid fields over a complex slice of parameter space, the
discrete ddc (5-point Laplacian / 2pi), and PGM/CSV serialization.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np

from . import params

PLANES = ("c-plane", "v-plane", "transversal", "product-slice")


@dataclass
class GridField:
    """Samples ``values[j, i]`` at ``origin + i*dx + 1j*j*dy`` (row-major)."""

    origin: complex
    spacing: tuple
    dims: tuple
    values: np.ndarray
    axis_meaning: str = "c-plane"
    fixed: complex = 0j
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        nx, ny = self.dims
        if self.values.shape != (ny, nx):
            raise ValueError(f"values shape {self.values.shape} != dims {(ny, nx)}")
        if min(self.spacing) <= 0:
            raise ValueError("spacing must be positive")

    @property
    def region(self):
        nx, ny = self.dims
        dx, dy = self.spacing
        x0, y0 = self.origin.real, self.origin.imag
        return (x0, x0 + (nx - 1) * dx, y0, y0 + (ny - 1) * dy)

    def coords(self) -> np.ndarray:
        nx, ny = self.dims
        dx, dy = self.spacing
        xs = self.origin.real + dx * np.arange(nx)
        ys = self.origin.imag + dy * np.arange(ny)
        return xs[None, :] + 1j * ys[:, None]

    def index_of(self, z: complex):
        dx, dy = self.spacing
        i = int(round((z.real - self.origin.real) / dx))
        j = int(round((z.imag - self.origin.imag) / dy))
        return j, i

    def total(self) -> float:
        # fixed summation order: rows, then columns
        return float(math.fsum(np.ravel(self.values)))


def _fields():
    def gplus(c, v):
        return params.green_pm_array(c, v)[0]

    def gminus(c, v):
        return params.green_pm_array(c, v)[1]

    def maxg(c, v):
        gp, gm, _, _ = params.green_pm_array(c, v)
        return np.maximum(gp, gm)

    def lyap(c, v):
        gp, gm, _, _ = params.green_pm_array(c, v)
        return math.log(3.0) + gp + gm

    def locus(c, v):
        return params.classify_codes(c, v).astype(float)

    return {"Gplus": gplus, "Gminus": gminus, "maxG": maxg,
            "lyapunov": lyap, "locus-class": locus}


FIELDS = _fields()


def parameter_arrays(z: np.ndarray, plane: str, fixed: complex):
    if plane == "c-plane":
        return z, np.full_like(z, fixed)
    if plane == "v-plane":
        return np.full_like(z, fixed), z
    raise ValueError(f"plane must be c-plane or v-plane, not {plane!r}")


def sample_grid(region, resolution, field_fn: Union[str, Callable],
                plane: str = "c-plane", fixed: complex = 0j) -> GridField:
    """Evaluate a parameter-space field on a grid spanning ``region``.

    ``region`` is (re_min, re_max, im_min, im_max), endpoints included.
    ``field_fn`` is a name from FIELDS or a callable f(c, v) on arrays.
    """
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    nx, ny = resolution
    if nx < 8 or ny < 8:
        raise ValueError("resolution must be >= 8")
    x0, x1, y0, y1 = map(float, region)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("empty region")
    fn = FIELDS[field_fn] if isinstance(field_fn, str) else field_fn
    dx = (x1 - x0) / (nx - 1)
    dy = (y1 - y0) / (ny - 1)
    z = (x0 + dx * np.arange(nx))[None, :] + 1j * (y0 + dy * np.arange(ny))[:, None]
    c, v = parameter_arrays(z, plane, complex(fixed))
    values = np.asarray(fn(c, v), dtype=float)
    name = field_fn if isinstance(field_fn, str) else getattr(fn, "__name__", "custom")
    return GridField(complex(x0, y0), (dx, dy), (nx, ny), values, plane,
                     complex(fixed), {"field": name})


def laplacian_masses(u: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """Signed cell masses (1/2pi) * Laplacian * cell area, interior only."""
    out = np.zeros_like(u, dtype=float)
    lap = ((u[1:-1, 2:] + u[1:-1, :-2] - 2.0 * u[1:-1, 1:-1]) * (dy / dx)
           + (u[2:, 1:-1] + u[:-2, 1:-1] - 2.0 * u[1:-1, 1:-1]) * (dx / dy))
    out[1:-1, 1:-1] = lap / (2.0 * math.pi)
    return out


def laplacian_density(g: GridField) -> GridField:
    """Discrete ddc of a potential: per-cell masses, negatives clamped.

    Border cells carry no mass.  ``meta`` records the signed total and the
    clamped (negative) mass so nothing is hidden.
    """
    dx, dy = g.spacing
    signed = laplacian_masses(g.values, dx, dy)
    negative = signed < 0
    clamped = float(math.fsum(signed[negative]))
    masses = np.where(negative, 0.0, signed)
    meta = dict(g.meta)
    meta.update({"density_of": g.meta.get("field"),
                 "signed_total": float(math.fsum(signed.ravel())),
                 "clamped_mass": clamped})
    return GridField(g.origin, g.spacing, g.dims, masses, g.axis_meaning, g.fixed, meta)


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def write_pgm(g: GridField, path) -> Path:
    """16-bit big-endian binary graymap; min/max go to ``<path>.json``.

    The first image row is the largest imaginary part.
    """
    path = Path(path)
    vals = np.asarray(g.values, dtype=float)
    finite = np.isfinite(vals)
    lo = float(vals[finite].min()) if finite.any() else 0.0
    hi = float(vals[finite].max()) if finite.any() else 0.0
    span = hi - lo
    scaled = np.zeros_like(vals) if span == 0 else (np.where(finite, vals, lo) - lo) / span
    img = np.round(scaled * 65535.0).astype(">u2")[::-1]
    nx, ny = g.dims
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n65535\n".encode("ascii"))
        fh.write(img.tobytes())
    side = {"min": lo, "max": hi, "region": list(g.region), "resolution": [nx, ny],
            "axis_meaning": g.axis_meaning, "fixed": [g.fixed.real, g.fixed.imag],
            "row_order": "top-is-max-imag"}
    _sidecar(path).write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    return path


def read_pgm(path) -> GridField:
    path = Path(path)
    raw = path.read_bytes()
    parts = raw.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary graymap")
    nx, ny, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    data = np.frombuffer(parts[4][: 2 * nx * ny], dtype=">u2").reshape(ny, nx)[::-1]
    side = json.loads(_sidecar(path).read_text())
    lo, hi = side["min"], side["max"]
    values = lo + (hi - lo) * data.astype(float) / maxval
    x0, x1, y0, y1 = side["region"]
    dx = (x1 - x0) / (nx - 1)
    dy = (y1 - y0) / (ny - 1)
    return GridField(complex(x0, y0), (dx, dy), (nx, ny), values,
                     side.get("axis_meaning", "c-plane"), complex(*side.get("fixed", [0, 0])))


def write_csv(g: GridField, path) -> Path:
    path = Path(path)
    z = g.coords()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "value"])
        for zz, val in zip(z.ravel(), np.ravel(g.values)):
            w.writerow([repr(float(zz.real)), repr(float(zz.imag)), repr(float(val))])
    return path


def read_csv(path, axis_meaning: str = "c-plane") -> GridField:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    nx, ny = len(xs), len(ys)
    values = data[:, 2].reshape(ny, nx)
    dx = (xs[-1] - xs[0]) / (nx - 1)
    dy = (ys[-1] - ys[0]) / (ny - 1)
    return GridField(complex(xs[0], ys[0]), (dx, dy), (nx, ny), values, axis_meaning)
