"""Matplotlib renderings written next to the CSV/JSON outputs of a run."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .grids import GridField  # noqa: E402

PNG_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=120, metadata=PNG_META)
    plt.close(fig)
    return path


def render_field(g: GridField, path, title: Optional[str] = None, cmap: str = "magma") -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    x0, x1, y0, y1 = g.region
    im = ax.imshow(g.values, origin="lower", extent=(x0, x1, y0, y1), cmap=cmap,
                   interpolation="nearest", aspect="auto")
    fig.colorbar(im, ax=ax)
    axis = {"c-plane": "c", "v-plane": "v"}.get(g.axis_meaning, "z")
    ax.set_xlabel(f"Re {axis}")
    ax.set_ylabel(f"Im {axis}")
    ax.set_title(title or str(g.meta.get("field", "")))
    fig.tight_layout()
    return _save(fig, path)


def render_trace(trace, path) -> Path:
    rows = np.array(list(trace.rows()), dtype=float)
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 4))
    if len(rows):
        a1.plot(rows[:, 2], rows[:, 3], "o-", ms=3, label="c")
        a1.plot(rows[:, 4], rows[:, 5], "s-", ms=3, label="v")
        a2.semilogy(np.arange(1, len(rows) + 1), np.maximum(rows[:, 6], 1e-300), label="phi residual")
        a2.semilogy(np.arange(1, len(rows) + 1), np.maximum(rows[:, 7], 1e-300), label="invariant residual")
    a1.set_xlabel("Re")
    a1.set_ylabel("Im")
    a1.set_title(f"leaf through {trace.base.c:.3g}, {trace.base.v:.3g}")
    a1.legend()
    a2.set_xlabel("step")
    a2.legend()
    fig.tight_layout()
    return _save(fig, path)


def render_transversal(t, path, measure=None) -> Path:
    fig, axes = plt.subplots(1, 2 if measure is not None else 1, figsize=(10 if measure is not None else 5, 4.5))
    axes = np.atleast_1d(axes)
    lo, hi = t.y_window
    mag = np.where(t.ok, np.abs(t.xs), np.nan)
    im = axes[0].imshow(mag, origin="lower", extent=(lo, hi, lo, hi), cmap="viridis")
    fig.colorbar(im, ax=axes[0])
    axes[0].set_title(f"|x(y)| on phi^- = {abs(t.k):.4g}")
    axes[0].set_xlabel("Re y")
    axes[0].set_ylabel("Im y")
    if measure is not None:
        im2 = axes[1].imshow(np.sqrt(measure.cell_masses), origin="lower",
                             extent=(lo, hi, lo, hi), cmap="magma")
        fig.colorbar(im2, ax=axes[1])
        axes[1].set_title(f"sqrt transverse mass (total {measure.total:.4g})")
    fig.tight_layout()
    return _save(fig, path)


def render_cylinders(fractions: Dict[str, float], reference: Dict[str, float], path) -> Path:
    words = sorted(reference)
    x = np.arange(len(words))
    fig, ax = plt.subplots(figsize=(max(4, 0.6 * len(words) + 2), 3.5))
    ax.bar(x - 0.2, [fractions.get(w, 0.0) for w in words], 0.4, label="measured")
    ax.bar(x + 0.2, [reference[w] for w in words], 0.4, label="nu")
    ax.set_xticks(x)
    ax.set_xticklabels(words, rotation=90 if len(words) > 8 else 0)
    ax.set_ylabel("conditional mass")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def render_points(cands: Sequence, path) -> Path:
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 4))
    for mc in cands:
        style = "o" if mc.is_misiurewicz else "x"
        color = "tab:red" if mc.is_misiurewicz else "tab:gray"
        a1.plot(mc.p.c.real, mc.p.c.imag, style, color=color)
        a2.plot(mc.p.v.real, mc.p.v.imag, style, color=color)
    a1.set_title("c (o: strict both sides)")
    a2.set_title("v")
    for a in (a1, a2):
        a.set_aspect("equal", adjustable="datalim")
        a.set_xlabel("Re")
        a.set_ylabel("Im")
    fig.tight_layout()
    return _save(fig, path)


def render_equidist(ns: Sequence[int], values: Sequence[float], target: float, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    err = np.abs(np.asarray(values) - target)
    ax.semilogy(ns, np.maximum(err, 1e-300), "o-", label="|3^-n log|Per| - G|")
    ax.semilogy(ns, 3.0 ** -np.asarray(ns, dtype=float), "--", label="3^-n")
    ax.set_xlabel("n")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)
