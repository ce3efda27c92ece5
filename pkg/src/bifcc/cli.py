"""bifcc command line.

Exit codes: 0 success, 1 failed check, 2 usage error, 3 numeric failure.
Complex numbers are written "re,im", regions "reMin,reMax,imMin,imMax",
parameters "c,v" (real) or "re_c,im_c,re_v,im_v".
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__
from .errors import BifccError

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

SLICE_FIELDS = ("Gplus", "Gminus", "maxG", "lyapunov", "Tplus-density", "Tminus-density",
                "locus-class")


class UsageError(Exception):
    pass


# --- argument types ----------------------------------------------------------------

def _floats(text: str, count: Optional[int] = None) -> List[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if count is not None and len(vals) != count:
        raise argparse.ArgumentTypeError(f"expected {count} numbers, got {text!r}")
    if not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"non-finite number in {text!r}")
    return vals


def complex_arg(text: str) -> complex:
    vals = _floats(text)
    if len(vals) == 1:
        return complex(vals[0], 0.0)
    if len(vals) == 2:
        return complex(vals[0], vals[1])
    raise argparse.ArgumentTypeError(f"complex numbers are 're,im', got {text!r}")


def param_arg(text: str):
    from .cubic import CubicParam
    vals = _floats(text)
    if len(vals) == 2:
        return CubicParam(vals[0], vals[1])
    if len(vals) == 4:
        return CubicParam(complex(vals[0], vals[1]), complex(vals[2], vals[3]))
    raise argparse.ArgumentTypeError(f"parameters are 'c,v' or 're_c,im_c,re_v,im_v', got {text!r}")


def region_arg(text: str):
    x0, x1, y0, y1 = _floats(text, 4)
    if not (x1 > x0 and y1 > y0):
        raise argparse.ArgumentTypeError(f"region needs reMin < reMax and imMin < imMax: {text!r}")
    return (x0, x1, y0, y1)


def spec_arg(text: str):
    try:
        vals = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"spec is 'n,k,m,l', got {text!r}")
    if len(vals) != 4:
        raise argparse.ArgumentTypeError(f"spec is 'n,k,m,l', got {text!r}")
    return vals


# --- run plumbing -------------------------------------------------------------------

class Run:
    """Collects outputs of one command and writes its manifest."""

    def __init__(self, args, argv: List[str]):
        from .manifest import RunManifest, command_line
        self.out = Path(args.out)
        self.name = args.command
        self.plot = not args.no_plot
        self.written: List[Path] = []
        self.manifest = RunManifest(command_line(argv), tolerances=tolerances())
        self.t0 = time.perf_counter()

    def path(self, suffix: str) -> Path:
        return self.out / f"{self.name}{suffix}"

    def wrote(self, path) -> Path:
        path = Path(path)
        self.written.append(path)
        return path

    def json(self, suffix: str, data) -> Path:
        p = self.path(suffix)
        p.write_text(json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return self.wrote(p)

    def figure(self, fn: Callable, *args) -> None:
        if self.plot:
            self.wrote(fn(*args))

    def finish(self, status: str = "ok") -> Path:
        if status in ("usage-error", "numeric-failure"):
            for p in self.written:
                p.unlink(missing_ok=True)
            self.written = []
        for p in self.written:
            self.manifest.add_output(p)
        self.manifest.status = status
        self.manifest.wall_time = time.perf_counter() - self.t0
        return self.manifest.write(self.out / f"{self.name}.manifest.json")


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def tolerances() -> Dict[str, float]:
    from . import _kernels, bifmeasure, cubic, percurves, wringing
    return {"green_tol": cubic.GREEN_TOL, "green_budget": cubic.DEFAULT_BUDGET,
            "coding_margin": _kernels.MARGIN, "root_tol": percurves.ROOT_TOL,
            "cluster_tol": percurves.CLUSTER_TOL, "chart_tol": 1e-8,
            "fd_step": wringing.FD_STEP, "misiurewicz_residual": bifmeasure.RESIDUAL_TOL,
            "dedup_tol": bifmeasure.DEDUP_TOL, "condition_limit": bifmeasure.COND_LIMIT}


# --- commands ------------------------------------------------------------------------

def plan_slice(args):
    return ["slice.pgm", "slice.pgm.json", "slice.csv"] + (["slice.png"] if not args.no_plot else [])


def cmd_slice(args, run: Run) -> int:
    from .grids import laplacian_density, sample_grid, write_csv, write_pgm
    from .report import render_field
    if args.resolution < 8:
        raise UsageError("resolution must be >= 8")
    base = {"Tplus-density": "Gplus", "Tminus-density": "Gminus"}.get(args.field, args.field)
    g = sample_grid(args.region, args.resolution, base, args.plane, args.fixed)
    if base != args.field:
        g = laplacian_density(g)
        g.meta["field"] = args.field
    if not np.all(np.isfinite(g.values)):
        raise BifccError("non-finite values in the sampled field")
    run.wrote(write_pgm(g, run.path(".pgm")))
    run.wrote(Path(str(run.path(".pgm")) + ".json"))
    run.wrote(write_csv(g, run.path(".csv")))
    run.figure(render_field, g, run.path(".png"), args.field)
    summary = {"field": args.field, "total": g.total(), "min": float(g.values.min()),
               "max": float(g.values.max()), "resolution": args.resolution}
    summary.update({k: v for k, v in g.meta.items() if k in ("signed_total", "clamped_mass")})
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def plan_verify(args):
    return [f"verify-{args.suite}.json"]


def cmd_verify(args, run: Run) -> int:
    from .verify import run_suite
    checks = run_suite(args.suite)
    p = run.out / f"verify-{args.suite}.json"
    report = {"suite": args.suite, "passed": all(c.passed for c in checks),
              "checks": [c.to_json() for c in checks]}
    p.write_text(json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n")
    run.wrote(p)
    for c in checks:
        print(c.line)
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def plan_trace(args):
    return ["trace.csv"] + (["trace.png"] if not args.no_plot else [])


def cmd_trace(args, run: Run) -> int:
    from .report import render_trace
    from .wringing import WringU, trace_leaf
    if args.steps < 1:
        raise UsageError("steps must be >= 1")
    if args.s_end <= 0:
        raise UsageError("s-end must be positive")
    path = [WringU(1.0 + (args.s_end - 1.0) * i / args.steps, args.t_end * i / args.steps)
            for i in range(1, args.steps + 1)]
    trace = trace_leaf(args.from_, path, args.constraint)
    run.wrote(trace.write_csv(run.path(".csv")))
    run.figure(render_trace, trace, run.path(".png"))
    worst = max((max(st.residual_phi, st.residual_inv) for st in trace.steps), default=0.0)
    print(json.dumps({"rows": len(trace.steps), "max_residual": worst}))
    return EXIT_OK


def plan_transversal(args):
    out = ["transversal.csv", "transversal.json"]
    if not args.no_plot:
        out.append("transversal.png")
        if args.depth:
            out.append("transversal-cylinders.png")
    return out


def cmd_transversal(args, run: Run) -> int:
    from .itinerary import (cylinder_statistics, nu_conditional, periodic_fraction,
                            sample_itineraries, transverse_measure)
    from .report import render_cylinders, render_transversal
    from .wringing import TWO_23, transversal_disk
    k = args.k if args.k is not None else TWO_23 * args.c0
    if args.resolution < 8:
        raise UsageError("resolution must be >= 8")
    kw = {} if args.k_min is None else {"k_min": args.k_min}
    t = transversal_disk(k, window=args.window, resolution=args.resolution, **kw)
    run.wrote(t.write_csv(run.path(".csv")))
    m = transverse_measure(t, args.measure_resolution)
    info = {"k": k, "success_rate": t.success_rate, "lipschitz": t.lipschitz(),
            "bidisk": t.bidisk, "measure": {"total": m.total, "signed_total": m.signed_total,
                                            "clamped_mass": m.clamped_mass,
                                            "missing_fraction": m.missing_fraction,
                                            "resolution": m.resolution}}
    fig_args = [t, run.path(".png"), m]
    if args.depth:
        sample = sample_itineraries(t, args.depth, args.stats_resolution, max_refine=args.max_refine)
        stats = cylinder_statistics(t, args.depth, args.stats_resolution, sample=sample)
        info["cylinders"] = stats.to_json()
        info["periodic_fraction"] = periodic_fraction(t, args.depth, args.stats_resolution, sample=sample)
        ref = {w: float(nu_conditional([int(ch) for ch in w]))
               for w in ("2" + "".join(s) for s in _words(args.depth - 1))}
        run.figure(render_cylinders, stats.fractions, ref, run.path("-cylinders.png"))
    run.json(".json", info)
    run.figure(render_transversal, *fig_args)
    print(json.dumps({"success_rate": t.success_rate, "measure_total": m.total}))
    return EXIT_OK


def _words(n: int):
    import itertools
    return itertools.product("12", repeat=n)


def plan_misiurewicz(args):
    return ["misiurewicz.json", "misiurewicz.csv"] + (["misiurewicz.png"] if not args.no_plot else [])


def cmd_misiurewicz(args, run: Run) -> int:
    from .bifmeasure import misiurewicz_solve, write_candidates_csv
    from .report import render_points
    n, k, m, l = args.spec
    if not (0 <= k < n and 0 <= l < m):
        raise UsageError("spec needs 0 <= k < n and 0 <= l < m")
    region = args.region if args.v_region is None else (args.region, args.v_region)
    rep = misiurewicz_solve(n, k, m, l, region, args.seed_resolution, args.method)
    run.json(".json", {"spec": list(args.spec), "region": region, **rep.to_json(),
                       "misiurewicz_count": len(rep.misiurewicz)})
    run.wrote(write_candidates_csv(rep.candidates, run.path(".csv")))
    run.figure(render_points, rep.candidates, run.path(".png"))
    print(json.dumps({"found": len(rep.candidates), "misiurewicz": len(rep.misiurewicz),
                      "dropped_singular": rep.dropped_singular}))
    return EXIT_OK


def plan_equidist(args):
    return ["equidist.json"] + (["equidist.png"] if not args.no_plot else [])


def cmd_equidist(args, run: Run) -> int:
    from .params import green_minus, green_plus
    from .percurves import PerSpec, equidist_potential
    from .report import render_equidist
    if args.n < 1 or not 0 <= args.k < args.n:
        raise UsageError("need n >= 1 and 0 <= k < n")
    p = args.at
    g = (green_plus(p) if args.sign == "plus" else green_minus(p)).value
    ns = list(range(max(1, args.k + 1), args.n + 1))
    seq = [equidist_potential(PerSpec(args.sign, j, args.k), p) for j in ns]
    value = seq[-1]
    run.json(".json", {"sign": args.sign, "n": args.n, "k": args.k, "at": [p.c, p.v],
                       "value": value, "green": g, "sequence": dict(zip(map(str, ns), seq))})
    run.figure(render_equidist, ns, seq, g, run.path(".png"))
    print(json.dumps({"value": value, "green": g}))
    return EXIT_OK


COMMANDS = {
    "slice": (cmd_slice, plan_slice),
    "verify": (cmd_verify, plan_verify),
    "trace": (cmd_trace, plan_trace),
    "transversal": (cmd_transversal, plan_transversal),
    "misiurewicz": (cmd_misiurewicz, plan_misiurewicz),
    "equidist": (cmd_equidist, plan_equidist),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bifcc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"bifcc {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--dry-run", action="store_true", help="print the plan and exit")
    common.add_argument("--no-plot", action="store_true", help="skip PNG figures")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("slice", parents=[common], help="render a field on a parameter slice")
    s.add_argument("--plane", choices=("c-plane", "v-plane"), default="c-plane")
    s.add_argument("--fixed", type=complex_arg, default=0j, help="the other coordinate, re,im")
    s.add_argument("--region", type=region_arg, default=(-2.0, 2.0, -2.0, 2.0))
    s.add_argument("--resolution", type=int, default=256)
    s.add_argument("--field", choices=SLICE_FIELDS, default="locus-class")

    s = sub.add_parser("verify", parents=[common], help="run an acceptance suite")
    s.add_argument("suite", choices=("identities", "degrees", "kiwi", "wring", "cylinders",
                                     "misiurewicz", "mass"))

    s = sub.add_parser("trace", parents=[common], help="follow a wringing leaf")
    s.add_argument("--from", dest="from_", type=param_arg, required=True, help="c,v")
    s.add_argument("--constraint", default="per-plus-1",
                   help="per-plus-N, multiplier or none (default per-plus-1)")
    s.add_argument("--s-end", type=float, default=1.0)
    s.add_argument("--t-end", type=float, default=0.0)
    s.add_argument("--steps", type=int, default=20)

    s = sub.add_parser("transversal", parents=[common], help="solve a transversal chart")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--k", type=complex_arg, help="chart level phi^- = k")
    g.add_argument("--c0", type=float, default=1000.0, help="k = 2^(2/3) c0 (default 1000)")
    s.add_argument("--window", type=float, default=3.0)
    s.add_argument("--resolution", type=int, default=64)
    s.add_argument("--k-min", type=float, default=None, help="override the |k| guard")
    s.add_argument("--measure-resolution", type=int, default=128)
    s.add_argument("--depth", type=int, default=0, help="cylinder statistics depth (0: skip)")
    s.add_argument("--stats-resolution", type=int, default=256)
    s.add_argument("--max-refine", type=int, default=5)

    s = sub.add_parser("misiurewicz", parents=[common], help="solve for Misiurewicz parameters")
    s.add_argument("--spec", type=spec_arg, required=True, help="n,k,m,l")
    s.add_argument("--region", type=region_arg, default=(-2.0, 2.0, -2.0, 2.0), help="c-window")
    s.add_argument("--v-region", type=region_arg, default=None, help="optional v-window")
    s.add_argument("--method", choices=("grid", "homotopy"), default="grid")
    s.add_argument("--seed-resolution", type=int, default=64)

    s = sub.add_parser("equidist", parents=[common], help="3^-n log|Per| against G")
    s.add_argument("--sign", choices=("plus", "minus"), required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, default=0)
    s.add_argument("--at", type=param_arg, required=True, help="c,v")
    return ap


_NEGATIVE = re.compile(r"^-[0-9.]")


def _join_negative_values(argv: List[str]) -> List[str]:
    """'--region -2,2,-2,2' -> '--region=-2,2,-2,2' so argparse keeps the value."""
    out: List[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) \
                and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(_join_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    fn, plan = COMMANDS[args.command]
    if args.dry_run:
        out = Path(args.out)
        files = plan(args) + [f"{args.command}.manifest.json"]
        print(json.dumps({"command": ["bifcc"] + argv,
                          "outputs": [str(out / f) for f in files]}, indent=2))
        return EXIT_OK
    Path(args.out).mkdir(parents=True, exist_ok=True)
    run = Run(args, argv)
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            code = fn(args, run)
    except UsageError as exc:
        print(f"bifcc {args.command}: error: {exc}", file=sys.stderr)
        run.finish("usage-error")
        return EXIT_USAGE
    except (BifccError, FloatingPointError, ZeroDivisionError, OverflowError) as exc:
        print(f"bifcc {args.command}: numeric failure: {exc}", file=sys.stderr)
        run.finish("numeric-failure")
        return EXIT_NUMERIC
    run.finish("ok" if code == EXIT_OK else "check-failure")
    return code


if __name__ == "__main__":
    sys.exit(main())
