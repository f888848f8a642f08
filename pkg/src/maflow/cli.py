"""Command-line front end: flow selection, grids, field emission, verification.

CSV output starts with '#'-prefixed manifest lines (sorted keys), then a
column-name row: coordinates, requested fields in flag order, and a trailing
``flag`` column. Cells where evaluation raised a domain error hold lowercase
``nan`` and the flag cell names the error kind. Floats print as the shortest
round-tripping decimal, so identical invocations are byte-identical and
parallel sweeps match serial ones.

Exit codes: 0 success, 2 bad flags or grid, 3 unknown flow or field,
4 verification failure.
"""

import argparse
import itertools
import json
import math
import sys
import time
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from . import __version__, flows, reduction
from .background import curvature_at
from .diagnostics import (DEFAULT_EPS_SING, classify, fhat_value,
                          helicity_density, hessian_metric, kinematics,
                          phase_scalar_curvature, pullback_eigenvalues,
                          pullback_metric, pullback_scalar_curvature)
from .errors import MaflowError, UnknownFlow
from .gaussbonnet import DiscRegion, LevelRegion, RectangleRegion, euler_number
from .legendre import dual_ma_residual, round_trip_error, to_dual
from .structures import verify_structure

MAX_GRID_POINTS = 10 ** 7


class UsageError(Exception):
    """Bad flag values; maps to exit code 2."""


class SelectionError(Exception):
    """Unknown flow or field; maps to exit code 3."""


# ---------------------------------------------------------------------- grids

@dataclass(frozen=True)
class GridAxis:
    name: str
    lo: float
    hi: float
    count: int


def parse_grid(text):
    """Parse ``"x=a:b:n,y=c:d:m"`` into axes; row-major, last axis fastest."""
    axes = []
    for part in text.split(","):
        try:
            name, rng = part.split("=", 1)
            lo_s, hi_s, n_s = rng.split(":")
            axis = GridAxis(name.strip(), float(lo_s), float(hi_s), int(n_s))
        except ValueError:
            raise UsageError(f"malformed grid axis {part!r}; "
                             "expected name=min:max:count")
        if axis.count < 2:
            raise UsageError(f"grid axis {axis.name!r} needs count >= 2, "
                             f"got {axis.count}")
        if not axis.hi > axis.lo:
            raise UsageError(f"grid axis {axis.name!r} needs max > min")
        axes.append(axis)
    total = math.prod(a.count for a in axes)
    if total > MAX_GRID_POINTS:
        raise UsageError(f"grid holds {total} points, cap is {MAX_GRID_POINTS}")
    return axes


def grid_points(axes):
    lines = []
    for ax in axes:
        step = (ax.hi - ax.lo) / (ax.count - 1)
        lines.append([ax.lo + k * step for k in range(ax.count)])
    return [tuple(pt) for pt in itertools.product(*lines)]


def parse_box(text):
    axes = []
    for part in text.split(","):
        try:
            name, rng = part.split("=", 1)
            lo_s, hi_s = rng.split(":")
            lo, hi = float(lo_s), float(hi_s)
        except ValueError:
            raise UsageError(f"malformed box axis {part!r}; "
                             "expected name=min:max")
        if not hi > lo:
            raise UsageError(f"box axis {name!r} needs max > min")
        axes.append((name.strip(), lo, hi))
    return axes


def parse_params(text):
    params = {}
    if not text:
        return params
    for part in text.split(","):
        try:
            key, val = part.split("=", 1)
            params[key.strip()] = float(val)
        except ValueError:
            raise UsageError(f"malformed parameter {part!r}; expected k=v")
    return params


def build_spec(flow, params, t):
    if flow.startswith("psi:"):
        return flows.from_stream_expression(flow[len("psi:"):], params, t)
    if flow.startswith("v:"):
        exprs = [e for e in flow[len("v:"):].split(";") if e.strip()]
        return flows.from_velocity_expressions(exprs, params, t)
    try:
        return flows.catalog(flow, params, t)
    except UnknownFlow:
        names = ", ".join(flows.catalog_names())
        raise SelectionError(f"unknown flow {flow!r}; catalog: {names}; "
                             "user flows use psi:<expr> or v:<e1>;<e2>[;<e3>]")


# --------------------------------------------------------------- field tables

def _eigendata(spec, pt, eps):
    if spec.dim == 2:
        return pullback_eigenvalues(pullback_metric(spec, pt, eps_sing=eps),
                                    kinematics(spec, pt))
    return pullback_eigenvalues(hessian_metric(spec, pt, eps_sing=eps))


def _strain_entry(i, j):
    return lambda spec, pt, eps: float(kinematics(spec, pt).strain[i][j])


_AXIS_LETTERS = "xyz"

# name -> (evaluator, required dim or None for any)
DIAGNOSE_FIELDS = {
    "f": (lambda s, p, e: kinematics(s, p).f, None),
    "fhat": (lambda s, p, e: fhat_value(s, p), None),
    "zeta": (lambda s, p, e: kinematics(s, p).scalar_vorticity, None),
    "R": (lambda s, p, e: pullback_scalar_curvature(s, p, eps_sing=e)[0], 2),
    "Rtilde": (lambda s, p, e: pullback_scalar_curvature(s, p,
                                                         eps_sing=e)[1], 2),
    "Rhat": (lambda s, p, e: phase_scalar_curvature(s, p, eps_sing=e), None),
    "E+": (lambda s, p, e: _eigendata(s, p, e).e_plus, None),
    "E-": (lambda s, p, e: _eigendata(s, p, e).e_minus, None),
    "E3": (lambda s, p, e: _eigendata(s, p, e).e3, 3),
    "DR": (lambda s, p, e: _eigendata(s, p, e).d_r, 2),
    "class": (lambda s, p, e: classify(s, p, eps=e), None),
    "helicity": (lambda s, p, e: helicity_density(s, p), 3),
}
for _i in range(3):
    for _j in range(3):
        _name = f"S{_AXIS_LETTERS[_i]}{_AXIS_LETTERS[_j]}"
        _req = 3 if max(_i, _j) == 2 else None
        DIAGNOSE_FIELDS.setdefault(_name, (_strain_entry(_i, _j), _req))

REDUCE_FIELDS = {
    "fhat2+h": (lambda s, p, e: reduction.reduced_fhat(s, p), None),
    "h+": (lambda s, p, e: reduction.h_plus_minus(s, p)[0], None),
    "h-": (lambda s, p, e: reduction.h_plus_minus(s, p)[1], None),
    "Rhat2": (lambda s, p, e: reduction.reduced_curvatures(
        s, p, eps_sing=e)[0], None),
    "R2": (lambda s, p, e: reduction.reduced_curvatures(
        s, p, eps_sing=e)[1], None),
    "E+": (lambda s, p, e: pullback_eigenvalues(reduction.reduced_metrics(
        s, p, eps_sing=e)[1]).e_plus, None),
    "E-": (lambda s, p, e: pullback_eigenvalues(reduction.reduced_metrics(
        s, p, eps_sing=e)[1]).e_minus, None),
    "divres": (lambda s, p, e: reduction.reduced_constraint_residuals(
        s, p)[0], None),
    "pressres": (lambda s, p, e: reduction.reduced_constraint_residuals(
        s, p)[1], None),
    "ztrace": (lambda s, p, e: reduction.reduced_traces(s, p)[0], None),
    "strace": (lambda s, p, e: reduction.reduced_traces(s, p)[1], None),
    "f3check": (lambda s, p, e: reduction.reduced_traces(s, p)[2], None),
    "musym": (lambda s, p, e: reduction.moment_maps(s, p)[0], None),
    "mu1": (lambda s, p, e: float(reduction.moment_maps(s, p)[1][0]), None),
    "mu2": (lambda s, p, e: float(reduction.moment_maps(s, p)[1][1]), None),
}


def check_fields(names, table, spec):
    valid = sorted(n for n, (_, req) in table.items()
                   if req is None or req == spec.dim)
    bad = [n for n in names if n not in valid]
    if bad:
        raise SelectionError(
            f"unknown field(s) {', '.join(bad)} for flow {spec.name!r}; "
            f"valid: {', '.join(valid)}")


# ----------------------------------------------------------------- evaluation

def _fmt(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def eval_rows(spec, table, fields, points, eps):
    rows = []
    for pt in points:
        cells = [repr(float(c)) for c in pt]
        errors = set()
        for name in fields:
            fn = table[name][0]
            try:
                cells.append(_fmt(fn(spec, pt, eps)))
            except MaflowError as exc:
                cells.append("nan")
                errors.add(type(exc).__name__)
        cells.append(";".join(sorted(errors)))
        rows.append(cells)
    return rows


def _worker(payload):
    flow, params, t, command, fields, eps, points = payload
    spec = build_spec(flow, params, t)
    table = REDUCE_FIELDS if command == "reduce" else DIAGNOSE_FIELDS
    return eval_rows(spec, table, fields, points, eps)


def eval_rows_parallel(args, fields, points, jobs):
    command = args.command
    if jobs <= 1 or len(points) < 2 * jobs:
        spec = build_spec(args.flow, parse_params(args.params), args.t)
        table = REDUCE_FIELDS if command == "reduce" else DIAGNOSE_FIELDS
        return eval_rows(spec, table, fields, points, args.eps_sing)
    chunk = (len(points) + jobs - 1) // jobs
    payloads = [(args.flow, parse_params(args.params), args.t, command,
                 fields, args.eps_sing, points[k:k + chunk])
                for k in range(0, len(points), chunk)]
    with Pool(jobs) as pool:
        parts = pool.map(_worker, payloads)
    return [row for part in parts for row in part]


# --------------------------------------------------------------------- output

def write_csv(args, manifest, header, rows, elapsed):
    lines = [f"# {key}={manifest[key]}" for key in sorted(manifest)]
    lines.append(",".join(header))
    lines.extend(",".join(row) for row in rows)
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        sidecar = dict(manifest)
        sidecar["timing_seconds"] = elapsed
        with open(args.out + ".manifest.json", "w") as fh:
            json.dump(sidecar, fh, sort_keys=True, indent=2)
            fh.write("\n")
    else:
        sys.stdout.write(text)


def write_json(args, payload):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def base_manifest(args, extra):
    manifest = {
        "command": args.command,
        "eps_sing": repr(float(args.eps_sing)),
        "flow": args.flow,
        "params": json.dumps(parse_params(args.params), sort_keys=True),
        "t": repr(float(args.t)),
        "version": __version__,
    }
    manifest.update(extra)
    return manifest


# ----------------------------------------------------------------- subcommands

def cmd_diagnose(args):
    spec = build_spec(args.flow, parse_params(args.params), args.t)
    fields = [f for f in args.fields.split(",") if f]
    table = REDUCE_FIELDS if args.command == "reduce" else DIAGNOSE_FIELDS
    if args.command == "reduce" and spec.kind != "reduced":
        raise SelectionError(f"flow {spec.name!r} is not a reduced flow; "
                             "reduce needs a warped-product catalog entry")
    check_fields(fields, table, spec)
    axes = parse_grid(args.grid)
    points = grid_points(axes)
    start = time.perf_counter()
    rows = eval_rows_parallel(args, fields, points, args.jobs)
    elapsed = time.perf_counter() - start
    manifest = base_manifest(args, {"fields": ",".join(fields),
                                    "grid": args.grid})
    header = [ax.name for ax in axes] + fields + ["flag"]
    write_csv(args, manifest, header, rows, elapsed)
    return 0


def cmd_sample(args):
    spec = build_spec(args.flow, parse_params(args.params), args.t)
    fields = [f for f in args.fields.split(",") if f]
    check_fields(fields, DIAGNOSE_FIELDS, spec)
    box = parse_box(args.box)
    if args.n < 1:
        raise UsageError("sample count must be positive")
    if args.n > MAX_GRID_POINTS:
        raise UsageError(f"sample count cap is {MAX_GRID_POINTS}")
    rng = np.random.default_rng(args.seed)
    points = [tuple(float(rng.uniform(lo, hi)) for _, lo, hi in box)
              for _ in range(args.n)]
    start = time.perf_counter()
    rows = eval_rows_parallel(args, fields, points, args.jobs)
    elapsed = time.perf_counter() - start
    manifest = base_manifest(args, {"box": args.box, "fields": ",".join(fields),
                                    "n": str(args.n), "seed": str(args.seed)})
    header = [name for name, _, _ in box] + fields + ["flag"]
    write_csv(args, manifest, header, rows, elapsed)
    return 0


def _parse_floats(text, n, what):
    parts = text.split(",")
    if len(parts) != n:
        raise UsageError(f"{what} needs {n} comma-separated numbers, "
                         f"got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"{what} needs numbers, got {text!r}")


def cmd_gauss_bonnet(args):
    spec = build_spec(args.flow, parse_params(args.params), args.t)
    chosen = [x for x in (args.level, args.disc, args.rect) if x is not None]
    if len(chosen) != 1:
        raise UsageError("choose exactly one of --level, --disc, --rect")
    if args.level is not None:
        if not args.level.startswith("psi="):
            raise UsageError("--level expects psi=<value>")
        if args.seed is None:
            raise UsageError("--level needs --seed <x,y> for the star center")
        try:
            value = float(args.level[len("psi="):])
        except ValueError:
            raise UsageError(f"malformed level {args.level!r}")
        center = _parse_floats(args.seed, 2, "--seed")
        region = LevelRegion(center=center, value=value, rho0=args.rho0)
    elif args.disc is not None:
        cx, cy, radius = _parse_floats(args.disc, 3, "--disc")
        region = DiscRegion(center=(cx, cy), radius=radius)
    else:
        x0, y0, x1, y1 = _parse_floats(args.rect, 4, "--rect")
        region = RectangleRegion(x0=x0, y0=y0, x1=x1, y1=y1)
    start = time.perf_counter()
    breakdown = euler_number(spec, region, tol=args.tol)
    elapsed = time.perf_counter() - start
    payload = dict(breakdown)
    payload.update({"flow": args.flow, "t": args.t, "tol": args.tol,
                    "region": repr(region), "timing_seconds": elapsed,
                    "version": __version__})
    write_json(args, payload)
    return 0


def _read_points_file(path):
    points = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            try:
                points.append(tuple(float(p) for p in parts[:2]))
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise UsageError(f"{path}:{lineno}: expected x,y numbers")
    if not points:
        raise UsageError(f"{path} holds no points")
    return points


def cmd_legendre(args):
    spec = build_spec(args.flow, parse_params(args.params), args.t)
    points = _read_points_file(args.points)
    header = ["x", "y", "xi_x", "xi_y", "psi_dual", "sheet",
              "ma_residual", "round_trip", "flag"]
    rows = []
    start = time.perf_counter()
    for pt in points:
        cells = [repr(float(pt[0])), repr(float(pt[1]))]
        try:
            dual = to_dual(spec, pt)
            residual = dual_ma_residual(spec, pt)
            trip = round_trip_error(spec, pt)
            cells += [repr(float(dual.point[0])), repr(float(dual.point[1])),
                      repr(float(dual.value)), str(int(dual.sheet)),
                      repr(float(residual)), repr(float(trip)), ""]
        except MaflowError as exc:
            cells += ["nan"] * 6 + [type(exc).__name__]
        rows.append(cells)
    elapsed = time.perf_counter() - start
    manifest = base_manifest(args, {"points": args.points})
    write_csv(args, manifest, header, rows, elapsed)
    return 0


# -------------------------------------------------------------------- verify

# sampling windows keep the random probes inside each flow's natural domain
_VERIFY_WINDOWS = {
    "larcheveque": ((-1.2, 1.2), (-1.2, 1.2)),
    "moffatt": ((-1.2, 1.2), (-1.2, 1.2)),
    "taylor-green": ((0.2, 2.9), (0.2, 2.9)),
    "burgers": ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)),
    "abc": ((0.3, 2.8), (-1.2, 1.2), (-1.0, 1.0)),
    "hill-interior": ((0.15, 0.65), (-0.45, 0.45), (0.0, 6.28)),
    "hicks-interior": ((0.15, 0.65), (-0.45, 0.45), (0.0, 6.28)),
    "hicks-exterior": ((1.1, 1.8), (-0.6, 0.6), (0.0, 6.28)),
}

_STRUCTURE_TOLS = {
    "alpha_omega": 1e-10,
    "varpi_omega": 1e-10,
    "alpha_varpi": 1e-10,
    "d_alpha": 1e-8,
    "d_varpi": 1e-8,
    "d_theta_minus_omega": 1e-8,
    "j_squared": 1e-9,
    "j_squared_omega": 1e-9,
    "hermitian_pair": 1e-10,
    "hermitian_pair_omega": 1e-10,
    "pfaffian": 1e-10,
    "liouville": 1e-10,
}


def _sample_window(spec, rng):
    window = _VERIFY_WINDOWS.get(spec.name,
                                 ((-1.0, 1.0),) * spec.dim)
    return tuple(float(rng.uniform(lo, hi)) for lo, hi in window[:spec.dim])


def _suite_result(maxima, tols, samples):
    out = {}
    for key in sorted(maxima):
        tol = tols.get(key, 1e-8)
        out[key] = {"max": maxima[key], "tol": tol,
                    "pass": bool(maxima[key] <= tol)}
    # a suite that never sampled must not pass vacuously
    out["samples"] = {"max": float(samples), "tol": math.inf,
                      "pass": samples > 0}
    return out


def _structures_suite(spec, rng, n):
    maxima = {}
    produced = 0
    attempts = 0
    while produced < n and attempts < 20 * n:
        attempts += 1
        pt = _sample_window(spec, rng)
        try:
            res = verify_structure(spec, pt)
        except MaflowError:
            continue  # singular sample; try another point
        produced += 1
        for key, val in res.items():
            maxima[key] = max(maxima.get(key, 0.0), float(val))
    return _suite_result(maxima, _STRUCTURE_TOLS, produced)


def _background_suite(spec, rng, n):
    maxima = {"ricci_symmetry": 0.0, "scalar_flatness": 0.0}
    for _ in range(n):
        pt = _sample_window(spec, rng)
        curv = curvature_at(spec.geometry, list(pt))
        ric = np.array([[e.value for e in row] for row in curv.ricci])
        maxima["ricci_symmetry"] = max(maxima["ricci_symmetry"],
                                       float(np.abs(ric - ric.T).max()))
        # every catalog background is intrinsically flat
        maxima["scalar_flatness"] = max(maxima["scalar_flatness"],
                                        abs(curv.scalar.value))
    return _suite_result(maxima, {"ricci_symmetry": 1e-9,
                                  "scalar_flatness": 1e-8}, n)


def _reduction_suite(spec, rng, n):
    maxima = {"div_residual": 0.0, "pressure_residual": 0.0,
              "trace_consistency": 0.0, "pullback_form_gap": 0.0,
              "level_set_residual": 0.0, "conformal_match": 0.0}
    produced = 0
    attempts = 0
    while produced < n and attempts < 20 * n:
        attempts += 1
        pt = _sample_window(spec, rng)[:2]
        try:
            div_res, p_res = reduction.reduced_constraint_residuals(spec, pt)
            _, _, f3 = reduction.reduced_traces(spec, pt)
            rows_t = reduction._g2_rows(spec, pt, 0, form="T")
            rows_v = reduction._g2_rows(spec, pt, 0, form="V2")
            _, mu = reduction.moment_maps(spec, pt)
            rj = flows.eval_reduced_base(spec, list(pt), order=2)
            full = fhat_value(spec, [pt[0], pt[1], 0.0])
            reduced = reduction.reduced_fhat(spec, pt)
        except MaflowError:
            continue
        produced += 1
        vt = np.array([[e.value for e in row] for row in rows_t])
        vv = np.array([[e.value for e in row] for row in rows_v])
        scale = max(1.0, float(np.abs(vt).max()))
        dpsi = np.array([rj.psi.partial(0).value, rj.psi.partial(1).value])
        maxima["div_residual"] = max(maxima["div_residual"], abs(div_res))
        maxima["pressure_residual"] = max(maxima["pressure_residual"],
                                          abs(p_res))
        maxima["trace_consistency"] = max(maxima["trace_consistency"], f3)
        maxima["pullback_form_gap"] = max(maxima["pullback_form_gap"],
                                          float(np.abs(vt - vv).max()) / scale)
        maxima["level_set_residual"] = max(maxima["level_set_residual"],
                                           float(np.abs(mu + dpsi).max()))
        maxima["conformal_match"] = max(maxima["conformal_match"],
                                        abs(full - reduced))
    return _suite_result(maxima, {"div_residual": 1e-8,
                                  "pressure_residual": 1e-8,
                                  "trace_consistency": 1e-8,
                                  "pullback_form_gap": 1e-9,
                                  "level_set_residual": 1e-9,
                                  "conformal_match": 1e-8}, produced)


def cmd_verify(args):
    names = [args.flow] if args.flow else list(flows.catalog_names())
    report = {"n": args.n, "seed": args.seed,
              "eps_sing": float(args.eps_sing), "flows": {}}
    overall = True
    for name in names:
        spec = build_spec(name, parse_params(args.params), args.t)
        rng = np.random.default_rng(args.seed)
        suites = {"structures": _structures_suite(spec, rng, args.n),
                  "background": _background_suite(spec, rng, args.n)}
        if spec.kind == "reduced":
            suites["reduction"] = _reduction_suite(spec, rng, args.n)
        flow_pass = all(entry["pass"] for suite in suites.values()
                        for entry in suite.values())
        report["flows"][name] = {"suites": suites, "pass": flow_pass}
        overall = overall and flow_pass
    report["pass"] = overall
    write_json(args, report)
    return 0 if overall else 4


# ----------------------------------------------------------------- arg wiring

def _add_common(sub):
    sub.add_argument("--flow", required=True,
                     help="catalog name, psi:<expr>, or v:<e1>;<e2>[;<e3>]")
    sub.add_argument("--t", type=float, default=0.0)
    sub.add_argument("--params", default="", help="k=v,k2=v2 parameter map")
    sub.add_argument("--eps-sing", dest="eps_sing", type=float,
                     default=DEFAULT_EPS_SING)
    sub.add_argument("--out", default=None, help="output path (default stdout)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="maflow",
        description="Pointwise geometric diagnostics of incompressible flows")
    subs = parser.add_subparsers(dest="command", required=True)

    diag = subs.add_parser("diagnose", help="evaluate fields on a grid")
    _add_common(diag)
    diag.add_argument("--grid", required=True, help='"x=a:b:n,y=c:d:m"')
    diag.add_argument("--fields", required=True, help="comma-separated names")
    diag.add_argument("--jobs", type=int, default=1)
    diag.set_defaults(func=cmd_diagnose)

    red = subs.add_parser("reduce",
                          help="evaluate reduced fields on a base grid")
    _add_common(red)
    red.add_argument("--grid", required=True, help='"r=a:b:n,z=c:d:m"')
    red.add_argument("--fields", required=True,
                     help="fhat2+h,R2,Rhat2,E+,E-,...")
    red.add_argument("--jobs", type=int, default=1)
    red.set_defaults(func=cmd_diagnose)

    samp = subs.add_parser("sample", help="evaluate fields at random points")
    _add_common(samp)
    samp.add_argument("--box", required=True, help='"x=a:b,y=c:d"')
    samp.add_argument("--n", type=int, required=True)
    samp.add_argument("--seed", type=int, default=0)
    samp.add_argument("--fields", required=True)
    samp.add_argument("--jobs", type=int, default=1)
    samp.set_defaults(func=cmd_sample)

    gb = subs.add_parser("gauss-bonnet",
                         help="Euler number of a vortex patch")
    _add_common(gb)
    gb.add_argument("--level", default=None, help="psi=<value> level region")
    gb.add_argument("--seed", default=None,
                    help="x,y star center for --level")
    gb.add_argument("--rho0", type=float, default=1.0,
                    help="initial radius for the level-set trace")
    gb.add_argument("--disc", default=None, help="cx,cy,radius")
    gb.add_argument("--rect", default=None, help="x0,y0,x1,y1")
    gb.add_argument("--tol", type=float, default=1e-6)
    gb.set_defaults(func=cmd_gauss_bonnet)

    leg = subs.add_parser("legendre", help="Legendre duals of stream points")
    _add_common(leg)
    leg.add_argument("--points", required=True, help="CSV file of x,y points")
    leg.set_defaults(func=cmd_legendre)

    ver = subs.add_parser("verify", help="invariant suites at random points")
    ver.add_argument("--flow", default=None,
                     help="catalog name (default: all catalog flows)")
    ver.add_argument("--t", type=float, default=0.0)
    ver.add_argument("--params", default="")
    ver.add_argument("--eps-sing", dest="eps_sing", type=float,
                     default=DEFAULT_EPS_SING)
    ver.add_argument("--out", default=None)
    ver.add_argument("--n", type=int, default=20)
    ver.add_argument("--seed", type=int, default=0)
    ver.set_defaults(func=cmd_verify)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SelectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except MaflowError as exc:
        # domain errors outside per-cell evaluation (bad region, bad file)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
