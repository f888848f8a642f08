"""Flow catalog and user-defined flows.

A FlowSpec bundles a background geometry with jet-valued field builders:
  - kind "stream2d": planar flow from a stream function on a flat background
  - kind "velocity": velocity components given directly (flat background)
  - kind "reduced":  axisymmetric-with-swirl data (psi, v3) over a warped
    product g3 = g2 + e^{2 phi} dx3 (x) dx3

All builders accept the full coordinate jet list and work at any truncation
order. Parameters are frozen floats; `t` is a frozen snapshot time.

eval_flow seeds coordinate jets at the requested order; stream-derived
velocities come out one order lower (one derivative is spent on psi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import jets as _jets
from .background import BackgroundGeometry, christoffels_at, const_like
from .errors import (DimensionError, MissingParameter, MissingPressure, UnknownFlow)
from .expr import evaluate, free_names, parse_expression
from .jets import Jet, matrix_inverse, seed_point

_PARAM_ALIASES = {
    "κ": "kappa", "α": "alpha", "β": "beta", "γ": "gamma",
    "σ3": "sigma3", "ζ3": "zeta3", "sigma_3": "sigma3",
    "zeta_3": "zeta3", "σ₃": "sigma3", "ζ₃": "zeta3",
}


@dataclass
class FlowSpec:
    name: str
    kind: str                      # stream2d | velocity | reduced
    dim: int
    geometry: BackgroundGeometry
    params: dict
    t: float = 0.0
    psi_fn: callable = None
    v3_fn: callable = None
    velocity_fn: callable = None
    pressure_fn: callable = None
    steady_euler: bool = False
    base_geometry: BackgroundGeometry = None
    warp_fn: callable = None       # phi(cj) for reduced flows; None means 0

    def describe(self):
        items = ",".join(f"{k}={self.params[k]!r}" for k in sorted(self.params))
        return f"{self.name}({items};t={self.t!r})"


@dataclass
class FlowJets:
    """Jet data of a flow at a point."""

    spec: FlowSpec
    coords: list                  # coordinate jets, dim = spec.dim
    v_cov: list                   # covariant velocity jets
    v_contra: list                # contravariant velocity jets
    psi: Jet = None               # stream function (stream2d / reduced)
    v3: Jet = None                # covariant swirl component (reduced)


@dataclass
class ReducedJets:
    """Base-only (2D) jet data for a reduced flow."""

    spec: FlowSpec
    coords: list                  # 2 jets over the base coordinates
    psi: Jet
    v3: Jet                       # covariant swirl component
    v_cov: list                   # covariant base velocity (2 entries)
    v_contra: list
    warp: Jet                     # phi as a jet (zero jet if unwarped)


def _normalize_params(name, defaults, supplied):
    params = dict(defaults)
    for key, value in (supplied or {}).items():
        canon = _PARAM_ALIASES.get(key, key)
        if canon not in defaults:
            valid = ", ".join(sorted(defaults)) or "(none)"
            raise ValueError(f"unknown parameter {key!r} for flow {name!r}; "
                             f"valid: {valid}")
        if value is None or (isinstance(value, float) and math.isnan(value)):
            raise MissingParameter(f"parameter {canon!r} of flow {name!r} "
                                   f"has no usable value")
        params[canon] = float(value)
    return params


def _eps2():
    return ((0.0, 1.0), (-1.0, 0.0))


def _base_metric_rows(spec: FlowSpec, cj):
    """Base 2x2 metric entries built over the supplied jets (any ambient dim)."""
    base = spec.base_geometry
    if base is None or base.flat:
        return [[const_like(cj[0], 1.0 if i == j else 0.0) for j in range(2)]
                for i in range(2)]
    return base.metric_fn(cj[:2])


def _stream_velocity_cov(psi, coords, base_metric_rows, warp_jet):
    """v_i = -sqrt(det g2) e^{-phi} eps_{ij} g2^{jk} d_k psi (covariant, base)."""
    g = base_metric_rows
    det = g[0][0] * g[1][1] - g[0][1] * g[1][0]
    sqrt_det = _jets.sqrt(det)
    ginv = matrix_inverse(g)
    grad = [psi.partial(0), psi.partial(1)]
    scale = sqrt_det
    if warp_jet is not None:
        scale = scale * _jets.exp(-warp_jet)
    eps = _eps2()
    out = []
    for i in range(2):
        acc = None
        for j in range(2):
            if eps[i][j] == 0.0:
                continue
            term = None
            for k in range(2):
                piece = ginv[j][k] * grad[k]
                term = piece if term is None else term + piece
            term = term * eps[i][j]
            acc = term if acc is None else acc + term
        out.append(-(scale * acc))
    return out


def eval_flow(spec: FlowSpec, point, order=3) -> FlowJets:
    pt = [float(v) for v in point]
    if spec.kind == "reduced" and len(pt) == spec.dim - 1:
        pt = pt + [0.0]
    if len(pt) != spec.dim:
        raise DimensionError(f"flow {spec.name!r} expects {spec.dim} coordinates, "
                             f"got {len(pt)}")
    cj = seed_point(pt, order)
    if spec.kind == "velocity":
        v_contra = spec.velocity_fn(cj, spec.params, spec.t)
        rows = spec.geometry.metric_fn(cj)
        v_cov = []
        for i in range(spec.dim):
            acc = None
            for j in range(spec.dim):
                term = rows[i][j] * v_contra[j]
                acc = term if acc is None else acc + term
            v_cov.append(acc)
        return FlowJets(spec, cj, v_cov, list(v_contra))
    if spec.kind == "stream2d":
        psi = spec.psi_fn(cj, spec.params, spec.t)
        v_cov = [-(psi.partial(1)), psi.partial(0)]
        return FlowJets(spec, cj, v_cov, list(v_cov), psi=psi)
    if spec.kind == "reduced":
        psi = spec.psi_fn(cj, spec.params, spec.t)
        warp = spec.warp_fn(cj) if spec.warp_fn else None
        base_rows = _base_metric_rows(spec, cj)
        v2 = _stream_velocity_cov(psi, cj, base_rows, warp)
        v3 = spec.v3_fn(cj, spec.params, spec.t) if spec.v3_fn \
            else const_like(cj[0], 0.0)
        v_cov = [v2[0], v2[1], v3.truncate(v2[0].order)]
        ginv2 = matrix_inverse(base_rows)
        v_contra = []
        for i in range(2):
            acc = None
            for j in range(2):
                term = ginv2[i][j].truncate(v2[j].order) * v2[j]
                acc = term if acc is None else acc + term
            v_contra.append(acc)
        if warp is not None:
            v_contra.append(_jets.exp(warp * (-2.0)).truncate(v_cov[2].order)
                            * v_cov[2])
        else:
            v_contra.append(v_cov[2])
        return FlowJets(spec, cj, v_cov, v_contra, psi=psi, v3=v3)
    raise ValueError(f"unknown flow kind {spec.kind!r}")


def eval_reduced_base(spec: FlowSpec, point2, order=4) -> ReducedJets:
    """Base-plane jets (dimension 2) for a reduced flow."""
    if spec.kind != "reduced":
        raise DimensionError(f"flow {spec.name!r} is not a reduced flow")
    pt = [float(point2[0]), float(point2[1])]
    cj = seed_point(pt, order)
    psi = spec.psi_fn(cj, spec.params, spec.t)
    warp = spec.warp_fn(cj) if spec.warp_fn else const_like(cj[0], 0.0)
    base_rows = _base_metric_rows(spec, cj)
    v2 = _stream_velocity_cov(psi, cj, base_rows, warp if spec.warp_fn else None)
    v3 = spec.v3_fn(cj, spec.params, spec.t) if spec.v3_fn \
        else const_like(cj[0], 0.0)
    ginv2 = matrix_inverse(base_rows)
    v_contra = []
    for i in range(2):
        acc = None
        for j in range(2):
            term = ginv2[i][j].truncate(v2[j].order) * v2[j]
            acc = term if acc is None else acc + term
        v_contra.append(acc)
    return ReducedJets(spec, cj, psi, v3, v2, v_contra, warp)


# -- catalog ------------------------------------------------------------------

def _larcheveque(params, t):
    defaults = {"a": 1.0, "b": 1.0}
    p = _normalize_params("larcheveque", defaults, params)

    def psi(cj, prm, _t):
        x, y = cj[0], cj[1]
        return 0.5 * (prm["a"] * x * x + prm["b"] * y * y)

    def pressure(cj, prm, _t):
        x, y = cj[0], cj[1]
        return 0.5 * prm["a"] * prm["b"] * (x * x + y * y)

    return FlowSpec("larcheveque", "stream2d", 2, BackgroundGeometry.flat_space(2),
                    p, t, psi_fn=psi, pressure_fn=pressure, steady_euler=True)


def _moffatt(params, t):
    p = _normalize_params("moffatt", {}, params)

    def psi(cj, _prm, tt):
        x, y = cj[0], cj[1]
        return -(x * x) + 3.0 * tt * y + y * y * y

    return FlowSpec("moffatt", "stream2d", 2, BackgroundGeometry.flat_space(2),
                    p, t, psi_fn=psi, steady_euler=False)


def _taylor_green(params, t):
    defaults = {"a": 1.0, "b": 1.0, "F": 1.0}
    p = _normalize_params("taylor-green", defaults, params)

    def psi(cj, prm, _t):
        x, y = cj[0], cj[1]
        return -prm["F"] * _jets.cos(prm["a"] * x) * _jets.cos(prm["b"] * y)

    def pressure(cj, prm, _t):
        x, y = cj[0], cj[1]
        a, b, F = prm["a"], prm["b"], prm["F"]
        return -(F * F / 4.0) * (b * b * _jets.cos(2 * a * x)
                                 + a * a * _jets.cos(2 * b * y))

    return FlowSpec("taylor-green", "stream2d", 2, BackgroundGeometry.flat_space(2),
                    p, t, psi_fn=psi, pressure_fn=pressure, steady_euler=True)


def _burgers(params, t):
    defaults = {"alpha": -0.5, "beta": -0.5, "gamma": float("inf"),
                "sigma3": 0.0, "zeta3": 1.0}
    p = _normalize_params("burgers", defaults, params)
    if not math.isfinite(p["gamma"]):
        p["gamma"] = -p["alpha"] - p["beta"]

    def velocity(cj, prm, _t):
        x, y, z = cj
        u = prm["alpha"] * x + (prm["sigma3"] - prm["zeta3"]) * y
        v = prm["beta"] * y + (prm["sigma3"] + prm["zeta3"]) * x
        w = prm["gamma"] * z
        return [u, v, w]

    return FlowSpec("burgers", "velocity", 3, BackgroundGeometry.flat_space(3),
                    p, t, velocity_fn=velocity, steady_euler=False)


def _abc(params, t):
    defaults = {"A": 1.5, "B": 1.0}
    p = _normalize_params("abc", defaults, params)

    def psi(cj, prm, _t):
        x, y = cj[0], cj[1]
        return prm["A"] * _jets.cos(y) + prm["B"] * _jets.sin(x)

    def v3(cj, prm, _t):
        return psi(cj, prm, _t)

    def pressure(cj, prm, _t):
        x, y = cj[0], cj[1]
        return -prm["A"] * prm["B"] * _jets.sin(x) * _jets.cos(y)

    base = BackgroundGeometry.flat_space(2)

    def warp(cj):
        return const_like(cj[0], 0.0)

    geom = BackgroundGeometry.warped_product(base, warp, name="flat-product")
    return FlowSpec("abc", "reduced", 3, geom, p, t, psi_fn=psi, v3_fn=v3,
                    pressure_fn=pressure, steady_euler=True,
                    base_geometry=base, warp_fn=warp)


def _hill_interior(params, t):
    p = _normalize_params("hill-interior", {}, params)

    def psi(cj, _prm, _t):
        r, z = cj[0], cj[1]
        return 0.75 * r * r * (r * r + z * z - 1.0)

    geom = BackgroundGeometry.cylindrical()
    return FlowSpec("hill-interior", "reduced", 3, geom, p, t, psi_fn=psi,
                    steady_euler=True, base_geometry=geom.base,
                    warp_fn=geom.warp)


def _bessel_j32(x):
    return math.sqrt(2.0 / (math.pi * x)) * (math.sin(x) / x - math.cos(x))


def _bessel_j52(x):
    return math.sqrt(2.0 / (math.pi * x)) * ((3.0 / (x * x) - 1.0) * math.sin(x)
                                             - 3.0 * math.cos(x) / x)


def _hicks_interior(params, t):
    defaults = {"kappa": 10.0}
    p = _normalize_params("hicks-interior", defaults, params)
    kappa = p["kappa"]
    j52 = _bessel_j52(kappa)
    if abs(j52) < 1e-12:
        raise MissingParameter(f"kappa={kappa} sits on a zero of J_{{5/2}}; "
                               f"the interior solution is degenerate there")
    b_k = _bessel_j32(kappa) / (kappa * j52)
    c_k = math.sqrt(kappa) / j52
    pref = math.sqrt(2.0 / math.pi)

    def psi(cj, prm, _t):
        r, z = cj[0], cj[1]
        sigma = _jets.sqrt(r * r + z * z)
        big_x = prm["kappa"] * sigma
        # J_{3/2}(X)/X^{3/2} = sqrt(2/pi) (sin X / X^3 - cos X / X^2)
        shell = pref * (_jets.sin(big_x) / (big_x * big_x * big_x)
                        - _jets.cos(big_x) / (big_x * big_x))
        return 1.5 * r * r * (b_k - c_k * shell)

    def v3(cj, prm, _t):
        return prm["kappa"] * psi(cj, prm, _t)

    geom = BackgroundGeometry.cylindrical()
    return FlowSpec("hicks-interior", "reduced", 3, geom, p, t, psi_fn=psi,
                    v3_fn=v3, steady_euler=True, base_geometry=geom.base,
                    warp_fn=geom.warp)


def _hicks_exterior(params, t):
    p = _normalize_params("hicks-exterior", {}, params)

    def psi(cj, _prm, _t):
        r, z = cj[0], cj[1]
        sigma = _jets.sqrt(r * r + z * z)
        return 0.5 * r * r * (1.0 - 1.0 / (sigma * sigma * sigma))

    geom = BackgroundGeometry.cylindrical()
    return FlowSpec("hicks-exterior", "reduced", 3, geom, p, t, psi_fn=psi,
                    steady_euler=True, base_geometry=geom.base,
                    warp_fn=geom.warp)


_CATALOG = {
    "larcheveque": _larcheveque,
    "moffatt": _moffatt,
    "taylor-green": _taylor_green,
    "burgers": _burgers,
    "abc": _abc,
    "hill-interior": _hill_interior,
    "hicks-interior": _hicks_interior,
    "hicks-exterior": _hicks_exterior,
}


def catalog_names():
    return sorted(_CATALOG)


def catalog(name, params=None, t=0.0) -> FlowSpec:
    try:
        builder = _CATALOG[name]
    except KeyError:
        raise UnknownFlow(f"unknown flow {name!r}; valid flows: "
                          f"{', '.join(catalog_names())}") from None
    return builder(params, float(t))


# -- user flows ---------------------------------------------------------------

def from_stream_expression(text, params=None, t=0.0) -> FlowSpec:
    """2D flow from a stream-function expression in x, y (flat background)."""
    ast = parse_expression(text)
    prm = {k: float(v) for k, v in (params or {}).items()}
    names = free_names(ast) - {"x", "y", "t"} - set(prm)
    if names:
        raise MissingParameter(f"stream expression references unbound names: "
                               f"{', '.join(sorted(names))}")

    def psi(cj, p, tt):
        env = {"x": cj[0], "y": cj[1], "t": tt, **p}
        return evaluate(ast, env)

    return FlowSpec(f"psi:{text}", "stream2d", 2, BackgroundGeometry.flat_space(2),
                    prm, float(t), psi_fn=psi, steady_euler=False)


def from_velocity_expressions(texts, params=None, t=0.0) -> FlowSpec:
    """Flow from velocity-component expressions (flat background, dim 2 or 3)."""
    texts = list(texts)
    if len(texts) not in (2, 3):
        raise DimensionError("expected 2 or 3 velocity component expressions")
    asts = [parse_expression(s) for s in texts]
    prm = {k: float(v) for k, v in (params or {}).items()}
    coords = ("x", "y", "z")[:len(texts)]
    for ast in asts:
        names = free_names(ast) - set(coords) - {"t"} - set(prm)
        if names:
            raise MissingParameter(f"velocity expression references unbound names: "
                                   f"{', '.join(sorted(names))}")

    def velocity(cj, p, tt):
        env = dict(zip(coords, cj))
        env["t"] = tt
        env.update(p)
        out = []
        for ast in asts:
            val = evaluate(ast, env)
            if not isinstance(val, Jet):
                val = const_like(cj[0], float(val))
            out.append(val)
        return out

    dim = len(texts)
    return FlowSpec(f"v:{';'.join(texts)}", "velocity", dim,
                    BackgroundGeometry.flat_space(dim), prm, float(t),
                    velocity_fn=velocity, steady_euler=False)


# -- pressure data ------------------------------------------------------------

def pressure_gradient_jets(spec: FlowSpec, coord_jets):
    """Covariant pressure-gradient jets p_I at the given coordinate jets.

    Prefers an explicit pressure expression; otherwise uses the steady Euler
    momentum balance p_I = -v^J nabla_J v_I. Raises MissingPressure when the
    flow provides neither.
    """
    n = len(coord_jets)
    if spec.pressure_fn is not None:
        p = spec.pressure_fn(coord_jets, spec.params, spec.t)
        return [p.partial(i) for i in range(n)]
    if not spec.steady_euler:
        raise MissingPressure(f"flow {spec.name!r} carries no pressure data and is "
                              f"not a steady Euler solution")
    if n != spec.dim:
        raise DimensionError("pressure gradient needs full-dimensional jets")
    flow = _flow_jets_from(spec, coord_jets)
    gamma = christoffels_at(spec.geometry, coord_jets)
    v_cov, v_contra = flow.v_cov, flow.v_contra
    order = min(v.order for v in v_cov) - 1
    grad = []
    for i in range(n):
        acc = None
        for j in range(n):
            nabla = v_cov[i].partial(j).truncate(order)
            for k in range(n):
                nabla = nabla - (gamma[j][i][k].truncate(order)
                                 * v_cov[k].truncate(order))
            term = v_contra[j].truncate(order) * nabla
            acc = term if acc is None else acc + term
        grad.append(-acc)
    return grad


def _flow_jets_from(spec, coord_jets):
    """Rebuild FlowJets at pre-seeded coordinate jets (shared seeding)."""
    cj = list(coord_jets)
    if spec.kind == "velocity":
        v_contra = spec.velocity_fn(cj, spec.params, spec.t)
        rows = spec.geometry.metric_fn(cj)
        v_cov = []
        for i in range(spec.dim):
            acc = None
            for j in range(spec.dim):
                term = rows[i][j] * v_contra[j]
                acc = term if acc is None else acc + term
            v_cov.append(acc)
        return FlowJets(spec, cj, v_cov, list(v_contra))
    point = [j.value for j in cj]
    return eval_flow(spec, point, order=cj[0].order)
