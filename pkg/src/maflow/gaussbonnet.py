"""Euler numbers of planar vortex regions from curvature integrals.

For a region whose closure stays inside a zone where the vorticity-weighted
Hessian metric of the flow is Riemannian,

    (1/2) * integral_Omega R dA  +  sum over boundary arcs of oint kappa ds
        + sum of corner turning angles  =  2 pi chi(Omega),

where R is the scalar curvature of that metric, kappa the geodesic curvature
of the boundary traversed counterclockwise (region on the left), and corner
angles are exterior turning angles measured in the metric.  Star-shaped
regions are traced in polar coordinates about their center; rectangles add
four corner terms.  Curves carry jet access in their trace parameter, so
geodesic curvature and arc-length reparametrization work against any metric
field, not just the flow's pullback metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .background import BackgroundGeometry, christoffels_at
from .diagnostics import (kinematics, pullback_metric_field,
                          pullback_metric_jets, pullback_scalar_curvature)
from .errors import (DegenerateMetric, DimensionError, MixedSignature,
                     NonRiemannianAlongCurve, QuadratureFailure)
from .flows import FlowSpec
from .jets import Jet, antiderivative_1d, compose, extract_partial, \
    seed_point, seed_variable

__all__ = [
    "Curve",
    "DiscRegion",
    "LevelRegion",
    "RectangleRegion",
    "adaptive_simpson",
    "circle",
    "ellipse",
    "segment",
    "region_boundary",
    "level_radius",
    "metric_speed",
    "geodesic_curvature",
    "total_turning",
    "exterior_angle",
    "arclength_reparam",
    "boundary_curvature",
    "euler_number",
]

DEFAULT_TOL = 1e-6
# the Hessian metric degenerates with the determinant invariant of the
# velocity gradient; refuse regions that sample below this floor
SIGNATURE_FLOOR = 1e-6


# -- regions and curves --------------------------------------------------------

@dataclass(frozen=True)
class DiscRegion:
    """Round disc in background coordinates, traced counterclockwise."""

    center: tuple
    radius: float


@dataclass(frozen=True)
class LevelRegion:
    """Region bounded by a stream-function level set, star-shaped about
    ``center``; ``rho0`` starts the radial Newton solve."""

    center: tuple
    value: float
    rho0: float = 1.0


@dataclass(frozen=True)
class RectangleRegion:
    """Axis-aligned rectangle with four corner terms."""

    x0: float
    y0: float
    x1: float
    y1: float


@dataclass(frozen=True)
class Curve:
    """Planar trace with jet access in its parameter.

    ``jets_fn(t, order)`` returns the coordinates as one-variable jets in
    the trace parameter.  ``corners`` lists parameter values of tangent
    discontinuities for piecewise traces.
    """

    jets_fn: object
    t0: float
    t1: float
    closed: bool = True
    corners: tuple = field(default=())

    def point(self, t):
        xj, yj = self.jets_fn(float(t), 0)
        return (float(xj.coeffs[0]), float(yj.coeffs[0]))

    def velocity(self, t):
        xj, yj = self.jets_fn(float(t), 1)
        return np.array([extract_partial(xj, (1,)),
                         extract_partial(yj, (1,))])


def circle(center, radius) -> Curve:
    cx, cy = float(center[0]), float(center[1])
    r = float(radius)

    def fn(t, order):
        tj = seed_variable(0, t, 1, order)
        return cx + r * jets.cos(tj), cy + r * jets.sin(tj)

    return Curve(fn, 0.0, 2.0 * math.pi)


def ellipse(center, semi_axes) -> Curve:
    cx, cy = float(center[0]), float(center[1])
    a, b = float(semi_axes[0]), float(semi_axes[1])

    def fn(t, order):
        tj = seed_variable(0, t, 1, order)
        return cx + a * jets.cos(tj), cy + b * jets.sin(tj)

    return Curve(fn, 0.0, 2.0 * math.pi)


def segment(a, b) -> Curve:
    ax, ay = float(a[0]), float(a[1])
    dx, dy = float(b[0]) - ax, float(b[1]) - ay

    def fn(t, order):
        tj = seed_variable(0, t, 1, order)
        return ax + dx * tj, ay + dy * tj

    return Curve(fn, 0.0, 1.0, closed=False)


# -- quadrature ---------------------------------------------------------------

def _simpson_rec(fn, a, b, fa, fm, fb, whole, tol, depth, force):
    m = 0.5 * (a + b)
    lm = fn(0.5 * (a + m))
    rm = fn(0.5 * (m + b))
    left = (m - a) / 6.0 * (fa + 4.0 * lm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * rm + fb)
    if force <= 0 and abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    if depth <= 0:
        raise QuadratureFailure(
            f"adaptive rule failed to converge on [{a}, {b}]")
    return (_simpson_rec(fn, a, m, fa, lm, fm, left, 0.5 * tol,
                         depth - 1, force - 1)
            + _simpson_rec(fn, m, b, fm, rm, fb, right, 0.5 * tol,
                           depth - 1, force - 1))


def adaptive_simpson(fn, a, b, tol=DEFAULT_TOL, max_depth=24, min_depth=0):
    """Adaptive Simpson quadrature with Richardson correction.

    ``min_depth`` forces that many bisection levels before the error test
    may accept, which guards against false convergence on integrands whose
    period divides the interval (all coarse nodes then sample symmetric
    values and the first error estimate is spuriously zero).
    """
    a, b = float(a), float(b)
    fa, fm, fb = fn(a), fn(0.5 * (a + b)), fn(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(fn, a, b, fa, fm, fb, whole, tol, max_depth,
                        min_depth)


# -- level-set boundary traces --------------------------------------------------

def _require_planar(spec: FlowSpec):
    if spec.dim != 2:
        raise DimensionError(
            f"region diagnostics need a planar flow, got dim={spec.dim}")


def _planar_spec(spec: FlowSpec) -> FlowSpec:
    """Planar view of a flow; reduced flows project onto their base plane.

    Only constant-warp products project faithfully: a varying warp feeds the
    base metric extra terms that a plain stream-function flow cannot carry.
    """
    if spec.dim == 2:
        return spec
    if (spec.kind == "reduced" and spec.base_geometry is not None
            and spec.base_geometry.dim == 2):
        for probe in ((0.3, -0.7), (1.1, 0.4), (-0.6, 1.3)):
            wj = spec.warp_fn(seed_point(list(probe), 1))
            grad = math.hypot(extract_partial(wj, (1, 0)),
                              extract_partial(wj, (0, 1)))
            if grad > 1e-12:
                raise DimensionError(
                    "region diagnostics only project constant-warp "
                    f"reduced flows; warp gradient {grad:.3e} at {probe}")
        return FlowSpec(spec.name + "-base", "stream2d", 2,
                        spec.base_geometry, spec.params, spec.t,
                        psi_fn=spec.psi_fn)
    raise DimensionError(
        f"region diagnostics need a planar flow, got dim={spec.dim}")


def _psi_expansion(spec: FlowSpec, point, order):
    cj = seed_point([float(point[0]), float(point[1])], order)
    return spec.psi_fn(cj, spec.params, spec.t)


def level_radius(spec: FlowSpec, region: LevelRegion, theta: float) -> float:
    """Radial distance of the level curve along the ray at angle theta."""
    spec = _planar_spec(spec)
    if spec.psi_fn is None:
        raise DimensionError("level regions need a stream function")
    c, s = math.cos(theta), math.sin(theta)
    rho = float(region.rho0)
    for _ in range(80):
        pt = (region.center[0] + rho * c, region.center[1] + rho * s)
        psi = _psi_expansion(spec, pt, 1)
        g = psi.value - region.value
        gp = psi.partial(0).value * c + psi.partial(1).value * s
        if gp == 0.0:
            break
        step = g / gp
        nxt = rho - step
        if nxt <= 0.0:
            nxt = 0.5 * rho
        if abs(nxt - rho) < 1e-14 * (1.0 + abs(rho)):
            return nxt
        rho = nxt
    raise ValueError(
        f"level-curve trace did not converge at theta={theta:.6f}")


def _zero_constant(jet: Jet) -> Jet:
    return jet - float(jet.coeffs[0])


def _polar_trace_jets(spec: FlowSpec, region, theta: float, order: int):
    tj = seed_variable(0, float(theta), 1, order)
    ct, st = jets.cos(tj), jets.sin(tj)
    cx, cy = region.center
    if isinstance(region, DiscRegion):
        rho = Jet.constant(float(region.radius), 1, order)
        return cx + rho * ct, cy + rho * st
    rho0 = level_radius(spec, region, theta)
    psi2 = _psi_expansion(spec,
                          (cx + rho0 * math.cos(theta),
                           cy + rho0 * math.sin(theta)), order + 1)
    px, py = psi2.partial(0), psi2.partial(1)
    rho = Jet.constant(rho0, 1, order)
    for _ in range(3):
        xj = cx + rho * ct
        yj = cy + rho * st
        dxj = _zero_constant(xj)
        dyj = _zero_constant(yj)
        g = compose(psi2, [dxj, dyj]) - region.value
        gp = compose(px, [dxj, dyj]) * ct + compose(py, [dxj, dyj]) * st
        corr = g / gp
        # the scalar root is already converged; keep the constant term pinned
        rho = rho - _zero_constant(corr)
    return cx + rho * ct, cy + rho * st


def region_boundary(spec: FlowSpec, region) -> Curve:
    """Counterclockwise polar trace of a disc or level region boundary."""
    if not isinstance(region, (DiscRegion, LevelRegion)):
        raise TypeError("only star-shaped regions trace to a single curve")
    spec = _planar_spec(spec)

    def fn(theta, order):
        return _polar_trace_jets(spec, region, theta, order)

    return Curve(fn, 0.0, 2.0 * math.pi)


# -- curve geometry against a metric field -------------------------------------

def _metric_matrix(geom: BackgroundGeometry, point):
    return geom.metric_values(list(point))


def metric_speed(curve: Curve, geom: BackgroundGeometry, t: float) -> float:
    """|gamma'(t)| in the metric; the curve must stay g-spacelike."""
    xj, yj = curve.jets_fn(float(t), 1)
    point = (float(xj.coeffs[0]), float(yj.coeffs[0]))
    d1 = np.array([extract_partial(xj, (1,)), extract_partial(yj, (1,))])
    gmat = _metric_matrix(geom, point)
    w2 = float(d1 @ gmat @ d1)
    if w2 <= 0.0:
        raise NonRiemannianAlongCurve(
            f"tangent norm squared {w2:.3e} at {point}")
    return math.sqrt(w2)


def _kappa_w(geom: BackgroundGeometry, point, d1, d2):
    gmat = _metric_matrix(geom, point)
    det = gmat[0, 0] * gmat[1, 1] - gmat[0, 1] * gmat[1, 0]
    if det <= 0.0 or gmat[0, 0] <= 0.0:
        raise DegenerateMetric(
            f"metric is not Riemannian at {tuple(point)}")
    w2 = float(d1 @ gmat @ d1)
    if w2 <= 0.0:
        raise NonRiemannianAlongCurve(
            f"tangent norm squared {w2:.3e} at {tuple(point)}")
    w = math.sqrt(w2)
    gam = christoffels_at(geom, list(point), order=0)
    acc = [d2[k] + sum(gam[i][j][k].value * d1[i] * d1[j]
                       for i in range(2) for j in range(2))
           for k in range(2)]
    kappa = math.sqrt(det) * (d1[0] * acc[1] - d1[1] * acc[0]) / w ** 3
    return kappa, w


def geodesic_curvature(curve: Curve, geom: BackgroundGeometry,
                       t: float) -> float:
    """Signed geodesic curvature of the trace at parameter ``t``.

    The speed-cubed normalization makes the value independent of the
    parametrization, so arc-length input is not required.
    """
    xj, yj = curve.jets_fn(float(t), 2)
    point = (float(xj.coeffs[0]), float(yj.coeffs[0]))
    d1 = np.array([extract_partial(xj, (1,)), extract_partial(yj, (1,))])
    d2 = np.array([extract_partial(xj, (2,)), extract_partial(yj, (2,))])
    kappa, _ = _kappa_w(geom, point, d1, d2)
    return kappa


def total_turning(curve: Curve, geom: BackgroundGeometry,
                  tol: float = DEFAULT_TOL, min_depth: int = 2) -> float:
    """oint kappa ds over the trace (the arclength weight is built in)."""

    def integrand(t):
        xj, yj = curve.jets_fn(float(t), 2)
        point = (float(xj.coeffs[0]), float(yj.coeffs[0]))
        d1 = np.array([extract_partial(xj, (1,)), extract_partial(yj, (1,))])
        d2 = np.array([extract_partial(xj, (2,)), extract_partial(yj, (2,))])
        kappa, w = _kappa_w(geom, point, d1, d2)
        return kappa * w

    return adaptive_simpson(integrand, curve.t0, curve.t1, tol,
                            min_depth=min_depth)


def exterior_angle(geom: BackgroundGeometry, point, u, v) -> float:
    """Turning angle between tangents ``u`` and ``v``, measured in the metric."""
    gmat = _metric_matrix(geom, point)
    det = gmat[0, 0] * gmat[1, 1] - gmat[0, 1] * gmat[1, 0]
    if det <= 0.0:
        raise DegenerateMetric(
            f"metric is not Riemannian at {tuple(point)}")
    cross = math.sqrt(det) * (u[0] * v[1] - u[1] * v[0])
    dot = float(np.asarray(u) @ gmat @ np.asarray(v))
    return math.atan2(cross, dot)


def boundary_curvature(spec: FlowSpec, region, theta: float, geom=None):
    """Geodesic curvature and g-speed of a region boundary at one angle."""
    spec = _planar_spec(spec)
    if geom is None:
        geom = pullback_metric_field(spec)
    curve = region_boundary(spec, region)
    xj, yj = curve.jets_fn(float(theta), 2)
    point = (float(xj.coeffs[0]), float(yj.coeffs[0]))
    d1 = np.array([extract_partial(xj, (1,)), extract_partial(yj, (1,))])
    d2 = np.array([extract_partial(xj, (2,)), extract_partial(yj, (2,))])
    return _kappa_w(geom, point, d1, d2)


# -- arclength reparametrization ------------------------------------------------

def _eval_series(jet: Jet, h: float) -> float:
    acc = 0.0
    for c in jet.coeffs[::-1]:
        acc = acc * h + c
    return acc


def _speed_jet(curve: Curve, geom: BackgroundGeometry, t: float, order: int):
    """Speed along the trace as a jet in the trace parameter."""
    xj, yj = curve.jets_fn(float(t), order + 1)
    point = [float(xj.coeffs[0]), float(yj.coeffs[0])]
    d1 = [xj.partial(0).truncate(order), yj.partial(0).truncate(order)]
    rows = geom.metric_at(point, order=order)
    dxj = _zero_constant(xj).truncate(order)
    dyj = _zero_constant(yj).truncate(order)
    m = [[compose(rows[i][j], [dxj, dyj]) for j in range(2)]
         for i in range(2)]
    w2 = sum(m[i][j] * d1[i] * d1[j] for i in range(2) for j in range(2))
    if w2.value <= 0.0:
        raise NonRiemannianAlongCurve(
            f"tangent norm squared {w2.value:.3e} at {tuple(point)}")
    return jets.sqrt(w2)


def arclength_reparam(curve: Curve, geom: BackgroundGeometry,
                      n_nodes: int = 128) -> Curve:
    """Reparametrize a trace by metric arclength.

    The returned curve's parameter runs over [0, length); its jets are the
    original jets composed with the local series inverse of the cumulative
    length, so the speed is exactly one wherever the metric admits jets.
    """
    ts = np.linspace(curve.t0, curve.t1, n_nodes + 1)
    cum = np.zeros(n_nodes + 1)

    def speed(t):
        return metric_speed(curve, geom, t)

    for i in range(n_nodes):
        cum[i + 1] = cum[i] + adaptive_simpson(speed, ts[i], ts[i + 1], 1e-13)
    length = float(cum[-1])

    def theta_of(s):
        if curve.closed:
            s = float(s) % length
        else:
            s = min(max(float(s), 0.0), length)
        i = int(np.searchsorted(cum, s, side="right") - 1)
        i = max(0, min(i, n_nodes - 1))
        t = ts[i]
        w_jet = _speed_jet(curve, geom, t, order=2)
        series = antiderivative_1d(w_jet, cum[i])
        h = 0.0
        for _ in range(4):
            h -= (_eval_series(series, h) - s) / _eval_series(w_jet, h)
        t += h
        for _ in range(30):
            resid = cum[i] + adaptive_simpson(speed, ts[i], t, 1e-13) - s
            if abs(resid) < 1e-12 * (1.0 + length):
                break
            t -= resid / speed(t)
        return t

    def fn(s, order):
        t = theta_of(s)
        xj, yj = curve.jets_fn(t, order)
        if order == 0:
            return xj, yj
        w_jet = _speed_jet(curve, geom, t, order=order)
        s_series = antiderivative_1d(w_jet, 0.0).truncate(order)
        ds = seed_variable(0, 0.0, 1, order)
        inv = ds * (1.0 / w_jet.value)
        for _ in range(4):
            inv = inv - (compose(s_series, [inv]) - ds) \
                / compose(w_jet.truncate(order), [inv])
        return compose(xj, [inv]), compose(yj, [inv])

    return Curve(fn, 0.0, length, closed=curve.closed, corners=curve.corners)


# -- signature scan -------------------------------------------------------------

def _scan_signature(spec, points):
    for pt in points:
        f = kinematics(spec, pt).f
        if f < SIGNATURE_FLOOR:
            raise MixedSignature(
                f"determinant invariant {f:.3e} at {tuple(pt)}; the Hessian "
                "metric is not Riemannian across the region")


def _region_samples(spec, region):
    if isinstance(region, RectangleRegion):
        xs = np.linspace(region.x0, region.x1, 5)
        ys = np.linspace(region.y0, region.y1, 5)
        return [(x, y) for x in xs for y in ys]
    pts = [tuple(region.center)]
    for k in range(12):
        theta = 2.0 * math.pi * k / 12.0
        if isinstance(region, DiscRegion):
            rho = region.radius
        else:
            rho = level_radius(spec, region, theta)
        for u in (0.25, 0.5, 0.75, 1.0):
            pts.append((region.center[0] + u * rho * math.cos(theta),
                        region.center[1] + u * rho * math.sin(theta)))
    return pts


# -- assembled invariant ----------------------------------------------------------

def _interior_density(spec, point):
    r_scalar, _ = pullback_scalar_curvature(spec, point)
    rows, _ = pullback_metric_jets(spec, point, order=0)
    gmat = np.array([[e.value for e in row] for row in rows])
    det = gmat[0, 0] * gmat[1, 1] - gmat[0, 1] * gmat[1, 0]
    return 0.5 * r_scalar * math.sqrt(det)


def _interior_polar(spec, region, tol):
    two_pi = 2.0 * math.pi
    cx, cy = region.center

    def outer(theta):
        if isinstance(region, DiscRegion):
            rho = region.radius
        else:
            rho = level_radius(spec, region, theta)
        ex, ey = math.cos(theta), math.sin(theta)

        def inner(u):
            pt = (cx + u * rho * ex, cy + u * rho * ey)
            return _interior_density(spec, pt) * u * rho * rho

        return adaptive_simpson(inner, 0.0, 1.0, tol / (4.0 * two_pi),
                                min_depth=2)

    return adaptive_simpson(outer, 0.0, two_pi, 0.5 * tol, min_depth=4)


def _interior_rectangle(spec, region, tol):
    width = region.x1 - region.x0

    def outer(x):
        def inner(y):
            return _interior_density(spec, (x, y))

        return adaptive_simpson(inner, region.y0, region.y1,
                                tol / (4.0 * max(width, 1.0)), min_depth=2)

    return adaptive_simpson(outer, region.x0, region.x1, 0.5 * tol,
                            min_depth=2)


def euler_number(spec: FlowSpec, region, tol: float = DEFAULT_TOL) -> dict:
    """Curvature-integral Euler number of a region, with its breakdown.

    Returns the area, boundary, and corner terms, their sum, and the
    resulting ``chi``; the boundary is traversed counterclockwise.
    """
    spec = _planar_spec(spec)
    _scan_signature(spec, _region_samples(spec, region))
    geom = pullback_metric_field(spec)
    if isinstance(region, RectangleRegion):
        corners = [(region.x0, region.y0), (region.x1, region.y0),
                   (region.x1, region.y1), (region.x0, region.y1)]
        boundary = 0.0
        for i in range(4):
            edge = segment(corners[i], corners[(i + 1) % 4])
            boundary += total_turning(edge, geom, tol / 8.0, min_depth=2)
        corner_sum = 0.0
        for i in range(4):
            prev = corners[i - 1]
            here = corners[i]
            nxt = corners[(i + 1) % 4]
            u = (here[0] - prev[0], here[1] - prev[1])
            v = (nxt[0] - here[0], nxt[1] - here[1])
            corner_sum += exterior_angle(geom, here, u, v)
        area = _interior_rectangle(spec, region, tol)
    elif isinstance(region, (DiscRegion, LevelRegion)):
        area = _interior_polar(spec, region, tol)
        boundary = total_turning(region_boundary(spec, region), geom,
                                 tol, min_depth=4)
        corner_sum = 0.0
    else:
        raise TypeError(f"unsupported region {type(region).__name__}")
    total = float(area + boundary + corner_sum)
    return {
        "area_term": float(area),
        "boundary_term": float(boundary),
        "corner_term": float(corner_sum),
        "total": total,
        "chi": total / (2.0 * math.pi),
    }
