"""Legendre duality for planar stream functions on a flat background.

The gradient map x |-> grad psi(x) sends a point to dual coordinates, and
the dual potential psi'(x') = <x', x> - psi(x) satisfies the reciprocal
Monge-Ampere equation det Hess psi' = 1 / det Hess psi.  The transform is
only single-valued on regions where the Hessian determinant keeps a fixed
sign; those regions are tracked with a ``sheet`` label (+1 or -1) and the
locus det Hess psi = 0 is a fold of the gradient map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FoldSingularity, OutsideSheetDomain
from .flows import FlowSpec
from .jets import seed_variable

__all__ = [
    "DualPoint",
    "to_dual",
    "from_dual",
    "dual_hessian",
    "dual_ma_residual",
    "round_trip_error",
]

# fold guard: |det H| below this multiple of the Hessian magnitude
FOLD_TOL = 1e-8

_GRID_RANGE = 3.0
_GRID_N = 21


@dataclass(frozen=True)
class DualPoint:
    """Image of a point under the gradient map of the stream function."""

    point: tuple
    value: float
    sheet: int
    source: tuple


def _psi_jet(spec: FlowSpec, point, order: int):
    if spec.kind != "stream2d" or spec.dim != 2:
        raise DimensionError(
            "Legendre duality needs a planar stream-function flow, got "
            f"kind={spec.kind!r} dim={spec.dim}")
    if not spec.geometry.flat:
        raise DimensionError(
            "Legendre duality is defined against a flat background")
    cj = [seed_variable(i, float(point[i]), 2, order) for i in range(2)]
    return spec.psi_fn(cj, spec.params, spec.t)


def _grad_hess(spec: FlowSpec, point):
    psi = _psi_jet(spec, point, 2)
    g = np.array([psi.partial(0).value, psi.partial(1).value])
    dx = psi.partial(0)
    dy = psi.partial(1)
    h = np.array([[dx.partial(0).value, dx.partial(1).value],
                  [dy.partial(0).value, dy.partial(1).value]])
    return psi.value, g, h


def to_dual(spec: FlowSpec, point) -> DualPoint:
    """Gradient-map image, dual potential value, and sheet label."""
    val, g, h = _grad_hess(spec, point)
    det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    scale = math.sqrt(float(np.sum(h * h)))
    if abs(det) <= FOLD_TOL * max(scale, 1.0):
        raise FoldSingularity(
            f"gradient map folds at {tuple(point)}: det Hess = {det:.3e}")
    dual_val = g[0] * point[0] + g[1] * point[1] - val
    return DualPoint(point=(float(g[0]), float(g[1])),
                     value=float(dual_val),
                     sheet=1 if det > 0 else -1,
                     source=(float(point[0]), float(point[1])))


def _newton_preimage(spec, target, start, tol):
    x = np.array(start, dtype=float)
    _, g, h = _grad_hess(spec, x)
    res = g - target
    for _ in range(60):
        nrm = float(np.hypot(res[0], res[1]))
        if nrm < tol:
            # one undamped polish step pushes the residual to machine floor
            try:
                x = x - np.linalg.solve(h, res)
                _, _, h = _grad_hess(spec, x)
            except np.linalg.LinAlgError:
                pass
            det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
            return x, det
        try:
            step = np.linalg.solve(h, res)
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        while t > 1e-4:
            xn = x - t * step
            _, gn, hn = _grad_hess(spec, xn)
            rn = gn - target
            if float(np.hypot(rn[0], rn[1])) < nrm:
                break
            t *= 0.5
        else:
            return None
        x, g, h, res = xn, gn, hn, rn
    return None


def from_dual(spec: FlowSpec, dual_point, sheet: int, seed=None,
              grid_range: float = _GRID_RANGE, grid_n: int = _GRID_N):
    """Invert the gradient map on the requested sheet.

    Runs a damped Newton iteration from ``seed`` when given, otherwise from
    grid starts ordered by initial residual.  A solution only counts when
    the Hessian determinant sign at the preimage matches ``sheet``.

    Periodic stream functions admit many preimages per sheet; the grid
    search returns the first match, so pass ``seed`` to pick a branch.
    """
    if sheet not in (-1, 1):
        raise ValueError(f"sheet must be +1 or -1, got {sheet}")
    target = np.array(dual_point, dtype=float)
    tol = 1e-12 * (1.0 + float(np.hypot(target[0], target[1])))
    if seed is not None:
        starts = [np.array(seed, dtype=float)]
    else:
        axis = np.linspace(-grid_range, grid_range, grid_n)
        pts = [np.array((u, w)) for u in axis for w in axis]
        scored = []
        for p in pts:
            try:
                _, g, _ = _grad_hess(spec, p)
            except Exception:
                continue
            scored.append((float(np.hypot(*(g - target))), p))
        scored.sort(key=lambda item: item[0])
        starts = [p for _, p in scored[:40]]
    found = []
    for start in starts:
        sol = _newton_preimage(spec, target, start, tol)
        if sol is None:
            continue
        x, det = sol
        if any(np.hypot(*(x - prev)) < 1e-9 for prev in found):
            continue
        found.append(x)
        if abs(det) <= FOLD_TOL:
            continue
        if (1 if det > 0 else -1) == sheet:
            return (float(x[0]), float(x[1]))
    raise OutsideSheetDomain(
        f"no preimage of {tuple(target)} with Hessian sign {sheet:+d}")


def dual_hessian(spec: FlowSpec, dual_point, sheet: int, step: float = 1e-3,
                 seed=None):
    """Hessian of the dual potential by differencing the inverse map.

    The gradient of the dual potential is the inverse of the gradient map,
    so its Hessian is the Jacobian of ``from_dual``; a five-point stencil
    gives fourth-order accuracy per column.
    """
    center = np.array(from_dual(spec, dual_point, sheet, seed=seed))
    cols = []
    for j in range(2):
        samples = []
        for k in (-2, -1, 1, 2):
            shifted = list(dual_point)
            shifted[j] += k * step
            samples.append(np.array(
                from_dual(spec, shifted, sheet, seed=center)))
        m2, m1, p1, p2 = samples
        cols.append((m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * step))
    mat = np.column_stack(cols)
    # Jacobian of a gradient map is symmetric; averaging halves FD noise
    return 0.5 * (mat + mat.T)


def _fd_hessian(fn, point, step):
    # Complex-step inner derivative has no subtractive cancellation, so the
    # outer real difference keeps full fourth-order accuracy.  Falls back to
    # nested real differences when the callable rejects complex arguments.
    def cs_grad(pt, j):
        q = [complex(pt[0]), complex(pt[1])]
        q[j] += 1e-100j
        return fn(q[0], q[1]).imag / 1e-100

    def fd_grad(pt, j):
        vals = []
        for k in (-2, -1, 1, 2):
            q = list(pt)
            q[j] += k * step
            vals.append(fn(q[0], q[1]))
        m2, m1, p1, p2 = vals
        return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * step)

    try:
        cs_grad(point, 0)
        grad = cs_grad
        h_outer = step
    except (TypeError, AttributeError):
        grad = fd_grad
        h_outer = max(step, 5e-3)

    h = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            vals = []
            for k in (-2, -1, 1, 2):
                q = list(point)
                q[i] += k * h_outer
                vals.append(grad(q, j))
            m2, m1, p1, p2 = vals
            h[i, j] = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h_outer)
    return 0.5 * (h + h.T)


def dual_ma_residual(spec: FlowSpec, point, dual_potential=None,
                     step: float = 5e-4) -> float:
    """|det Hess psi * det Hess psi' - 1| at a point and its dual image.

    With ``dual_potential`` (a callable of the two dual coordinates) the
    dual Hessian is differenced from that closed form; otherwise it comes
    from the Newton inverse of the gradient map.  Either way the dual side
    is computed independently of the primal Hessian.
    """
    d = to_dual(spec, point)
    _, _, h = _grad_hess(spec, point)
    f = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    if dual_potential is not None:
        hd = _fd_hessian(dual_potential, d.point, step)
    else:
        hd = dual_hessian(spec, d.point, d.sheet, step=step,
                          seed=d.source)
    det_d = hd[0, 0] * hd[1, 1] - hd[0, 1] * hd[1, 0]
    return abs(f * det_d - 1.0)


def round_trip_error(spec: FlowSpec, point, seed=None) -> float:
    """Distance between a point and the sheet-resolved preimage of its dual."""
    d = to_dual(spec, point)
    back = from_dual(spec, d.point, d.sheet, seed=seed)
    return float(np.hypot(back[0] - point[0], back[1] - point[1]))
