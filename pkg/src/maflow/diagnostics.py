"""Pointwise diagnostics: kinematics, phase and pullback metrics, curvature.

Index conventions:
  A_ij = nabla_j v_i   (covariant velocity gradient; rows i, columns j)
  zeta_ij = (A_ji - A_ij)/2,  S_ij = (A_ji + A_ij)/2,  A = S - zeta
  f = (zeta_ij zeta^ij - S_ij S^ij)/2 = -(A_ij A^ji)/2

The phase metric on T*M in coordinates (x^1..x^m, q_1..q_m) is
  ghat = fhat gbar_ij dx^i dx^j + gbar^ij Dq_i Dq_j,
  Dq_i = dq_i - Gamma_{ji}^k q_k dx^j,
whose coordinate block matrix is assembled in phase_metric_jets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jets as _jets
from .background import christoffels_at, const_like, curvature_at
from .errors import (DegenerateHessian, DimensionError, SingularStructure,
                     VanishingVorticity)
from .flows import FlowSpec, eval_flow
from .jets import Jet, matrix_det, matrix_inverse, seed_variable

DEFAULT_EPS_SING = 1e-10

_LEVI3 = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1,
          (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}


@dataclass
class KinematicState:
    dim: int
    gradient: np.ndarray        # A_ij
    strain: np.ndarray          # S_ij
    vorticity: np.ndarray       # zeta_ij
    scalar_vorticity: float     # 2D: Delta_B psi; 3D: |vorticity vector|_g
    f: float


@dataclass
class MetricValue:
    matrix: np.ndarray
    signature: str              # riemannian | kleinian | degenerate
    context: str


@dataclass
class EigenData:
    values: tuple               # all eigenvalues
    e_plus: float
    e_minus: float
    e3: float = None            # 3D only
    d_r: float = None           # 2D discriminant sqrt(zeta^2 - 4 f)
    labeling: str = "ordered"   # ordered | axis-decoupled


def _values(rows):
    return np.array([[e.value if isinstance(e, Jet) else float(e) for e in row]
                     for row in rows])


def kinematic_jets(spec: FlowSpec, point, order=2):
    """Velocity-gradient data as jets of the requested order.

    Returns a dict with jets: A (nested), zeta, strain, f, ginv, g, sqrt_det,
    v_cov, v_contra, coords, gamma.
    """
    seed_order = order + 2 if spec.kind in ("stream2d", "reduced") else order + 1
    fj = eval_flow(spec, point, order=seed_order)
    n = spec.dim
    cj = fj.coords
    gamma = christoffels_at(spec.geometry, cj)
    g = spec.geometry.metric_fn(cj)
    ginv = matrix_inverse(g)
    v_cov = fj.v_cov
    a = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            val = v_cov[i].partial(j)
            for k in range(n):
                val = val - gamma[j][i][k].truncate(val.order) \
                    * v_cov[k].truncate(val.order)
            a[i][j] = val.truncate(min(val.order, order))
    zeta = [[(a[j][i] - a[i][j]) * 0.5 for j in range(n)] for i in range(n)]
    strain = [[(a[j][i] + a[i][j]) * 0.5 for j in range(n)] for i in range(n)]
    f = None
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    term = a[i][j] * ginv[j][k].truncate(order) \
                        * a[k][l] * ginv[l][i].truncate(order)
                    f = term if f is None else f + term
    f = f * (-0.5)
    det = matrix_det(g)
    return {"A": a, "zeta": zeta, "strain": strain, "f": f, "g": g, "ginv": ginv,
            "sqrt_det": _jets.sqrt(det), "v_cov": v_cov,
            "v_contra": fj.v_contra, "coords": cj, "gamma": gamma,
            "psi": fj.psi, "flow": fj}


def kinematics(spec: FlowSpec, point) -> KinematicState:
    data = kinematic_jets(spec, point, order=0)
    n = spec.dim
    a = _values(data["A"])
    zeta = _values(data["zeta"])
    strain = _values(data["strain"])
    sqrt_det = data["sqrt_det"].value
    if n == 2:
        scalar = (a[1][0] - a[0][1]) / sqrt_det
    else:
        vec = _vorticity_vector(zeta) / sqrt_det
        gval = _values(data["g"])
        scalar = math.sqrt(max(float(vec @ gval @ vec), 0.0))
    return KinematicState(dim=n, gradient=a, strain=strain, vorticity=zeta,
                          scalar_vorticity=scalar, f=data["f"].value)


def _vorticity_vector(zeta_matrix):
    """Symbol contraction eps_ijk zeta_jk; divide by sqrt(det g) to raise."""
    out = np.zeros(3)
    for (i, j, k), sign in _LEVI3.items():
        out[i] += sign * zeta_matrix[j][k]
    return out


def classify(spec: FlowSpec, point, eps=None) -> str:
    eps = DEFAULT_EPS_SING if eps is None else eps
    f = kinematics(spec, point).f
    if f > eps:
        return "elliptic"
    if f < -eps:
        return "hyperbolic"
    return "parabolic"


def helicity_density(spec: FlowSpec, point) -> float:
    """v_i zeta^i; defined for three-dimensional flows only."""
    if spec.dim != 3:
        raise DimensionError("helicity density requires a three-dimensional flow")
    data = kinematic_jets(spec, point, order=0)
    zeta = _values(data["zeta"])
    vec = _vorticity_vector(zeta) / data["sqrt_det"].value
    v = np.array([j.value for j in data["v_cov"]])
    return float(v @ vec)


# -- fhat ---------------------------------------------------------------------

def fhat_jet(spec: FlowSpec, point, order=2, at_q=None, pressure_laplacian=None):
    """fhat(x, q) as a jet over the 2m phase coordinates about (x, q0).

    The x-part is (1/2) Delta_B p; by the kinematic identity it equals
    f(x) - (1/2) Rbar^{ij} v_i v_j along L, which is what is used unless an
    explicit pressure Laplacian (jet-callable or constant) is supplied.
    """
    m = spec.dim
    data = kinematic_jets(spec, point, order=order)
    v0 = [v.value for v in data["v_cov"]]
    q0 = list(at_q) if at_q is not None else v0
    if len(q0) != m:
        raise DimensionError(f"momentum must have {m} components")
    qs = [seed_variable(m + i, q0[i], 2 * m, order) for i in range(m)]
    if pressure_laplacian is None:
        x_part = data["f"].extend(2 * m)
        ricci_needed = not spec.geometry.flat
    else:
        if callable(pressure_laplacian):
            lap = pressure_laplacian(data["coords"])
        else:
            lap = const_like(data["coords"][0], float(pressure_laplacian))
        x_part = (0.5 * lap.truncate(min(order, lap.order))).extend(2 * m)
        ricci_needed = not spec.geometry.flat
    if not ricci_needed:
        return x_part
    curv = curvature_at(spec.geometry, data["coords"], order=order)
    ginv = data["ginv"]
    ricci_up = [[None] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            acc = None
            for k in range(m):
                for l in range(m):
                    term = ginv[i][k].truncate(order) \
                        * ginv[j][l].truncate(order) \
                        * curv.ricci[k][l].truncate(order)
                    acc = term if acc is None else acc + term
            ricci_up[i][j] = acc.extend(2 * m)
    out = x_part
    for i in range(m):
        for j in range(m):
            qq = qs[i] * qs[j]
            if pressure_laplacian is None:
                vv = (data["v_cov"][i].truncate(order)
                      * data["v_cov"][j].truncate(order)).extend(2 * m)
                out = out + 0.5 * ricci_up[i][j] * (qq - vv)
            else:
                out = out + 0.5 * ricci_up[i][j] * qq
    return out


def fhat_value(spec: FlowSpec, point, at_q=None, pressure_laplacian=None) -> float:
    return fhat_jet(spec, point, order=0, at_q=at_q,
                    pressure_laplacian=pressure_laplacian).value


# -- phase metric -------------------------------------------------------------

def phase_metric_jets(spec: FlowSpec, point, at_q=None, order=2, fhat=None):
    """Coordinate-frame phase metric blocks as jets over (x, q)."""
    m = spec.dim
    data = kinematic_jets(spec, point, order=order)
    q0 = list(at_q) if at_q is not None else [v.value for v in data["v_cov"]]
    qs = [seed_variable(m + i, q0[i], 2 * m, order) for i in range(m)]
    if fhat is None:
        fh = fhat_jet(spec, point, order=order, at_q=q0)
    else:
        fh = Jet.constant(float(fhat), 2 * m, order)
    g = [[e.truncate(order).extend(2 * m) for e in row] for row in data["g"]]
    ginv = [[e.truncate(order).extend(2 * m) for e in row] for row in data["ginv"]]
    gamma = [[[e.truncate(order).extend(2 * m) for e in row] for row in plane]
             for plane in data["gamma"]]
    zero = Jet.constant(0.0, 2 * m, order)
    # C[i][j] = Gamma_{ji}^k q_k: coefficient of dx^j in Dq_i
    c = [[zero] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            acc = zero
            for k in range(m):
                acc = acc + gamma[j][i][k] * qs[k]
            c[i][j] = acc
    blocks = [[zero] * (2 * m) for _ in range(2 * m)]
    for i in range(m):
        for j in range(m):
            xx = fh * g[i][j]
            for k in range(m):
                for l in range(m):
                    xx = xx + c[k][i] * ginv[k][l] * c[l][j]
            blocks[i][j] = xx
            qq = ginv[i][j]
            blocks[m + i][m + j] = qq
            xq = zero
            for k in range(m):
                xq = xq - ginv[i][k] * c[k][j]
            blocks[m + i][j] = xq
            blocks[j][m + i] = xq
    return blocks, fh


def phase_metric(spec: FlowSpec, point, at_q=None, fhat=None,
                 eps_sing=None) -> MetricValue:
    eps = DEFAULT_EPS_SING if eps_sing is None else eps_sing
    blocks, fh = phase_metric_jets(spec, point, at_q=at_q, order=0, fhat=fhat)
    if abs(fh.value) <= eps:
        raise SingularStructure(f"|fhat| = {abs(fh.value):.3e} <= {eps:.3e} "
                                f"at {tuple(point)}")
    signature = "riemannian" if fh.value > 0 else "kleinian"
    return MetricValue(matrix=_values(blocks), signature=signature, context="phase")


def phase_scalar_curvature(spec: FlowSpec, point, at_q=None,
                           pressure_laplacian=None, eps_sing=None) -> float:
    """Scalar curvature of the phase metric, closed-form assembly.

    Rhat = Rbar/fhat - (1/(4 fhat^2)) Rbar_{ijk}^l Rbar^{ijkm} q_l q_m
           - (m-1) hat-Delta_B log|fhat| - gbar_ij d2_{q_i q_j} log|fhat|
           + ((m-1)(m-2)/(4 fhat)) gbar^{ij} D_i log|fhat| D_j log|fhat|
           + (m (m-3)/4) gbar_ij d_{q_i} log|fhat| d_{q_j} log|fhat|
    with D_i = d_{x^i} + Gamma_{ik}^l q_l d_{q_k} and the weighted Beltrami
    of the docstring below.
    """
    eps = DEFAULT_EPS_SING if eps_sing is None else eps_sing
    m = spec.dim
    order = 2
    data = kinematic_jets(spec, point, order=order)
    q0 = list(at_q) if at_q is not None else [v.value for v in data["v_cov"]]
    fh = fhat_jet(spec, point, order=order, at_q=q0,
                  pressure_laplacian=pressure_laplacian)
    f0 = fh.value
    if abs(f0) <= eps:
        raise SingularStructure(f"|fhat| = {abs(f0):.3e} <= {eps:.3e}")
    qs = [seed_variable(m + i, q0[i], 2 * m, order) for i in range(m)]
    g = [[e.truncate(order).extend(2 * m) for e in row] for row in data["g"]]
    ginv = [[e.truncate(order).extend(2 * m) for e in row] for row in data["ginv"]]
    gamma = [[[e.truncate(order).extend(2 * m) for e in row] for row in plane]
             for plane in data["gamma"]]
    curv = curvature_at(spec.geometry, data["coords"], order=0)

    sign = 1.0 if f0 > 0 else -1.0
    u = _jets.log(fh * sign)  # log|fhat|, order 2 over 2m variables

    def cmat(k, i):  # Gamma_{ik}^l q_l
        acc = None
        for l in range(m):
            term = gamma[i][k][l] * qs[l]
            acc = term if acc is None else acc + term
        return acc

    def d_op(jet, i):
        out = jet.partial(i)
        for k in range(m):
            out = out + cmat(k, i).truncate(out.order) * jet.partial(m + k)
        return out

    du = [d_op(u, i) for i in range(m)]

    w = _jets.exp(u * (m / 2.0))         # |fhat|^{m/2}
    cg = _jets.sqrt(matrix_det(g))       # sqrt det gbar
    fh_inv = 1.0 / fh

    # x-divergence part of the weighted Beltrami
    div_x = 0.0
    for i in range(m):
        vi = None
        for j in range(m):
            term = ginv[i][j].truncate(1) * du[j]
            vi = term if vi is None else vi + term
        vi = (cg.truncate(1) * w.truncate(1) * fh_inv.truncate(1)) * vi
        div_x = div_x + d_op(vi, i).value
    # q-divergence part
    div_q = 0.0
    for i in range(m):
        wi = None
        for j in range(m):
            term = g[i][j].truncate(1) * u.partial(m + j)
            wi = term if wi is None else wi + term
        wi = w.truncate(1) * wi
        div_q = div_q + wi.partial(m + i).value
    w0 = w.value
    lap_u = div_x / (cg.value * w0) + div_q / w0

    # Riemann-squared term (values)
    g0 = _values(data["g"])
    ginv0 = _values(data["ginv"])
    riem0 = np.zeros((m, m, m, m))
    for i in range(m):
        for j in range(m):
            for k in range(m):
                for l in range(m):
                    riem0[i, j, k, l] = curv.riemann[i][j][k][l].value
    riem_up = np.einsum("ia,jb,kc,abcl->ijkl", ginv0, ginv0, ginv0, riem0)
    qq_mat = np.einsum("ijkl,ijkm->lm", riem0, riem_up)
    q0v = np.array(q0)
    term_rr = -float(q0v @ qq_mat @ q0v) / (4.0 * f0 * f0)

    du0 = np.array([d.value for d in du])
    uq0 = np.array([u.partial(m + i).value for i in range(m)])
    uqq0 = np.array([[u.partial(m + i).partial(m + j).value for j in range(m)]
                     for i in range(m)])

    out = curv.scalar.value / f0
    out += term_rr
    out -= (m - 1) * lap_u
    out -= float(np.einsum("ij,ij->", g0, uqq0))
    out += (m - 1) * (m - 2) / (4.0 * f0) * float(du0 @ ginv0 @ du0)
    out += 0.25 * m * (m - 3) * float(uq0 @ g0 @ uq0)
    return out


# -- pullback metric ----------------------------------------------------------

def _hessian_jets(spec: FlowSpec, data, order):
    """psi_ij = nabla_i d_j psi as jets (2D stream-based flows)."""
    psi = data["psi"]
    gamma = data["gamma"]
    n = spec.dim
    h = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            val = psi.partial(i).partial(j)
            for k in range(n):
                val = val - gamma[i][j][k].truncate(val.order) \
                    * psi.partial(k).truncate(val.order)
            h[i][j] = val.truncate(min(val.order, order))
    return h


def _hessian_from_gradient(data, order):
    """Flat 2D velocity flows: psi_xj = A_2j, psi_yj = -A_1j."""
    a = data["A"]
    return [[a[1][0].truncate(order), a[1][1].truncate(order)],
            [-a[0][0].truncate(order), -a[0][1].truncate(order)]]


def scalar_vorticity_jet(spec: FlowSpec, data, order):
    """2D scalar vorticity (A_21 - A_12)/sqrt(det gbar) as a jet."""
    a = data["A"]
    return ((a[1][0] - a[0][1]) / data["sqrt_det"].truncate(a[0][0].order)) \
        .truncate(order)


def pullback_metric_jets(spec: FlowSpec, point, order=2):
    """Pullback metric entries as jets.

    2D: g_ij = zeta psi_ij; 3D: g_ij = A^k_i A_kj - (1/2) gbar_ij A_kl A^lk,
    equivalently A^T gbar^{-1} A + f gbar.
    """
    data = kinematic_jets(spec, point, order=order)
    n = spec.dim
    if n == 2:
        if data["psi"] is not None:
            hess = _hessian_jets(spec, data, order)
        else:
            if not spec.geometry.flat:
                raise DimensionError("2D velocity flows need a flat background "
                                     "for the pullback metric")
            hess = _hessian_from_gradient(data, order)
        zeta = scalar_vorticity_jet(spec, data, order)
        rows = [[zeta * hess[i][j] for j in range(2)] for i in range(2)]
        return rows, data
    a = data["A"]
    ginv = data["ginv"]
    g = data["g"]
    f = data["f"].truncate(order)
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = f * g[i][j].truncate(order)
            for k in range(n):
                for l in range(n):
                    acc = acc + a[k][i] * ginv[k][l].truncate(order) * a[l][j]
            rows[i][j] = acc
    return rows, data


def pullback_metric(spec: FlowSpec, point, eps_sing=None) -> MetricValue:
    eps = DEFAULT_EPS_SING if eps_sing is None else eps_sing
    rows, _ = pullback_metric_jets(spec, point, order=0)
    mat = _values(rows)
    scale = max(1.0, float(np.abs(mat).max()))
    eigs = np.linalg.eigvalsh(mat)
    if np.any(np.abs(eigs) <= eps * scale):
        signature = "degenerate"
    elif np.all(eigs > 0):
        signature = "riemannian"
    else:
        signature = "kleinian"
    return MetricValue(matrix=mat, signature=signature, context="pullback")


def hessian_metric(spec: FlowSpec, point, eps_sing=None) -> MetricValue:
    """The Hessian (Monge-Ampere) metric psi_ij itself, 2D flows."""
    if spec.dim != 2:
        raise DimensionError("the Hessian metric is a 2D construction")
    eps = DEFAULT_EPS_SING if eps_sing is None else eps_sing
    data = kinematic_jets(spec, point, order=0)
    if data["psi"] is not None:
        rows = _hessian_jets(spec, data, 0)
    else:
        rows = _hessian_from_gradient(data, 0)
    mat = _values(rows)
    det = float(np.linalg.det(mat))
    scale = max(1.0, float(np.abs(mat).max()) ** 2)
    if abs(det) <= eps * scale:
        signature = "degenerate"
    elif np.all(np.linalg.eigvalsh(mat) > 0) or np.all(np.linalg.eigvalsh(mat) < 0):
        signature = "riemannian"
    else:
        signature = "kleinian"
    return MetricValue(matrix=mat, signature=signature, context="hessian")


def pullback_metric_field(spec: FlowSpec):
    """The pullback metric as a background-geometry field (for curvature/GB)."""
    if spec.dim != 2:
        raise DimensionError("pullback metric fields are built for 2D flows")

    from .background import BackgroundGeometry

    def fn(cj):
        pt = [c.value for c in cj]
        rows, _ = pullback_metric_jets(spec, pt, order=cj[0].order)
        return rows

    return BackgroundGeometry.from_matrix_function(2, fn,
                                                   name=f"pullback[{spec.name}]")


def pullback_eigenvalues(metric, kin: KinematicState = None,
                         decouple_tol=1e-12) -> EigenData:
    """Closed-form eigenvalues of a pullback metric.

    2D: quadratic formula, with the vorticity discriminant D_R when kinematic
    data is supplied. 3D: trigonometric (Cardano) closed form; matrices with a
    decoupled third axis keep the block labels E+-, E3 = g_33.
    """
    mat = np.asarray(getattr(metric, "matrix", metric), dtype=float)
    n = mat.shape[0]
    if n == 2:
        tr = mat[0, 0] + mat[1, 1]
        det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
        disc = math.sqrt(max(tr * tr - 4 * det, 0.0))
        e_plus, e_minus = 0.5 * (tr + disc), 0.5 * (tr - disc)
        d_r = None
        if kin is not None:
            d_r = math.sqrt(max(kin.scalar_vorticity ** 2 - 4 * kin.f, 0.0))
        return EigenData(values=(e_plus, e_minus), e_plus=e_plus,
                         e_minus=e_minus, d_r=d_r)
    if n != 3:
        raise DimensionError("eigenvalues implemented for 2x2 and 3x3 metrics")
    scale = max(1.0, float(np.abs(mat).max()))
    if abs(mat[0, 2]) <= decouple_tol * scale and \
            abs(mat[1, 2]) <= decouple_tol * scale:
        block = pullback_eigenvalues(mat[:2, :2])
        return EigenData(values=(block.e_plus, block.e_minus, mat[2, 2]),
                         e_plus=block.e_plus, e_minus=block.e_minus,
                         e3=float(mat[2, 2]), labeling="axis-decoupled")
    ev = _sym3_eigenvalues(mat)
    return EigenData(values=ev, e_plus=ev[0], e_minus=ev[1], e3=ev[2])


def _sym3_eigenvalues(a):
    """Descending eigenvalues of a symmetric 3x3 matrix, trigonometric form."""
    p1 = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    if p1 == 0.0:
        return tuple(sorted((a[0, 0], a[1, 1], a[2, 2]), reverse=True))
    q = (a[0, 0] + a[1, 1] + a[2, 2]) / 3.0
    p2 = sum((a[i, i] - q) ** 2 for i in range(3)) + 2 * p1
    p = math.sqrt(p2 / 6.0)
    b = (a - q * np.eye(3)) / p
    r = float(np.linalg.det(b)) / 2.0
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    lam1 = q + 2 * p * math.cos(phi)
    lam3 = q + 2 * p * math.cos(phi + 2 * math.pi / 3.0)
    lam2 = 3 * q - lam1 - lam3
    return (lam1, lam2, lam3)


# -- pullback curvature -------------------------------------------------------

def _symmetrize3(t):
    """Full symmetrization of a rank-3 nested list of jets (mean of 6 perms)."""
    from itertools import permutations

    n = len(t)
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                acc = None
                for perm in permutations((i, j, k)):
                    val = t[perm[0]][perm[1]][perm[2]]
                    acc = val if acc is None else acc + val
                out[i][j][k] = acc * (1.0 / 6.0)
    return out


def pullback_scalar_curvature(spec: FlowSpec, point, eps_sing=None):
    """(R, Rtilde) for the 2D pullback metric g = zeta psi_ij.

    R = (1/zeta) { Rtilde
        - |det psi''|^{-1/2} d_i [ |det psi''|^{1/2} gtilde^{ij} d_j log|zeta| ] }
    with the Hessian-metric curvature Rtilde assembled from
    Upsilon_ijk = psi_ijk + (4/3) psi_l Rbar_{k(ij)}^l and background curvature
    corrections; everything is evaluated in jets (no finite differences).
    """
    if spec.dim != 2:
        raise DimensionError("pullback curvature scalars are 2D; use the "
                             "reduction module for swirl flows")
    eps = DEFAULT_EPS_SING if eps_sing is None else eps_sing
    n = 2
    order = 2
    data = kinematic_jets(spec, point, order=order)
    if data["psi"] is not None:
        hess = _hessian_jets(spec, data, order)
    else:
        if not spec.geometry.flat:
            raise DimensionError("2D velocity flows need a flat background")
        hess = _hessian_from_gradient(data, order)
    zeta = scalar_vorticity_jet(spec, data, order)
    if abs(zeta.value) <= eps:
        raise VanishingVorticity(f"|zeta| = {abs(zeta.value):.3e} <= {eps:.3e}")
    det_h = matrix_det(hess)
    scale = max(1.0, max(abs(e.value) for row in hess for e in row) ** 2)
    if abs(det_h.value) <= eps * scale:
        raise DegenerateHessian(f"|det psi''| = {abs(det_h.value):.3e} too small")
    hinv = matrix_inverse(hess)

    gamma = data["gamma"]
    psi = data["psi"]
    if psi is not None:
        grad_psi = [psi.partial(i).truncate(order) for i in range(n)]
    else:
        # flat velocity flow: psi_x = v_2, psi_y = -v_1
        grad_psi = [data["v_cov"][1].truncate(order),
                    (-data["v_cov"][0]).truncate(order)]

    # nabla_i psi_jk, then the fully symmetrized psi_ijk
    t3 = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                val = hess[j][k].partial(i)
                for l in range(n):
                    val = val - gamma[i][j][l].truncate(val.order) \
                        * hess[l][k].truncate(val.order)
                    val = val - gamma[i][k][l].truncate(val.order) \
                        * hess[j][l].truncate(val.order)
                t3[i][j][k] = val
    psi3 = _symmetrize3(t3)

    flat_bg = spec.geometry.flat
    if flat_bg:
        ups = psi3
    else:
        curv = curvature_at(spec.geometry, data["coords"], order=1)
        ups = [[[None] * n for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    val = psi3[i][j][k]
                    for l in range(n):
                        sym_r = (curv.riemann[k][i][j][l]
                                 + curv.riemann[k][j][i][l]) * 0.5
                        val = val + (4.0 / 3.0) * grad_psi[l].truncate(sym_r.order) \
                            * sym_r
                    ups[i][j][k] = val

    hinv0 = _values(hinv)
    ups0 = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                ups0[i, j, k] = ups[i][j][k].value
    quad = np.einsum("ij,kl,mn,ijm,kln->", hinv0, hinv0, hinv0, ups0, ups0) \
        - np.einsum("ij,kl,mn,ikm,jln->", hinv0, hinv0, hinv0, ups0, ups0)
    rtilde = -0.25 * float(quad)

    if not flat_bg:
        g0 = _values(data["g"])
        rbar0 = curv.scalar.value
        rtilde += 0.5 * float(np.einsum("ij,ij->", hinv0, g0)) * rbar0
        hess0 = _values(hess)
        riem0 = np.zeros((n, n, n, n))
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    for d in range(n):
                        riem0[a, b, c, d] = curv.riemann[a][b][c][d].value
        nriem = covariant_riemann_gradient(spec, data, curv)
        grad0 = np.array([g.value for g in grad_psi])
        extra = 0.0
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        w = hinv0[i, j] * hinv0[k, l]
                        sym_a = 0.5 * (riem0[j, k, l, :] + riem0[j, l, k, :])
                        sym_b = 0.5 * (riem0[l, i, k, :] + riem0[l, k, i, :])
                        extra += w * float(hess0[i, :] @ sym_a
                                           - hess0[j, :] @ sym_b)
                        nsym_a = 0.5 * (nriem[i, j, k, l, :]
                                        + nriem[i, j, l, k, :])
                        nsym_b = 0.5 * (nriem[j, l, i, k, :]
                                        + nriem[j, l, k, i, :])
                        extra += w * float(grad0 @ (nsym_a - nsym_b))
        rtilde += (2.0 / 3.0) * extra

    # conformal correction: divergence of gtilde-gradient of log|zeta|
    sgn = 1.0 if det_h.value > 0 else -1.0
    sqrt_abs_det = _jets.sqrt(det_h * sgn)
    sgn_z = 1.0 if zeta.value > 0 else -1.0
    logz = _jets.log(zeta * sgn_z)
    div = 0.0
    for i in range(n):
        fi = None
        for j in range(n):
            term = hinv[i][j].truncate(1) * logz.partial(j)
            fi = term if fi is None else fi + term
        fi = sqrt_abs_det.truncate(1) * fi
        div += fi.partial(i).value
    r_val = (rtilde - div / sqrt_abs_det.value) / zeta.value
    return r_val, rtilde


def covariant_riemann_gradient(spec, data, curv):
    """nabla_i Rbar_{jkl}^m as a value array (2D backgrounds)."""
    n = spec.dim
    gamma = data["gamma"]
    out = np.zeros((n, n, n, n, n))
    riem = curv.riemann
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    for mm in range(n):
                        val = riem[j][k][l][mm].partial(i)
                        for p in range(n):
                            val = val - gamma[i][j][p].truncate(val.order) \
                                * riem[p][k][l][mm].truncate(val.order)
                            val = val - gamma[i][k][p].truncate(val.order) \
                                * riem[j][p][l][mm].truncate(val.order)
                            val = val - gamma[i][l][p].truncate(val.order) \
                                * riem[j][k][p][mm].truncate(val.order)
                            val = val + gamma[i][p][mm].truncate(val.order) \
                                * riem[j][k][l][p].truncate(val.order)
                        out[i, j, k, l, mm] = val.value
    return out
