"""Warped-product reduction of three-dimensional flows with a fiber symmetry.

A reduced flow lives on a two-dimensional base (M2, g2bar) carrying a warp
function phi, a stream function psi and a swirl component v3, all functions of
the base coordinates alone; the ambient metric is g2bar + e^{2 phi} dx3 (x) dx3.
Everything here is evaluated in those adapted coordinates: quotient manifolds
are never materialized, and all differential operators are taken with respect
to the base metric.

The central scalar is the conformal factor fhat2 + hhat_plus, which plays the
role fhat plays for planar flows and equals the three-dimensional fhat at
matched points. It admits two evaluations: a pressure route (Laplacian of the
base pressure plus curvature and warp corrections) and a kinematic route (pure
velocity gradients on the graph q = v(x)); on steady solutions they coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jets as _jets
from .background import BackgroundGeometry, christoffels_at, curvature_at, const_like
from .diagnostics import DEFAULT_EPS_SING, MetricValue
from .errors import (DimensionError, MaflowError, OrderExceeded,
                     SingularStructure, VanishingLambda, VanishingVorticity)
from .flows import FlowSpec, eval_reduced_base, pressure_gradient_jets
from .jets import MAX_ORDER, Jet, matrix_det, matrix_inverse, restrict, seed_point

LAMBDA_FLOOR = 1e-12

_EPS2 = ((0.0, 1.0), (-1.0, 0.0))


# -- adapted-coordinate state ---------------------------------------------------


@dataclass
class _BaseJets:
    """Jets of every reduced-flow ingredient over the two base coordinates."""

    spec: FlowSpec
    base: BackgroundGeometry
    cj: list
    psi: Jet
    phi: Jet
    v3: Jet
    v_cov: list
    v_contra: list
    g: list
    ginv: list
    gamma: list


def _base_geometry(spec: FlowSpec) -> BackgroundGeometry:
    base = spec.base_geometry
    return base if base is not None else BackgroundGeometry.flat_space(2)


def _base_jets(spec: FlowSpec, point, seed_order: int) -> _BaseJets:
    rj = eval_reduced_base(spec, [point[0], point[1]], order=seed_order)
    base = _base_geometry(spec)
    cj = rj.coords
    if base.flat:
        g = [[const_like(cj[0], 1.0 if i == j else 0.0) for j in range(2)]
             for i in range(2)]
    else:
        g = base.metric_fn(cj)
    return _BaseJets(spec=spec, base=base, cj=cj, psi=rj.psi, phi=rj.warp,
                     v3=rj.v3, v_cov=rj.v_cov, v_contra=rj.v_contra,
                     g=g, ginv=matrix_inverse(g),
                     gamma=christoffels_at(base, cj))


def _grad(s: Jet):
    return [s.partial(0), s.partial(1)]


def _dot_up(ginv, a, b):
    """gbar^{ij} a_i b_j for one-jet-per-slot covector lists."""
    acc = None
    for i in range(2):
        for j in range(2):
            term = ginv[i][j] * a[i] * b[j]
            acc = term if acc is None else acc + term
    return acc


def _raise_index(ginv, a):
    return [ginv[i][0] * a[0] + ginv[i][1] * a[1] for i in range(2)]


def _cov_hessian(s: Jet, gamma):
    """nabla_i d_j s = s_{,ij} - Gamma_{ij}^k s_{,k} (base covariant Hessian)."""
    grad = _grad(s)
    out = [[None] * 2 for _ in range(2)]
    for i in range(2):
        for j in range(2):
            val = grad[i].partial(j)
            for k in range(2):
                val = val - gamma[i][j][k] * grad[k]
            out[i][j] = val
    return out


def _velocity_gradient(st: _BaseJets):
    """A[i][j] = nabla_j v_i over the base (covariant on both slots)."""
    a = [[None] * 2 for _ in range(2)]
    for i in range(2):
        for j in range(2):
            val = st.v_cov[i].partial(j)
            for k in range(2):
                val = val - st.gamma[j][i][k] * st.v_cov[k]
            a[i][j] = val
    return a


def _double_trace(a, ginv):
    """a_{ij} g^{jk} a_{kl} g^{li}; equals nabla_i v^j nabla_j v^i."""
    acc = None
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    term = a[i][j] * ginv[j][k] * a[k][l] * ginv[l][i]
                    acc = term if acc is None else acc + term
    return acc


# -- pressure data ----------------------------------------------------------------


def pressure_base_jets(spec: FlowSpec, point, order: int):
    """Covariant base-pressure gradient [p_1, p_2] as jets of the given order.

    Explicit pressure expressions are differentiated on the base directly.
    Otherwise the steady momentum balance is evaluated on the full warped
    geometry at (x1, x2, 0); the base pressure is fiber-independent, so
    restricting the resulting jets back to the base axes is exact.
    """
    if spec.pressure_fn is not None:
        cj = seed_point([point[0], point[1]], order + 1)
        grad = pressure_gradient_jets(spec, cj)
        return [grad[0].truncate(order), grad[1].truncate(order)]
    if order + 2 > MAX_ORDER:
        raise OrderExceeded(f"momentum-balance pressure jets cap at order "
                            f"{MAX_ORDER - 2}, got {order}")
    cj3 = seed_point([point[0], point[1], 0.0], order + 2)
    grad3 = pressure_gradient_jets(spec, cj3)
    return [restrict(grad3[0].truncate(order), (0, 1)),
            restrict(grad3[1].truncate(order), (0, 1))]


def _pressure_laplacian(st: _BaseJets, grad_p):
    """Delta_B p = gbar^{ij} (d_i p_j - Gamma_{ij}^k p_k)."""
    acc = None
    for i in range(2):
        for j in range(2):
            val = grad_p[j].partial(i)
            for k in range(2):
                val = val - st.gamma[i][j][k] * grad_p[k]
            term = st.ginv[i][j] * val
            acc = term if acc is None else acc + term
    return acc


# -- hhat and the conformal factor -------------------------------------------------


def _h_pm_jets(st: _BaseJets, grad_p):
    """(hhat_plus, hhat_minus) as jets; grad_p = None drops the pressure term.

    Dropping the term is only valid when the warp gradient vanishes at the
    point, which callers must check.
    """
    gphi = _grad(st.phi)
    gphi_up = _raise_index(st.ginv, gphi)
    hess_phi = _cov_hessian(st.phi, st.gamma)
    lap_phi = None
    for i in range(2):
        for j in range(2):
            term = st.ginv[i][j] * hess_phi[i][j]
            lap_phi = term if lap_phi is None else lap_phi + term
    hess_vv = None
    for i in range(2):
        for j in range(2):
            term = hess_phi[i][j] * st.v_contra[i] * st.v_contra[j]
            hess_vv = term if hess_vv is None else hess_vv + term
    vdphi = st.v_contra[0] * gphi[0] + st.v_contra[1] * gphi[1]
    phiphi_vv = vdphi * vdphi
    grad_sq = gphi_up[0] * gphi[0] + gphi_up[1] * gphi[1]
    q3sq = st.v3 * st.v3
    e2 = _jets.exp(st.phi * (-2.0))
    if grad_p is None:
        p_term = 0.0
    else:
        p_term = gphi_up[0] * grad_p[0] + gphi_up[1] * grad_p[1]
    h_plus = (p_term - (hess_vv + phiphi_vv)
              - e2 * (lap_phi + grad_sq) * q3sq) * 0.5
    h_minus = (p_term - (hess_vv - phiphi_vv)
               - e2 * (lap_phi - grad_sq) * q3sq) * 0.5
    return h_plus, h_minus


def h_plus_minus(spec: FlowSpec, point):
    """The warp correction pair (hhat_plus, hhat_minus) at a base point.

    Evaluated with q_i = v_i(x) and q3 = v3(x). The pressure term is fetched
    lazily: a flow without pressure data is still accepted wherever the warp
    gradient vanishes identically at the point, since the term then drops out.
    """
    st = _base_jets(spec, point, 3)
    gphi = _grad(st.phi)
    if gphi[0].value == 0.0 and gphi[1].value == 0.0:
        grad_p = None
    else:
        grad_p = pressure_base_jets(spec, point, 1)
    h_plus, h_minus = _h_pm_jets(st, grad_p)
    return h_plus.value, h_minus.value


def _kinematic_fhat(st: _BaseJets):
    """fhat2 + hhat_plus on the graph, from velocity gradients alone.

    -1/2 nabla_i v^j nabla_j v^i - 1/2 (v . grad phi)^2
    + e^{-2 phi} [ v3 (grad phi . grad v3) - |grad phi|^2 v3^2 ].
    """
    a = _velocity_gradient(st)
    tr = _double_trace(a, st.ginv)
    gphi = _grad(st.phi)
    gphi_up = _raise_index(st.ginv, gphi)
    gv3 = _grad(st.v3)
    vdphi = st.v_contra[0] * gphi[0] + st.v_contra[1] * gphi[1]
    grad_sq = gphi_up[0] * gphi[0] + gphi_up[1] * gphi[1]
    e2 = _jets.exp(st.phi * (-2.0))
    swirl = st.v3 * (gphi_up[0] * gv3[0] + gphi_up[1] * gv3[1]) \
        - grad_sq * st.v3 * st.v3
    return tr * (-0.5) - vdphi * vdphi * 0.5 + e2 * swirl


def reduced_fhat_jet(spec: FlowSpec, point, order=0, route=None) -> Jet:
    """Jet of the conformal factor fhat2 + hhat_plus over the base coordinates.

    route 'pressure' evaluates fhat2 = 1/2 (Delta_B p + Ric_ij v^i v^j) and
    adds hhat_plus; route 'kinematic' uses velocity gradients on the graph.
    By default the pressure route is used whenever the flow carries pressure
    data, falling back to the kinematic route otherwise.
    """
    if route is None:
        has_pressure = spec.pressure_fn is not None or spec.steady_euler
        route = "pressure" if has_pressure else "kinematic"
    st = _base_jets(spec, point, order + 2)
    if route == "kinematic":
        return _kinematic_fhat(st).truncate(order)
    if route != "pressure":
        raise ValueError(f"unknown fhat route {route!r}")
    grad_p = pressure_base_jets(spec, point, order + 1)
    lap_p = _pressure_laplacian(st, grad_p)
    fhat2 = lap_p * 0.5
    if not st.base.flat:
        ric = curvature_at(st.base, st.cj, order=order).ricci
        for i in range(2):
            for j in range(2):
                fhat2 = fhat2 + (ric[i][j] * st.v_contra[i]
                                 * st.v_contra[j]) * 0.5
    h_plus, _ = _h_pm_jets(st, grad_p)
    return (fhat2 + h_plus).truncate(order)


def reduced_fhat(spec: FlowSpec, point, route=None) -> float:
    return reduced_fhat_jet(spec, point, order=0, route=route).value


# -- constraint residuals -----------------------------------------------------------


def reduced_constraint_residuals(spec: FlowSpec, point):
    """Residuals of the reduced divergence and pressure equations.

    div_res:      nabla_i v^i + v^i d_i phi
    pressure_res: Delta_B p + nabla_i v^j nabla_j v^i + 1/2 |v|^2 Rbar
                  + gbar^{ij} d_i phi d_j p - v^i v^j nabla_i d_j phi
                  - e^{-2 phi} [ (Delta_B phi - |grad phi|^2) v3^2
                                 + 2 v3 gbar^{ij} d_i phi d_j v3 ]
    Both vanish on exact reduced solutions.
    """
    st = _base_jets(spec, point, 3)
    gphi = _grad(st.phi)
    gphi_up = _raise_index(st.ginv, gphi)
    div = None
    for i in range(2):
        val = st.v_contra[i].partial(i)
        for k in range(2):
            val = val + st.gamma[i][k][i] * st.v_contra[k]
        div = val if div is None else div + val
    vdphi = st.v_contra[0] * gphi[0] + st.v_contra[1] * gphi[1]
    div_res = (div + vdphi).value

    grad_p = pressure_base_jets(spec, point, 1)
    lap_p = _pressure_laplacian(st, grad_p)
    a = _velocity_gradient(st)
    tr = _double_trace(a, st.ginv)
    vsq = st.v_contra[0] * st.v_cov[0] + st.v_contra[1] * st.v_cov[1]
    rbar = 0.0 if st.base.flat \
        else curvature_at(st.base, st.cj, order=0).scalar.value
    lhs = lap_p.value + tr.value + 0.5 * vsq.value * rbar

    hess_phi = _cov_hessian(st.phi, st.gamma)
    hess_vv = sum(hess_phi[i][j].value * st.v_contra[i].value
                  * st.v_contra[j].value
                  for i in range(2) for j in range(2))
    lap_phi = sum(st.ginv[i][j].value * hess_phi[i][j].value
                  for i in range(2) for j in range(2))
    grad_sq = sum(gphi_up[i].value * gphi[i].value for i in range(2))
    gv3 = _grad(st.v3)
    phi_dv3 = sum(gphi_up[i].value * gv3[i].value for i in range(2))
    p_dphi = sum(gphi_up[i].value * grad_p[i].value for i in range(2))
    e2 = math.exp(-2.0 * st.phi.value)
    v3v = st.v3.value
    rhs = -p_dphi + hess_vv \
        + e2 * ((lap_phi - grad_sq) * v3v * v3v + 2.0 * v3v * phi_dv3)
    return div_res, lhs - rhs


# -- reduced metrics ------------------------------------------------------------------


def _g2_rows(spec: FlowSpec, point, order: int, form="T"):
    """Jets of the pulled-back reduced metric g2 over the base coordinates.

    form 'T' is the stream-function expansion e^{-2 phi} (Delta_B psi
    nabla_i d_j psi + T_ij) with T_ij collecting every warp coupling;
    form 'V2' keeps the conformal factor explicit. The two agree identically.
    """
    st = _base_jets(spec, point, order + 2)
    hess_psi = _cov_hessian(st.psi, st.gamma)
    lap_psi = None
    for i in range(2):
        for j in range(2):
            term = st.ginv[i][j] * hess_psi[i][j]
            lap_psi = term if lap_psi is None else lap_psi + term
    gpsi = _grad(st.psi)
    gphi = _grad(st.phi)
    gpsi_up = _raise_index(st.ginv, gpsi)
    gphi_up = _raise_index(st.ginv, gphi)
    e2 = _jets.exp(st.phi * (-2.0))
    psi_sq = gpsi_up[0] * gpsi[0] + gpsi_up[1] * gpsi[1]
    rows = [[None] * 2 for _ in range(2)]
    if form == "T":
        phi_dpsi = gphi_up[0] * gpsi[0] + gphi_up[1] * gpsi[1]
        phi_sq = gphi_up[0] * gphi[0] + gphi_up[1] * gphi[1]
        gv3 = _grad(st.v3)
        common = phi_dpsi * (phi_dpsi - lap_psi) - phi_sq * psi_sq
        for k in range(2):
            inner = gpsi_up[0] * hess_psi[k][0] + gpsi_up[1] * hess_psi[k][1]
            inner = inner + st.v3 * (gv3[k] - st.v3 * gphi[k])
            common = common + gphi_up[k] * inner
        for i in range(2):
            for j in range(2):
                val = lap_psi * hess_psi[i][j] + st.g[i][j] * common
                val = val + gphi[i] * gphi[j] * psi_sq
                for k in range(2):
                    val = val - gpsi_up[k] * (gphi[i] * hess_psi[j][k]
                                              + gphi[j] * hess_psi[i][k])
                rows[i][j] = (e2 * val).truncate(order)
        return rows
    if form != "V2":
        raise ValueError(f"unknown g2 form {form!r}")
    # the conformal factor must be the kinematic one for V2 to stay an identity
    fh = _kinematic_fhat(st)
    for i in range(2):
        for j in range(2):
            val = None
            for k in range(2):
                for l in range(2):
                    term = st.ginv[k][l] * hess_psi[l][i] * hess_psi[k][j]
                    val = term if val is None else val + term
            val = val + gphi[i] * gphi[j] * psi_sq
            for l in range(2):
                val = val - gpsi_up[l] * (hess_psi[l][i] * gphi[j]
                                          + hess_psi[l][j] * gphi[i])
            rows[i][j] = (fh * st.g[i][j] + e2 * val).truncate(order)
    return rows


def _signature_of(mat: np.ndarray, eps: float) -> str:
    scale = max(1.0, float(np.abs(mat).max()))
    eigs = np.linalg.eigvalsh(mat)
    if np.any(np.abs(eigs) <= eps * scale):
        return "degenerate"
    if np.all(eigs > 0):
        return "riemannian"
    return "kleinian"


def _rows_values(rows) -> np.ndarray:
    return np.array([[e.value for e in row] for row in rows])


def reduced_metrics(spec: FlowSpec, point, eps_sing=None):
    """The phase metric ghat2 and the pulled-back metric g2 at a base point.

    ghat2 is block diagonal, (fhat2+hhat_plus) gbar on the base block and
    gbar^{-1} on the fiber block. g2 is evaluated by both displayed forms and
    cross-checked; the deviation is recorded in the MetricValue context.
    """
    eps = DEFAULT_EPS_SING if eps_sing is None else eps_sing
    fh = reduced_fhat(spec, point)
    st = _base_jets(spec, point, 2)
    gv = _rows_values(st.g)
    if abs(fh) <= eps:
        raise SingularStructure(f"|fhat2 + hhat_plus| = {abs(fh):.3e} <= "
                                f"{eps:.3e} at {tuple(point)}")
    ghat = np.zeros((4, 4))
    ghat[:2, :2] = fh * gv
    ghat[2:, 2:] = np.linalg.inv(gv)
    ghat_value = MetricValue(matrix=ghat, signature=_signature_of(ghat, eps),
                             context="phase-reduced")
    g2t = _rows_values(_g2_rows(spec, point, 0, form="T"))
    g2v = _rows_values(_g2_rows(spec, point, 0, form="V2"))
    scale = max(1.0, float(np.abs(g2t).max()))
    dev = float(np.abs(g2t - g2v).max())
    if math.isfinite(dev) and dev > 1e-8 * scale:
        raise MaflowError(f"reduced metric forms disagree by {dev:.3e} "
                          f"at {tuple(point)}")
    g2_value = MetricValue(matrix=g2t, signature=_signature_of(g2t, eps),
                           context=f"pullback-reduced; alt-form-dev={dev:.2e}")
    return ghat_value, g2_value


def reduced_metric_field(spec: FlowSpec) -> BackgroundGeometry:
    """The pulled-back reduced metric as a background field (for curvature)."""

    def fn(cj):
        pt = [c.value for c in cj]
        return _g2_rows(spec, pt, cj[0].order, form="T")

    return BackgroundGeometry.from_matrix_function(
        2, fn, name=f"reduced-pullback[{spec.name}]")


# -- curvatures ------------------------------------------------------------------------


def reduced_curvatures(spec: FlowSpec, point, eps_sing=None):
    """(Rhat2, R2): phase and pullback scalar curvatures of the reduced flow.

    Rhat2 applies the flat-background phase curvature formula
    (|grad F|^2 - F Delta F) / F^3 to F = fhat2 + hhat_plus evaluated
    kinematically on the graph (for steady solutions this is the pressure
    quantity). R2 is the generic scalar curvature of the g2 field.
    """
    eps = DEFAULT_EPS_SING if eps_sing is None else eps_sing
    if not _base_geometry(spec).flat:
        raise DimensionError("the reduced phase curvature formula assumes a "
                             "flat base metric")
    fh = reduced_fhat_jet(spec, point, order=2, route="kinematic")
    f0 = fh.value
    if abs(f0) <= eps:
        raise SingularStructure(f"|fhat2 + hhat_plus| = {abs(f0):.3e} <= "
                                f"{eps:.3e} at {tuple(point)}")
    gf = _grad(fh)
    grad_sq = (gf[0] * gf[0] + gf[1] * gf[1]).value
    lap = gf[0].partial(0).value + gf[1].partial(1).value
    rhat2 = (grad_sq - f0 * lap) / f0 ** 3

    st = _base_jets(spec, point, 2)
    a = _velocity_gradient(st)
    sqrt_det = math.sqrt(matrix_det(st.g).value)
    zeta = (a[1][0].value - a[0][1].value) / sqrt_det
    if abs(zeta) <= eps:
        raise VanishingVorticity(f"|zeta| = {abs(zeta):.3e} <= {eps:.3e} "
                                 f"at {tuple(point)}")
    g2v = _rows_values(_g2_rows(spec, point, 0, form="T"))
    det = float(np.linalg.det(g2v))
    scale = max(1.0, float(np.abs(g2v).max()) ** 2)
    if abs(det) <= eps * scale:
        raise SingularStructure(f"det g2 = {det:.3e} is below threshold "
                                f"at {tuple(point)}")
    field = reduced_metric_field(spec)
    r2 = curvature_at(field, [point[0], point[1]], order=0).scalar.value
    return rhat2, r2


# -- traces ---------------------------------------------------------------------------


def reduced_traces(spec: FlowSpec, point):
    """(zeta3_trace, strain3_trace, f3_check) at a base point.

    The three-dimensional traces of the squared vorticity and rate-of-strain
    decompose over the base as

      zeta3 : zeta3 = zeta2 : zeta2 + 1/2 e^{-2 phi} (grad v3 . grad v3)
      S3 : S3       = S2 : S2 + e^{-2 phi} [ 1/2 (grad v3 . grad v3)
                      - 2 v3 (grad v3 . grad phi) + 2 v3^2 |grad phi|^2 ]
                      + (v . grad phi)^2

    (mixed components: zeta_{i3} = 1/2 d_i v3 while S_{i3} = 1/2 d_i v3
    - v3 d_i phi, and S_33 = e^{2 phi} (v . grad phi)). The check value is
    |1/2 (zeta3 - S3) - (fhat2 + hhat_plus)|, which vanishes identically.
    """
    st = _base_jets(spec, point, 2)
    a = _velocity_gradient(st)
    av = np.array([[a[i][j].value for j in range(2)] for i in range(2)])
    ginv = np.linalg.inv(_rows_values(st.g))
    zeta = 0.5 * (av.T - av)
    strain = 0.5 * (av.T + av)
    z2 = float(np.einsum("ij,jk,kl,li->", zeta, ginv, zeta.T, ginv))
    s2 = float(np.einsum("ij,jk,kl,li->", strain, ginv, strain, ginv))
    gv3 = np.array([g.value for g in _grad(st.v3)])
    gphi = np.array([g.value for g in _grad(st.phi)])
    vup = np.array([v.value for v in st.v_contra])
    v3v = st.v3.value
    e2 = math.exp(-2.0 * st.phi.value)
    vdphi = float(vup @ gphi)
    zeta3 = z2 + 0.5 * e2 * float(gv3 @ ginv @ gv3)
    strain3 = s2 + e2 * (0.5 * float(gv3 @ ginv @ gv3)
                         - 2.0 * v3v * float(gv3 @ ginv @ gphi)
                         + 2.0 * v3v * v3v * float(gphi @ ginv @ gphi)) \
        + vdphi * vdphi
    fh = reduced_fhat(spec, point)
    f3_check = abs(0.5 * (zeta3 - strain3) - fh)
    return zeta3, strain3, f3_check


# -- moment maps -----------------------------------------------------------------------


def moment_maps(spec: FlowSpec, point, lam=None):
    """(symplectic moment, two-plectic moment components) at a base point.

    The symplectic moment is lambda * q3 with q3 = v3(x); lambda defaults to
    e^{phi} and may be a number or a callable of the base point. The
    two-plectic moment is the one-form star(e^{phi} q_i dx^i), returned as its
    two covariant components; on the reduced graph it equals -d psi.
    """
    st = _base_jets(spec, point, 2)
    if lam is None:
        lam_val = math.exp(st.phi.value)
    elif callable(lam):
        lam_val = float(lam(point))
    else:
        lam_val = float(lam)
    if abs(lam_val) < LAMBDA_FLOOR:
        raise VanishingLambda(f"|lambda| = {abs(lam_val):.3e} < "
                              f"{LAMBDA_FLOOR:.0e} at {tuple(point)}")
    symplectic = lam_val * st.v3.value
    sqrt_det = math.sqrt(matrix_det(st.g).value)
    ginv = _rows_values(st.ginv)
    scaled = math.exp(st.phi.value) * np.array([v.value for v in st.v_cov])
    mu = np.zeros(2)
    for l in range(2):
        for j in range(2):
            if _EPS2[j][l] == 0.0:
                continue
            mu[l] += sqrt_det * _EPS2[j][l] * float(ginv[j] @ scaled)
    return symplectic, mu
