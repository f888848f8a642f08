"""Monge-Ampere structures on phase space.

Phase coordinates are ordered (x^1..x^m, q_1..q_m), indices 0..m-1 for x and
m..2m-1 for q. The canonical symplectic form is omega = dq_i ^ dx^i; the
covariant one-forms are Dq_i = dq_i - Gamma_{ji}^k q_k dx^j. The structure
forms are

  varpi = Dq_i ^ star(dx^i)
  alpha = (1/2) Dq_i ^ Dq_j ^ star(dx^i ^ dx^j) - fhat vol
  K     = -sqrt|fhat| varpi          (almost-Kaehler partner of the omega-J)
  K_ca  = +sqrt|fhat| Dq_i ^ dx^i    (partner of the varpi-J)

with star taken in the background metric on the x-block. The endomorphisms
are recovered from alpha/sqrt|fhat| = J -| omega (or -| varpi), where
(J -| s)(X, Y) := s(JX, Y); in three dimensions J comes from the Liouville
polyvector contraction instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jets as _jets
from .diagnostics import fhat_jet, kinematic_jets, phase_metric_jets
from .errors import DimensionError, SingularStructure
from .exterior import (FormValue, PolyVector, basis_form, basis_vector,
                       effective_decompose, hodge_star, interior,
                       numeric_exterior_derivative, pairing, pfaffian, reindex,
                       wedge)
from .flows import FlowSpec
from .jets import Jet, matrix_det, seed_variable

# sign of the polyvector-contraction endomorphism in three dimensions, fixed
# by compatibility with the Hermitian metric ghat(X,Y) = K_ca(X, JY)
J3_SIGN = 1.0
DEFAULT_EPS_SING = 1e-10


@dataclass
class MAPoint:
    spec: FlowSpec
    point: tuple
    q: tuple
    m: int
    fhat: float
    theta: FormValue
    omega: FormValue
    varpi: FormValue
    alpha: FormValue
    kahler: FormValue          # K
    kahler_alt: FormValue      # K_ca
    vol: FormValue             # background volume form on the x-block
    epsilon: PolyVector        # Liouville-dual polyvector
    ghat: np.ndarray
    j_varpi: np.ndarray        # varpi-compatible endomorphism (any m)
    j_omega: np.ndarray = None  # omega-compatible endomorphism (m = 2 only)


def _embed(form, m):
    return reindex(form, 2 * m, {i: i for i in range(form.dim)})


def _forms_at(spec: FlowSpec, point, q, order=0):
    """All structure forms with jet coefficients over the 2m phase variables."""
    m = spec.dim
    data = kinematic_jets(spec, point, order=order)
    q0 = list(q) if q is not None else [v.value for v in data["v_cov"]]
    if len(q0) != m:
        raise DimensionError(f"momentum must have {m} components")
    n2 = 2 * m
    qs = [seed_variable(m + i, q0[i], n2, order) for i in range(m)]
    g = [[e.truncate(order).extend(n2) for e in row] for row in data["g"]]
    gamma = [[[e.truncate(order).extend(n2) for e in row] for row in plane]
             for plane in data["gamma"]]
    fh = fhat_jet(spec, point, order=order, at_q=q0)

    # Dq_i = dq_i - Gamma_{ji}^k q_k dx^j
    nabla_q = []
    for i in range(m):
        comps = {(m + i,): Jet.constant(1.0, n2, order)}
        for j in range(m):
            acc = None
            for k in range(m):
                term = gamma[j][i][k] * qs[k]
                acc = term if acc is None else acc + term
            comps[(j,)] = -acc
        nabla_q.append(FormValue.from_terms(n2, comps))

    theta = FormValue.from_terms(n2, {(i,): qs[i] for i in range(m)})
    omega = FormValue(n2)
    for i in range(m):
        omega = omega + basis_form(n2, (i, m + i)).scale(-1.0)

    base_dx = [basis_form(m, (i,)) for i in range(m)]
    star_dx = [_embed(hodge_star(base_dx[i], g), m) for i in range(m)]
    varpi = FormValue(n2)
    for i in range(m):
        varpi = varpi + wedge(nabla_q[i], star_dx[i])

    cg = _jets.sqrt(matrix_det(g))
    vol = _embed(FormValue.from_terms(m, {tuple(range(m)): cg}), m)

    alpha = FormValue(n2)
    for i in range(m):
        for j in range(i + 1, m):
            star_ij = _embed(hodge_star(wedge(base_dx[i], base_dx[j]), g), m)
            alpha = alpha + wedge(wedge(nabla_q[i], nabla_q[j]), star_ij)
    alpha = alpha - vol * fh

    sqf = math.sqrt(abs(fh.value))
    kahler = varpi.scale(-sqf)
    omega_cov = FormValue(n2)
    for i in range(m):
        dx_i = basis_form(n2, (i,))
        omega_cov = omega_cov + wedge(nabla_q[i], dx_i)
    kahler_alt = omega_cov.scale(sqf)

    return {"theta": theta, "omega": omega, "varpi": varpi, "alpha": alpha,
            "kahler": kahler, "kahler_alt": kahler_alt, "vol": vol,
            "fhat": fh, "nabla_q": nabla_q, "data": data, "q0": q0}


def _values_form(form):
    return form.map_coefficients(lambda c: c.value if isinstance(c, Jet)
                                 else float(c))


def _two_form_matrix(form, n):
    mat = np.zeros((n, n))
    block = form.components.get(2, {})
    for (a, b), c in block.items():
        v = c.value if isinstance(c, Jet) else float(c)
        mat[a, b] = v
        mat[b, a] = -v
    return mat


def liouville_polyvector(omega, m):
    """Polyvector dual to omega^m / m! (unit pairing)."""
    n2 = 2 * m
    power = omega
    for _ in range(m - 1):
        power = wedge(power, omega)
    liouville = power.scale(1.0 / math.factorial(m))
    eps = basis_vector(n2, tuple(range(n2)))
    norm = pairing(eps, liouville)
    val = norm.value if isinstance(norm, Jet) else float(norm)
    return eps.scale(1.0 / val)


def _endo_from_contraction(alpha, epsilon, m, sqf):
    """J X = J3_SIGN/(2 sqrt|f|) eps -| (alpha ^ (X -| alpha)), m = 3."""
    n2 = 2 * m
    cols = []
    for a in range(n2):
        x = basis_vector(n2, (a,))
        rho = wedge(alpha, interior(x, alpha))
        vec = interior(epsilon, rho)
        col = np.zeros(n2)
        for b in range(n2):
            c = vec.coeff((b,))
            col[b] = c.value if isinstance(c, Jet) else float(c)
        cols.append(col * (J3_SIGN / (2.0 * sqf)))
    return np.column_stack(cols)


def endo_from_pair(target_mat, symplectic_mat):
    """Solve (J -| s) = t, i.e. J^T S = T, for the endomorphism J."""
    return np.linalg.solve(symplectic_mat.T, target_mat.T)


def build_structure(spec: FlowSpec, point, at_q=None, eps_sing=None) -> MAPoint:
    eps = DEFAULT_EPS_SING if eps_sing is None else eps_sing
    m = spec.dim
    n2 = 2 * m
    forms = _forms_at(spec, point, at_q, order=0)
    fh = forms["fhat"].value
    if abs(fh) <= eps:
        raise SingularStructure(f"|fhat| = {abs(fh):.3e} <= {eps:.3e} at "
                                f"{tuple(point)}")
    sqf = math.sqrt(abs(fh))
    out = {k: _values_form(forms[k]) for k in
           ("theta", "omega", "varpi", "alpha", "kahler", "kahler_alt", "vol")}
    epsilon = liouville_polyvector(out["omega"], m)

    target = _two_form_matrix(out["alpha"], n2) / sqf if m == 2 else None
    j_omega = None
    if m == 2:
        omega_mat = _two_form_matrix(out["omega"], n2)
        varpi_mat = _two_form_matrix(out["varpi"], n2)
        j_omega = endo_from_pair(target, omega_mat)
        j_varpi = endo_from_pair(target, varpi_mat)
    elif m == 3:
        j_varpi = _endo_from_contraction(out["alpha"], epsilon, m, sqf)
    else:
        raise DimensionError("structures are built for m = 2 and m = 3")

    blocks, _ = phase_metric_jets(spec, point, at_q=forms["q0"], order=0)
    ghat = np.array([[e.value for e in row] for row in blocks])
    return MAPoint(spec=spec, point=tuple(point), q=tuple(forms["q0"]), m=m,
                   fhat=fh, theta=out["theta"], omega=out["omega"],
                   varpi=out["varpi"], alpha=out["alpha"],
                   kahler=out["kahler"], kahler_alt=out["kahler_alt"],
                   vol=out["vol"], epsilon=epsilon, ghat=ghat,
                   j_varpi=j_varpi, j_omega=j_omega)


def j2_from_contraction(ma: MAPoint) -> np.ndarray:
    """The varpi-compatible endomorphism via the polyvector route (m = 2).

    J X = -(1/sqrt|f|) eps -| (varpi ^ (X -| alpha)); dual route to the
    linear solve in build_structure. The overall sign follows the same
    slot conventions that fix J3_SIGN.
    """
    if ma.m != 2:
        raise DimensionError("contraction rewrite of J applies to m = 2")
    sqf = math.sqrt(abs(ma.fhat))
    cols = []
    for a in range(4):
        x = basis_vector(4, (a,))
        rho = wedge(ma.varpi, interior(x, ma.alpha))
        vec = interior(ma.epsilon, rho)
        col = np.array([float(vec.coeff((b,))) for b in range(4)])
        cols.append(-col / sqf)
    return np.column_stack(cols)


def verify_structure(spec: FlowSpec, point, at_q=None, eps_sing=None) -> dict:
    """Residuals of the defining identities; all should vanish.

    Keys: alpha_omega (effectiveness), varpi_omega, d_alpha, d_varpi,
    d_theta_minus_omega, j_squared (J^2 + sgn(fhat) Id), hermitian_pair
    (ghat - K J for both compatible pairs), pfaffian (m = 2), liouville
    (eps -| omega^m/m! - 1).
    """
    ma = build_structure(spec, point, at_q=at_q, eps_sing=eps_sing)
    m, n2 = ma.m, 2 * ma.m
    res = {}
    res["alpha_omega"] = wedge(ma.alpha, ma.omega).sup_norm()
    res["varpi_omega"] = wedge(ma.varpi, ma.omega).sup_norm()
    if m == 2:
        # alpha ^ varpi vanishes in every dimension except three
        res["alpha_varpi"] = wedge(ma.alpha, ma.varpi).sup_norm()

    x0 = list(ma.point) + list(ma.q)

    def fld(key):
        def fn(cj):
            xq = [c.value for c in cj]
            return _forms_at(spec, xq[:m], xq[m:], order=cj[0].order)[key]
        return fn

    res["d_alpha"] = numeric_exterior_derivative(fld("alpha"), x0).sup_norm()
    res["d_varpi"] = numeric_exterior_derivative(fld("varpi"), x0).sup_norm()
    dtheta = numeric_exterior_derivative(fld("theta"), x0)
    res["d_theta_minus_omega"] = (dtheta - ma.omega).sup_norm()

    sgn = 1.0 if ma.fhat > 0 else -1.0
    res["j_squared"] = float(np.abs(ma.j_varpi @ ma.j_varpi
                                    + sgn * np.eye(n2)).max())
    kca = _two_form_matrix(ma.kahler_alt, n2)
    res["hermitian_pair"] = float(np.abs(kca @ ma.j_varpi - ma.ghat).max())
    if m == 2:
        res["j_squared_omega"] = float(np.abs(ma.j_omega @ ma.j_omega
                                              + sgn * np.eye(n2)).max())
        kmat = _two_form_matrix(ma.kahler, n2)
        res["hermitian_pair_omega"] = float(np.abs(kmat @ ma.j_omega
                                                   - ma.ghat).max())
        res["pfaffian"] = abs(pfaffian(ma.alpha, ma.omega) - ma.fhat)
    liouville = ma.omega
    for _ in range(m - 1):
        liouville = wedge(liouville, ma.omega)
    liouville = liouville.scale(1.0 / math.factorial(m))
    lv = pairing(ma.epsilon, liouville)
    res["liouville"] = abs(float(lv) - 1.0)
    return res


def pullback_forms(spec: FlowSpec, point) -> dict:
    """Pull back the structure forms along x -> (x, v(x)).

    dx^i maps to itself and dq_i to (d_j v_i) dx^j; coefficients are evaluated
    at q = v(x). Returns base forms plus derived scalars: the vorticity
    two-form coefficient, the divergence residual (from varpi), the pressure
    residual (from alpha), and in 3D the helicity density from theta ^ dtheta.
    """
    m = spec.dim
    data = kinematic_jets(spec, point, order=1)
    grad = [[data["v_cov"][i].partial(j).value for j in range(m)]
            for i in range(m)]

    def pull(form):
        out = FormValue(m)
        for g, idx, c in form.terms():
            cval = c.value if isinstance(c, Jet) else float(c)
            if abs(cval) == 0.0:
                continue
            # wedge of the pulled-back basis legs, in index order
            legs = []
            for a in idx:
                if a < m:
                    legs.append(basis_form(m, (a,)))
                else:
                    i = a - m
                    legs.append(FormValue.from_terms(
                        m, {(j,): grad[i][j] for j in range(m)}))
            acc = FormValue.from_terms(m, {(): cval})
            for leg in legs:
                acc = wedge(acc, leg)
            out = out + acc
        return out

    forms = _forms_at(spec, point, None, order=0)
    pulled = {k: pull(_values_form(forms[k]))
              for k in ("theta", "omega", "varpi", "alpha")}
    vol_coeff = data["sqrt_det"].value
    out = dict(pulled)
    out["vorticity_coefficient"] = pulled["omega"].coeff((0, 1)) \
        if m >= 2 else 0.0
    out["divergence_residual"] = pulled["varpi"].sup_norm()
    out["pressure_residual"] = pulled["alpha"].sup_norm()
    if m == 3:
        hel = wedge(pulled["theta"], pulled["omega"])  # theta ^ dtheta
        out["helicity_density"] = hel.coeff((0, 1, 2)) / vol_coeff
    return out


def construct_K(spec: FlowSpec, point, seed=None, at_q=None,
                eps_sing=None):
    """Two-step effective decomposition producing the (1,1) partner form.

    Starting from a seed two-form rho with {omega, J -| omega, rho} linearly
    independent, strip the omega component, then the (J -| omega) component;
    what remains is proportional to varpi. Returns (K, lam0, lam1). The
    default seed is varpi + omega/2 + (J -| omega)/4.
    """
    ma = build_structure(spec, point, at_q=at_q, eps_sing=eps_sing)
    if ma.m != 2:
        raise DimensionError("the decomposition construction runs on m = 2")
    j_omega_form = ma.alpha.scale(1.0 / math.sqrt(abs(ma.fhat)))
    if seed is None:
        seed = ma.varpi + ma.omega.scale(0.5) + j_omega_form.scale(0.25)
    rho0, lam0 = effective_decompose(seed, ma.omega)
    rho1, lam1 = effective_decompose(rho0, j_omega_form)
    return rho1, lam0, lam1
