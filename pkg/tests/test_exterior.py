"""Exterior calculus: slot conventions, Hodge identities, derivative checks."""

import math
from itertools import combinations

import numpy as np
import pytest

from maflow import exterior as ext
from maflow import jets
from maflow.errors import DegenerateMetric, DegenerateReference, DimensionError
from maflow.exterior import (FormValue, PolyVector, basis_form, basis_vector,
                             effective_decompose, form_inner, hodge_star, interior,
                             numeric_exterior_derivative, one_form, pairing, pfaffian,
                             vector_from_components, wedge)

from oracles import evaluate_form, matrix_pfaffian_4x4


def rand_form(rng, dim, grade):
    out = FormValue(dim)
    for idx in combinations(range(dim), grade):
        out = out + FormValue.from_terms(dim, {idx: rng.normal()})
    return out


def rand_vector(rng, dim):
    return vector_from_components(rng.normal(size=dim))


def rand_metric(rng, dim):
    a = rng.normal(size=(dim, dim))
    return a @ a.T + dim * np.eye(dim)


def forms_close(a, b, tol=1e-12):
    return (a - b).sup_norm() <= tol


def test_wedge_graded_anticommutativity():
    rng = np.random.default_rng(0)
    for dim in (2, 3, 4, 5):
        for ka in range(1, dim):
            for kb in range(1, dim - ka + 1):
                a, b = rand_form(rng, dim, ka), rand_form(rng, dim, kb)
                lhs = wedge(a, b)
                rhs = wedge(b, a).scale((-1.0) ** (ka * kb))
                assert forms_close(lhs, rhs)


def test_wedge_associativity_and_bilinearity():
    rng = np.random.default_rng(1)
    dim = 5
    a, b, c = (rand_form(rng, dim, 1) for _ in range(3))
    assert forms_close(wedge(wedge(a, b), c), wedge(a, wedge(b, c)))
    assert forms_close(wedge(a + b, c), wedge(a, c) + wedge(b, c))


def test_interior_fills_leftmost_slot():
    rng = np.random.default_rng(2)
    dim = 4
    a = rand_form(rng, dim, 3)
    x, y, z = (rng.normal(size=dim) for _ in range(3))
    xa = interior(vector_from_components(x), a)
    # (X -| a)(Y, Z) == a(X, Y, Z)
    got = evaluate_form(xa, [y, z])
    want = evaluate_form(a, [x, y, z])
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_interior_iterates_first_factor_innermost():
    rng = np.random.default_rng(3)
    dim = 4
    a = rand_form(rng, dim, 3)
    x, y, z = (rng.normal(size=dim) for _ in range(3))
    xy = wedge(vector_from_components(x), vector_from_components(y))
    got = evaluate_form(interior(xy, a), [z])
    want = evaluate_form(a, [x, y, z])
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_interior_leibniz_rule():
    rng = np.random.default_rng(4)
    dim = 5
    for ka in (1, 2):
        a, b = rand_form(rng, dim, ka), rand_form(rng, dim, 2)
        x = rand_vector(rng, dim)
        lhs = interior(x, wedge(a, b))
        rhs = wedge(interior(x, a), b) + wedge(a, interior(x, b)).scale((-1.0) ** ka)
        assert forms_close(lhs, rhs)


def test_interior_adjunctions():
    rng = np.random.default_rng(5)
    dim = 4
    a = rand_form(rng, dim, 3)
    u, w = rand_vector(rng, dim), wedge(rand_vector(rng, dim), rand_vector(rng, dim))
    # <u ^ w, a> = <w, u -| a>
    assert pairing(wedge(u, w), a) == pytest.approx(
        pairing(w, interior(u, a)), rel=1e-12, abs=1e-12)
    # transposed regime: <v -| s, c> = <v, s ^ c>
    v = wedge(u, rand_vector(rng, dim))
    s = rand_form(rng, dim, 1)
    c = rand_form(rng, dim, 1)
    out = interior(v, s)
    assert isinstance(out, PolyVector)
    assert pairing(out, c) == pytest.approx(pairing(v, wedge(s, c)),
                                            rel=1e-12, abs=1e-12)


def test_basis_pairing_is_kronecker():
    assert pairing(basis_vector(4, (0, 2)), basis_form(4, (0, 2))) == 1.0
    assert pairing(basis_vector(4, (0, 2)), basis_form(4, (1, 3))) == 0.0
    assert evaluate_form(basis_form(3, (0, 1)),
                         [np.array([1, 0, 0.0]), np.array([0, 1, 0.0])]) == 1.0


def test_hodge_double_dual_sign():
    rng = np.random.default_rng(6)
    for dim in (2, 3, 4):
        g = rand_metric(rng, dim)
        for k in range(dim + 1):
            a = rand_form(rng, dim, k)
            twice = hodge_star(hodge_star(a, g), g)
            assert forms_close(twice, a.scale((-1.0) ** (k * (dim - k))), tol=1e-10)


def test_hodge_defining_relation_and_isometry():
    rng = np.random.default_rng(7)
    dim = 3
    g = rand_metric(rng, dim)
    vol_coeff = math.sqrt(np.linalg.det(g))
    for k in (0, 1, 2, 3):
        a, b = rand_form(rng, dim, k), rand_form(rng, dim, k)
        lhs = wedge(a, hodge_star(b, g)).coeff(tuple(range(dim)))
        want = form_inner(a, b, g) * vol_coeff
        assert lhs == pytest.approx(want, rel=1e-10, abs=1e-12)
        assert form_inner(hodge_star(a, g), hodge_star(b, g), g) == pytest.approx(
            form_inner(a, b, g), rel=1e-10, abs=1e-12)


def test_hodge_flat_2d_rotation():
    g = np.eye(2)
    assert forms_close(hodge_star(one_form([1.0, 0.0]), g), one_form([0.0, 1.0]))
    assert forms_close(hodge_star(one_form([0.0, 1.0]), g), one_form([-1.0, 0.0]))


def test_hodge_cylindrical_radial_one_form():
    # coordinates (r, z, theta), metric diag(1, 1, r^2), at r = 2:
    # star dr = r dz ^ dtheta, coefficient 2
    r = 2.0
    g = np.diag([1.0, 1.0, r * r])
    out = hodge_star(one_form([1.0, 0.0, 0.0]), g)
    assert out.coeff((1, 2)) == pytest.approx(r)
    assert forms_close(out - FormValue.from_terms(3, {(1, 2): r}), FormValue.zero(3))


def test_hodge_jet_coefficients():
    # jet-valued metric: entries as functions of (r, z, theta)
    rj, zj, tj = jets.seed_point((2.0, 0.0, 1.0), order=2)
    rows = [[1.0 + 0 * rj, 0.0 * rj, 0.0 * rj],
            [0.0 * rj, 1.0 + 0 * rj, 0.0 * rj],
            [0.0 * rj, 0.0 * rj, rj * rj]]
    a = FormValue.from_terms(3, {(0,): 1.0 + 0 * rj})
    out = hodge_star(a, rows)
    c = out.coeff((1, 2))
    assert c.value == pytest.approx(2.0)
    assert jets.extract_partial(c, (1, 0, 0)) == pytest.approx(1.0)


def test_hodge_degenerate_metric_raises():
    with pytest.raises(DegenerateMetric):
        hodge_star(one_form([1.0, 0.0]), np.zeros((2, 2)))


def test_pfaffian_matches_matrix_formula():
    rng = np.random.default_rng(8)
    omega = FormValue.from_terms(4, {(0, 1): 1.0, (2, 3): 1.0})
    for _ in range(10):
        m = rng.normal(size=(4, 4))
        anti = m - m.T
        a = FormValue(4)
        for i in range(4):
            for j in range(i + 1, 4):
                a = a + FormValue.from_terms(4, {(i, j): anti[i, j]})
        assert pfaffian(a, omega) == pytest.approx(matrix_pfaffian_4x4(anti),
                                                   rel=1e-11, abs=1e-12)


def test_pfaffian_degenerate_reference():
    degenerate = FormValue.from_terms(4, {(0, 1): 1.0})
    with pytest.raises(DegenerateReference):
        pfaffian(degenerate, degenerate)
    with pytest.raises(DimensionError):
        pfaffian(FormValue.zero(3), FormValue.zero(3))


def test_effective_decompose_recovers_multiple():
    omega = FormValue.from_terms(4, {(0, 2): -1.0, (1, 3): -1.0})
    eff = FormValue.from_terms(4, {(0, 2): 1.0, (1, 3): -1.0})  # eff ^ omega = 0
    assert wedge(eff, omega).sup_norm() == 0.0
    rho = eff + omega.scale(0.7)
    rho0, lam0 = effective_decompose(rho, omega)
    assert lam0 == pytest.approx(0.7)
    assert forms_close(rho0, eff)
    assert wedge(rho0, omega).sup_norm() < 1e-14


def test_liouville_normalization_dim4():
    # omega = dq_i ^ dx^i with x = (0,1), q = (2,3); omega^2/2! = -dx^{0123}
    omega = FormValue.from_terms(4, {(0, 2): -1.0, (1, 3): -1.0})
    half = wedge(omega, omega).scale(0.5)
    assert half.coeff((0, 1, 2, 3)) == pytest.approx(-1.0)
    eps = basis_vector(4, (0, 1, 2, 3)).scale(-1.0)
    assert pairing(eps, half) == pytest.approx(1.0)


def test_numeric_exterior_derivative_gradient_and_curl():
    def scalar_field(cj):
        x, y, z = cj
        return FormValue.from_terms(3, {(): x * y + jets.sin(z)})

    pt = (0.3, -1.2, 0.5)
    df = numeric_exterior_derivative(scalar_field, pt)
    assert df.coeff((0,)) == pytest.approx(pt[1])
    assert df.coeff((1,)) == pytest.approx(pt[0])
    assert df.coeff((2,)) == pytest.approx(math.cos(pt[2]))

    def one_form_field(cj):
        x, y, z = cj
        return ext.one_form([y * z, -x * x, x + y * z], dim=3)

    da = numeric_exterior_derivative(one_form_field, pt)
    x, y, z = pt
    # d(a_j dx^j) = (d_i a_j) dx^i ^ dx^j
    assert da.coeff((0, 1)) == pytest.approx(-2 * x - z)
    assert da.coeff((0, 2)) == pytest.approx(1 - y)
    assert da.coeff((1, 2)) == pytest.approx(z)


def test_numeric_exterior_derivative_is_nilpotent():
    def field(cj):
        x, y, z = cj
        return ext.one_form([jets.extract_partial, 0, 0], dim=3) if False else \
            ext.one_form([x * y * z, x * x * y, jets.exp(x) * z], dim=3)

    # d(df_component-wise 2-form) has zero 3-form part only if input was exact;
    # instead check d(d(scalar)) = 0 via a jet-coefficient gradient field
    def grad_field(cj):
        x, y, z = cj
        f = x * y * z + jets.sin(x) * y
        return ext.one_form([f.partial(0), f.partial(1), f.partial(2)], dim=3)

    dd = numeric_exterior_derivative(grad_field, (0.4, 0.8, -0.3), order=2)
    assert dd.sup_norm() < 1e-12


def test_reindex_embeds_with_signs():
    a = FormValue.from_terms(2, {(0, 1): 2.0})
    lifted = ext.reindex(a, 4, {0: 2, 1: 0})  # dx0^dx1 -> dx2^dx0 = -dx0^dx2
    assert lifted.coeff((0, 2)) == pytest.approx(-2.0)
