"""Warped-product reduction: h-hat terms, constraints, metrics, traces, moments."""

import math

import numpy as np
import pytest

from maflow import exterior, flows, jets, reduction
from maflow.background import BackgroundGeometry, const_like
from maflow.diagnostics import fhat_value, kinematic_jets
from maflow.errors import (DimensionError, MissingPressure, OrderExceeded,
                           SingularStructure, VanishingLambda,
                           VanishingVorticity)
from maflow.flows import FlowSpec
from oracles import fd_partial, fd_scalar_curvature

ABC = flows.catalog("abc")
HILL = flows.catalog("hill-interior")
HICKS = flows.catalog("hicks-interior")


def abc_points(n, seed):
    """Sample away from f = 0 lines and the zero-vorticity shear layer."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        x = rng.uniform(0.25, math.pi - 0.25)
        y = rng.uniform(-math.pi / 2 + 0.25, math.pi / 2 - 0.25)
        if abs(math.sin(x)) < 0.25 or abs(math.cos(y)) < 0.25:
            continue
        if abs(1.5 * math.cos(y) + math.sin(x)) < 0.25:
            continue
        pts.append((x, y))
    return pts


def hill_points(n, seed):
    """Interior points clear of 4r^2 = 3z^2 and the pullback degeneracy."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        r = rng.uniform(0.12, 0.9)
        z = rng.uniform(-0.85, 0.85)
        if r * r + z * z > 0.88:
            continue
        if abs(4 * r * r - 3 * z * z) < 0.08:
            continue
        if abs(100 * r ** 4 - 71 * r * r * z * z - 2 * z ** 4) < 0.05:
            continue
        pts.append((r, z))
    return pts


def hicks_points(n, seed):
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        r = rng.uniform(0.15, 0.8)
        z = rng.uniform(-0.6, 0.6)
        if r * r + z * z > 0.8:
            continue
        pts.append((r, z))
    return pts


def _flat_product(warp_fn=None):
    base = BackgroundGeometry.flat_space(2)
    wf = warp_fn if warp_fn is not None else (
        lambda cj: const_like(cj[0], 0.0))
    geom = BackgroundGeometry.warped_product(base, wf, name="flat-product")
    return base, wf, geom


def make_reduced(psi_fn, v3_fn=None, warp_fn=None, pressure_fn=None,
                 steady=False, cylindrical=False, name="custom-reduced"):
    if cylindrical:
        geom = BackgroundGeometry.cylindrical()
        base, wf = geom.base, geom.warp
    else:
        base, wf, geom = _flat_product(warp_fn)
    return FlowSpec(name, "reduced", 3, geom, {}, 0.0, psi_fn=psi_fn,
                    v3_fn=v3_fn, pressure_fn=pressure_fn, steady_euler=steady,
                    base_geometry=base, warp_fn=wf)


def hill_psi(cj, _p, _t):
    r, z = cj[0], cj[1]
    return 0.75 * r * r * (r * r + z * z - 1.0)


def hill_pressure(cj, _p, _t):
    r, z = cj[0], cj[1]
    return 1.125 * (r ** 4 - r * r - z ** 4 + 2.0 * z * z)


# ---------------------------------------------------------------- h plus/minus

def test_h_terms_vanish_without_warp():
    for pt in abc_points(5, seed=11):
        hp, hm = reduction.h_plus_minus(ABC, pt)
        assert hp == 0.0 and hm == 0.0


def test_hill_h_plus_matches_radial_momentum_balance():
    # the axisymmetric radial momentum balance gives d_r p = -(v . grad) v_r,
    # evaluated here by finite differences of the closed velocity field
    def vr(r, z):
        return -1.5 * r * z

    def vz(r, z):
        return 1.5 * (2.0 * r * r + z * z - 1.0)

    for pt in hill_points(8, seed=23):
        dpr = -(vr(*pt) * fd_partial(vr, pt, (1, 0))
                + vz(*pt) * fd_partial(vr, pt, (0, 1)))
        hp, _ = reduction.h_plus_minus(HILL, pt)
        assert hp == pytest.approx(dpr / (2.0 * pt[0]), abs=1e-7)
    hp, _ = reduction.h_plus_minus(HILL, (0.5, 0.0))
    assert hp == pytest.approx(-9.0 / 16.0, abs=1e-12)


def test_h_branch_difference_with_zero_swirl():
    # with v3 = 0 the two branches differ by -(v . grad phi)^2 alone
    for pt in hill_points(10, seed=31):
        hp, hm = reduction.h_plus_minus(HILL, pt)
        assert hp - hm == pytest.approx(-(1.5 * pt[1]) ** 2, abs=1e-10)


def test_explicit_pressure_agrees_with_momentum_balance():
    spec = make_reduced(hill_psi, pressure_fn=hill_pressure, cylindrical=True)
    for pt in hill_points(6, seed=37):
        got = reduction.h_plus_minus(spec, pt)
        want = reduction.h_plus_minus(HILL, pt)
        assert got == pytest.approx(want, abs=1e-12)


def test_warped_flow_without_pressure_data_is_refused():
    def psi(cj, _p, _t):
        return cj[0] * cj[0] * cj[1]

    spec = make_reduced(psi, cylindrical=True)
    with pytest.raises(MissingPressure):
        reduction.h_plus_minus(spec, (0.5, 0.2))


# ------------------------------------------------------------------ residuals

def test_abc_constraint_residuals_vanish():
    for pt in abc_points(20, seed=41):
        div_res, p_res = reduction.reduced_constraint_residuals(ABC, pt)
        assert abs(div_res) < 1e-10
        assert abs(p_res) < 1e-10


def test_hill_constraint_residuals_vanish():
    for pt in hill_points(20, seed=43):
        div_res, p_res = reduction.reduced_constraint_residuals(HILL, pt)
        assert abs(div_res) < 1e-9
        assert abs(p_res) < 1e-9


def test_swirl_perturbation_hits_only_the_pressure_residual():
    def swirl(cj, _p, _t):
        return cj[0] * cj[0] * cj[1]

    plain = make_reduced(hill_psi, pressure_fn=hill_pressure,
                         cylindrical=True)
    perturbed = make_reduced(hill_psi, v3_fn=swirl,
                             pressure_fn=hill_pressure, cylindrical=True)
    for pt in hill_points(5, seed=47):
        div0, p0 = reduction.reduced_constraint_residuals(plain, pt)
        div1, p1 = reduction.reduced_constraint_residuals(perturbed, pt)
        assert abs(p0) < 1e-10
        assert abs(p1) > 1e-3
        assert abs(div1 - div0) < 1e-14
        assert abs(div1) < 1e-12


def test_divergence_residual_vanishes_for_generic_stream_data():
    # the stream form makes the weighted divergence vanish identically,
    # whatever the warp; the pressure residual has no reason to vanish
    def psi(cj, _p, _t):
        return jets.sin(cj[0]) * jets.cos(cj[1]) + 0.3 * cj[0] * cj[0] * cj[1]

    def warp(cj):
        return 0.3 * jets.sin(cj[0]) * jets.cos(cj[1])

    def zero_p(cj, _p, _t):
        return const_like(cj[0], 0.0)

    spec = make_reduced(psi, warp_fn=warp, pressure_fn=zero_p)
    rng = np.random.default_rng(53)
    saw_nonzero = False
    for _ in range(10):
        pt = tuple(rng.uniform(-1.5, 1.5, size=2))
        div_res, p_res = reduction.reduced_constraint_residuals(spec, pt)
        assert abs(div_res) < 1e-12
        saw_nonzero = saw_nonzero or abs(p_res) > 1e-3
    assert saw_nonzero


# -------------------------------------------------------------------- metrics

def test_hill_metric_values_at_axis_point():
    assert reduction.reduced_fhat(HILL, (0.5, 0.0)) == pytest.approx(
        9.0 / 4.0, abs=1e-12)
    ghat, g2 = reduction.reduced_metrics(HILL, (0.5, 0.0))
    want = 2.25 * np.array([[5.0, 0.0], [0.0, 1.25]])
    assert np.allclose(g2.matrix, want, atol=1e-12)
    assert g2.signature == "riemannian"


def test_abc_metric_value_at_cell_centre():
    pt = (math.pi / 2, 0.0)
    _, g2 = reduction.reduced_metrics(ABC, pt)
    assert np.allclose(g2.matrix, 2.5 * np.diag([1.0, 1.5]), atol=1e-12)


def test_phase_metric_block_structure():
    for spec, pts in ((ABC, abc_points(5, seed=59)),
                      (HILL, hill_points(5, seed=61))):
        for pt in pts:
            fh = reduction.reduced_fhat(spec, pt)
            ghat, _ = reduction.reduced_metrics(spec, pt)
            m = ghat.matrix
            assert np.all(m[:2, 2:] == 0.0) and np.all(m[2:, :2] == 0.0)
            # flat base: conformal block fh * Id, momentum block Id
            assert np.allclose(m[:2, :2], fh * np.eye(2), atol=1e-12)
            assert np.allclose(m[2:, 2:], np.eye(2), atol=1e-12)
            assert ghat.signature == ("riemannian" if fh > 0 else "kleinian")


def test_strain_dominated_point_gives_kleinian_phase_metric():
    ghat, _ = reduction.reduced_metrics(HILL, (0.2, 0.5))
    assert reduction.reduced_fhat(HILL, (0.2, 0.5)) < 0
    assert ghat.signature == "kleinian"


def test_both_pullback_forms_agree():
    cases = ((ABC, abc_points(10, seed=67)), (HILL, hill_points(10, seed=71)),
             (HICKS, hicks_points(10, seed=73)))
    for spec, pts in cases:
        for pt in pts:
            rows_t = reduction._g2_rows(spec, pt, 0, form="T")
            rows_v = reduction._g2_rows(spec, pt, 0, form="V2")
            vt = np.array([[e.value for e in row] for row in rows_t])
            vv = np.array([[e.value for e in row] for row in rows_v])
            scale = max(1.0, np.abs(vt).max())
            assert np.abs(vt - vv).max() < 1e-10 * scale


def test_warp_free_pullback_has_no_correction_term():
    # with zero warp the correction tensor vanishes exactly and the
    # pullback rows are the bare laplacian times the stream hessian
    for pt in abc_points(10, seed=79):
        cj = jets.seed_point([pt[0], pt[1]], 2)
        psi = 1.5 * jets.cos(cj[1]) + jets.sin(cj[0])
        hess = [[psi.partial(i).partial(j) for j in range(2)]
                for i in range(2)]
        lap = hess[0][0] + hess[1][1]
        rows = reduction._g2_rows(ABC, pt, 0, form="T")
        for i in range(2):
            for j in range(2):
                assert rows[i][j].value == (lap * hess[i][j]).value


def test_singular_conformal_factor_is_refused():
    with pytest.raises(SingularStructure):
        reduction.reduced_metrics(HILL, (math.sqrt(0.12), 0.4))
    # eps override admits the same point
    ghat, _ = reduction.reduced_metrics(HILL, (math.sqrt(0.12), 0.4),
                                        eps_sing=1e-17)
    assert math.isfinite(ghat.matrix[0, 0])


# ----------------------------------------------------------------- curvatures

def abc_rhat2(pt):
    sx, cy = math.sin(pt[0]), math.cos(pt[1])
    return (sx * sx + cy * cy) / (1.5 * sx ** 3 * cy ** 3)


def abc_r2(pt):
    sx, cy = math.sin(pt[0]), math.cos(pt[1])
    num = sx * (sx * sx + 3 * cy * cy) + 1.5 * cy * (cy * cy + 3 * sx * sx)
    return num / (2 * sx * sx * cy * cy * (sx + 1.5 * cy) ** 3)


def hill_rhat2(pt):
    r, z = pt
    return 56 * (4 * r * r + 3 * z * z) / (9 * (4 * r * r - 3 * z * z) ** 3)


def hill_r2(pt):
    r, z = pt
    return (112 * (50 * r ** 4 + z ** 4)
            / (9 * (100 * r ** 4 - 71 * r * r * z * z - 2 * z ** 4) ** 2))


def test_curvature_values_at_reference_points():
    rhat, r2 = reduction.reduced_curvatures(ABC, (math.pi / 2, 0.0))
    assert rhat == pytest.approx(4.0 / 3.0, rel=1e-12)
    assert r2 == pytest.approx(0.32, rel=1e-12)
    rhat, r2 = reduction.reduced_curvatures(HILL, (0.5, 0.0))
    assert rhat == pytest.approx(56.0 / 9.0, rel=1e-12)
    assert r2 == pytest.approx(224.0 / 225.0, rel=1e-10)


def test_abc_curvatures_match_closed_forms():
    for pt in abc_points(25, seed=83):
        rhat, r2 = reduction.reduced_curvatures(ABC, pt)
        assert rhat == pytest.approx(abc_rhat2(pt), rel=1e-9)
        assert r2 == pytest.approx(abc_r2(pt), rel=1e-9)


def test_hill_curvatures_match_closed_forms():
    for pt in hill_points(25, seed=89):
        rhat, r2 = reduction.reduced_curvatures(HILL, pt)
        assert rhat == pytest.approx(hill_rhat2(pt), rel=1e-8)
        assert r2 == pytest.approx(hill_r2(pt), rel=1e-8)


def test_pullback_curvature_matches_finite_difference_oracle():
    cases = ((ABC, abc_points(4, seed=97)), (HILL, hill_points(4, seed=101)))
    for spec, pts in cases:
        def g2_matrix(pt):
            return reduction.reduced_metrics(spec, pt)[1].matrix

        for pt in pts:
            _, r2 = reduction.reduced_curvatures(spec, pt)
            want = fd_scalar_curvature(g2_matrix, pt, h1=2.5e-3)
            assert r2 == pytest.approx(want, rel=1e-6, abs=1e-8)


def test_vanishing_vorticity_is_detected():
    # on the shear layer the stream laplacian vanishes while f stays finite
    pt = (math.asin(-0.75), math.acos(0.5))
    with pytest.raises(VanishingVorticity):
        reduction.reduced_curvatures(ABC, pt)


def test_degenerate_pullback_metric_is_detected():
    r = 0.5
    z = r * math.sqrt((math.sqrt(5841.0) - 71.0) / 4.0)
    with pytest.raises(SingularStructure):
        reduction.reduced_curvatures(HILL, (r, z))


def test_conformal_singularity_is_detected_in_curvatures():
    with pytest.raises(SingularStructure):
        reduction.reduced_curvatures(HILL, (math.sqrt(0.12), 0.4))


def test_momentum_balance_pressure_jets_have_bounded_order():
    with pytest.raises(OrderExceeded):
        reduction.reduced_fhat_jet(HILL, (0.5, 0.2), order=2,
                                   route="pressure")


def test_curved_base_is_refused():
    def metric(cj):
        zero = cj[0] * 0.0
        g11 = 1.0 + 0.1 * cj[0] * cj[0]
        return [[zero + 1.0, zero], [zero, g11]]

    base = BackgroundGeometry.from_matrix_function(2, metric, name="bump")

    def warp(cj):
        return const_like(cj[0], 0.0)

    geom = BackgroundGeometry.warped_product(base, warp, name="bump-product")

    def psi(cj, _p, _t):
        return jets.sin(cj[0]) * jets.sin(cj[1])

    def zero_p(cj, _p, _t):
        return const_like(cj[0], 0.0)

    spec = FlowSpec("curved-base", "reduced", 3, geom, {}, 0.0, psi_fn=psi,
                    pressure_fn=zero_p, base_geometry=base, warp_fn=warp)
    with pytest.raises(DimensionError):
        reduction.reduced_curvatures(spec, (0.3, 0.4))


# --------------------------------------------------------------------- traces

def _traces_3d(spec, pt):
    data = kinematic_jets(spec, [pt[0], pt[1], 0.0], order=0)
    g = np.array([[e.value for e in row] for row in data["g"]])
    gi = np.linalg.inv(g)
    zm = np.array([[e.value for e in row] for row in data["zeta"]])
    sm = np.array([[e.value for e in row] for row in data["strain"]])
    zt = float(np.einsum("ij,ik,jl,kl->", zm, gi, gi, zm))
    st = float(np.einsum("ij,ik,jl,kl->", sm, gi, gi, sm))
    return zt, st


def test_reduced_traces_match_full_3d_kinematics():
    cases = ((HILL, hill_points(5, seed=103)),
             (HICKS, hicks_points(5, seed=107)))
    for spec, pts in cases:
        for pt in pts:
            zt3, st3 = _traces_3d(spec, pt)
            zt2, st2, _ = reduction.reduced_traces(spec, pt)
            assert zt2 == pytest.approx(zt3, abs=1e-9)
            assert st2 == pytest.approx(st3, abs=1e-9)


def test_hicks_trace_combination_reproduces_conformal_factor():
    for pt in hicks_points(10, seed=109):
        _, _, f3_check = reduction.reduced_traces(HICKS, pt)
        assert f3_check < 1e-8


def test_traces_reduce_to_planar_for_trivial_warp():
    def psi(cj, _p, _t):
        return jets.sin(cj[0]) * jets.sin(cj[1])

    def v3_const(cj, _p, _t):
        return const_like(cj[0], 2.0)

    lifted = make_reduced(psi, v3_fn=v3_const, name="planar-lift")
    planar = flows.from_stream_expression("sin(x)*sin(y)")
    for pt in ((0.4, 1.1), (2.0, -0.3), (-0.7, 0.6)):
        zt, st, _ = reduction.reduced_traces(lifted, pt)
        data = kinematic_jets(planar, pt, order=0)
        zm = np.array([[e.value for e in row] for row in data["zeta"]])
        sm = np.array([[e.value for e in row] for row in data["strain"]])
        assert zt == pytest.approx(float(np.einsum("ij,ij->", zm, zm)),
                                   abs=1e-12)
        assert st == pytest.approx(float(np.einsum("ij,ij->", sm, sm)),
                                   abs=1e-12)


def test_conformal_factor_agrees_between_3d_and_reduced():
    cases = ((ABC, abc_points(10, seed=113)),
             (HILL, hill_points(10, seed=127)),
             (HICKS, hicks_points(10, seed=131)))
    for spec, pts in cases:
        for pt in pts:
            full = fhat_value(spec, [pt[0], pt[1], 0.0])
            via_pressure = reduction.reduced_fhat(spec, pt, route="pressure")
            via_kinematics = reduction.reduced_fhat(spec, pt,
                                                    route="kinematic")
            assert abs(full - via_pressure) < 1e-9
            assert abs(full - via_kinematics) < 1e-9


# -------------------------------------------------------------------- moments

def test_symplectic_moment_without_warp_is_the_swirl():
    for pt in abc_points(5, seed=137):
        sym, _ = reduction.moment_maps(ABC, pt)
        assert sym == pytest.approx(1.5 * math.cos(pt[1]) + math.sin(pt[0]),
                                    abs=1e-12)


def test_symplectic_moment_accepts_scale_overrides():
    pt = (0.5, 0.3)
    sym_default, _ = reduction.moment_maps(HILL, pt)
    sym_doubled, _ = reduction.moment_maps(HILL, pt, lam=lambda p: 2.0)
    # hill carries no swirl, so both vanish; hicks discriminates
    assert sym_default == 0.0 and sym_doubled == 0.0
    s1, _ = reduction.moment_maps(HICKS, pt, lam=1.0)
    s2, _ = reduction.moment_maps(HICKS, pt, lam=2.0)
    assert s2 == pytest.approx(2.0 * s1, rel=1e-12)


def test_moment_form_matches_hodge_dual_of_scaled_velocity():
    for pt in hill_points(6, seed=139):
        st = reduction._base_jets(HILL, pt, 1)
        scale = math.exp(st.phi.value)
        alpha = exterior.one_form([scale * st.v_cov[0].value,
                                   scale * st.v_cov[1].value], 2)
        star = exterior.hodge_star(alpha, np.eye(2))
        _, mu = reduction.moment_maps(HILL, pt)
        assert mu[0] == pytest.approx(star.coeff((0,)), abs=1e-12)
        assert mu[1] == pytest.approx(star.coeff((1,)), abs=1e-12)


def test_hill_moment_form_components():
    for pt in hill_points(6, seed=149):
        r, z = pt
        qr = -1.5 * r * z
        qz = 1.5 * (2 * r * r + z * z - 1.0)
        _, mu = reduction.moment_maps(HILL, pt)
        assert mu[0] == pytest.approx(-r * qz, abs=1e-12)
        assert mu[1] == pytest.approx(r * qr, abs=1e-12)


def test_moment_level_set_residual_vanishes_on_the_graph():
    cases = ((ABC, abc_points(5, seed=151)), (HILL, hill_points(5, seed=157)),
             (HICKS, hicks_points(5, seed=163)))
    for spec, pts in cases:
        for pt in pts:
            rj = flows.eval_reduced_base(spec, list(pt), order=2)
            dpsi = np.array([rj.psi.partial(0).value,
                             rj.psi.partial(1).value])
            _, mu = reduction.moment_maps(spec, pt)
            assert np.abs(mu + dpsi).max() < 1e-10


def test_vanishing_scale_is_refused():
    with pytest.raises(VanishingLambda):
        reduction.moment_maps(ABC, (0.3, 0.4), lam=0.0)
