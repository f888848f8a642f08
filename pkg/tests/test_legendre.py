"""Gradient-map duality for planar stream functions."""

import math

import numpy as np
import pytest

from maflow.errors import DimensionError, FoldSingularity, OutsideSheetDomain
from maflow.flows import catalog, from_stream_expression
from maflow.legendre import (dual_hessian, dual_ma_residual, from_dual,
                             round_trip_error, to_dual)


def test_quadratic_spot_values():
    spec = from_stream_expression("x^2 + 1.5*y^2")
    d = to_dual(spec, (1.0, 1.0))
    assert d.point == pytest.approx((2.0, 3.0), abs=1e-14)
    assert d.value == pytest.approx(2.5, abs=1e-14)
    assert d.sheet == 1
    back = from_dual(spec, d.point, d.sheet)
    assert back == pytest.approx((1.0, 1.0), abs=1e-12)


# closed dual potential for psi = -x^2 + 3ty + y^3 at t = -1:
# x' = -2x, y' = 3y^2 - 3, psi' = -x'^2/4 +/- (2/(3*sqrt(3)))(y' + 3)^(3/2)
_C = 2.0 / (3.0 * math.sqrt(3.0))


def _dual_upper(xp, yp):
    return -xp * xp / 4.0 + _C * (yp + 3.0) ** 1.5


def _dual_lower(xp, yp):
    return -xp * xp / 4.0 - _C * (yp + 3.0) ** 1.5


def test_cubic_dual_closed_form():
    spec = catalog("moffatt", t=-1.0)
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = rng.uniform(-1.2, 1.2)
        y = rng.uniform(0.2, 1.2)
        for src, pot, sheet in [((x, y), _dual_upper, -1),
                                ((x, -y), _dual_lower, 1)]:
            d = to_dual(spec, src)
            assert d.sheet == sheet
            assert d.point[0] == pytest.approx(-2.0 * src[0], abs=1e-13)
            assert d.point[1] == pytest.approx(3.0 * src[1] ** 2 - 3.0,
                                               abs=1e-13)
            assert d.value == pytest.approx(pot(*d.point), rel=1e-12,
                                            abs=1e-12)
            assert dual_ma_residual(spec, src, dual_potential=pot) < 1e-9


def test_dual_ma_residual_numeric_route():
    spec = catalog("taylor-green")
    for pt in [(0.3, 0.4), (0.2, 0.1), (-0.4, 0.35)]:
        assert dual_ma_residual(spec, pt) < 1e-8
    cubic = catalog("moffatt", t=-1.0)
    assert dual_ma_residual(cubic, (0.3, 0.8)) < 1e-8
    assert dual_ma_residual(cubic, (0.3, -0.8)) < 1e-8


def test_round_trip_through_grid_search():
    cubic = catalog("moffatt", t=-1.0)
    rng = np.random.default_rng(11)
    for _ in range(15):
        x = rng.uniform(-1.2, 1.2)
        y = rng.uniform(0.15, 1.2) * rng.choice([-1.0, 1.0])
        assert round_trip_error(cubic, (x, y)) < 1e-9
    # periodic stream function: preimages repeat, so anchor the branch
    tgv = catalog("taylor-green")
    for _ in range(15):
        pt = rng.uniform(0.1, 0.5, size=2)
        assert round_trip_error(tgv, tuple(pt), seed=(0.3, 0.3)) < 1e-9


def test_dual_hessian_is_inverse_primal_hessian():
    spec = from_stream_expression("x^2 + 1.5*y^2")
    hd = dual_hessian(spec, (2.0, 3.0), 1)
    assert np.allclose(hd, np.diag([0.5, 1.0 / 3.0]), atol=1e-9)
    assert abs(hd[0, 1] - hd[1, 0]) < 1e-9


def test_fold_and_domain_guards():
    spec = catalog("moffatt", t=-1.0)
    with pytest.raises(FoldSingularity):
        to_dual(spec, (0.4, 0.0))
    # y' = 3y^2 - 3 never drops below -3
    with pytest.raises(OutsideSheetDomain):
        from_dual(spec, (0.5, -4.0), 1)
    with pytest.raises(ValueError):
        from_dual(spec, (0.5, 0.0), 0)


def test_rejects_non_planar_and_curved_flows():
    with pytest.raises(DimensionError):
        to_dual(catalog("burgers", params={"gamma": 1.0}), (0.1, 0.2, 0.3))
    with pytest.raises(DimensionError):
        to_dual(catalog("hill-interior"), (0.5, 0.2, 0.0))
