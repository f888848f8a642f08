"""Truncated multivariate Taylor arithmetic (jets).

A Jet stores the Taylor coefficients of a scalar function about a point, up to
a fixed truncation order, over a fixed number of variables. Coefficients are
Taylor-normalized: the stored entry for multi-index k is (d^k f) / k!, so
polynomial arithmetic on coefficients mirrors arithmetic on functions exactly.

Dimensions 1..6 and orders 0..4 are supported. Terms are enumerated in graded
lexicographic order; because every degree-<=N block is a prefix of the
degree-<=(N+1) enumeration, truncation is a slice.

All operations are pure: jets are never mutated in place.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DegenerateMetric, DivisionBySingularJet, DomainError, OrderExceeded

MAX_DIM = 6
MAX_ORDER = 4

_EPS_DIV = 1e-300


@lru_cache(maxsize=None)
def _terms(dim: int, order: int):
    """All multi-indices with |k| <= order, graded lexicographic."""
    out = []
    for total in range(order + 1):
        block = []

        def fill(prefix, remaining, slots):
            if slots == 1:
                block.append(prefix + (remaining,))
                return
            for first in range(remaining + 1):
                fill(prefix + (first,), remaining - first, slots - 1)

        fill((), total, dim)
        block.sort()
        out.extend(block)
    return tuple(out)


@lru_cache(maxsize=None)
def _positions(dim: int, order: int):
    return {k: i for i, k in enumerate(_terms(dim, order))}


@lru_cache(maxsize=None)
def _mul_table(dim: int, order: int):
    """Index triples (ia, ib, iout) for the truncated Cauchy product."""
    terms = _terms(dim, order)
    pos = _positions(dim, order)
    ia, ib, iout = [], [], []
    for i, ka in enumerate(terms):
        da = sum(ka)
        for j, kb in enumerate(terms):
            if da + sum(kb) > order:
                continue
            ksum = tuple(x + y for x, y in zip(ka, kb))
            ia.append(i)
            ib.append(j)
            iout.append(pos[ksum])
    return (np.asarray(ia, dtype=np.intp),
            np.asarray(ib, dtype=np.intp),
            np.asarray(iout, dtype=np.intp))


@lru_cache(maxsize=None)
def _partial_table(dim: int, order: int, axis: int):
    """Source positions and factors for d/dx_axis: order -> order - 1."""
    src_pos = _positions(dim, order)
    idx, fac = [], []
    for k in _terms(dim, order - 1):
        lifted = tuple(v + 1 if i == axis else v for i, v in enumerate(k))
        idx.append(src_pos[lifted])
        fac.append(k[axis] + 1)
    return np.asarray(idx, dtype=np.intp), np.asarray(fac, dtype=np.float64)


@lru_cache(maxsize=None)
def _extend_table(dim: int, order: int, new_dim: int):
    """Positions in the new enumeration for each old multi-index (axes appended)."""
    new_pos = _positions(new_dim, order)
    pad = (0,) * (new_dim - dim)
    return np.asarray([new_pos[k + pad] for k in _terms(dim, order)], dtype=np.intp)


def _check_shape(dim: int, order: int):
    if not (1 <= dim <= MAX_DIM):
        raise ValueError(f"jet dimension must be in 1..{MAX_DIM}, got {dim}")
    if not (0 <= order <= MAX_ORDER):
        raise ValueError(f"jet order must be in 0..{MAX_ORDER}, got {order}")


class Jet:
    """Truncated Taylor expansion of a scalar function."""

    __slots__ = ("dim", "order", "coeffs")

    def __init__(self, dim: int, order: int, coeffs):
        _check_shape(dim, order)
        arr = np.asarray(coeffs, dtype=np.float64)
        n = len(_terms(dim, order))
        if arr.shape != (n,):
            raise ValueError(f"expected {n} coefficients for dim={dim} order={order}, "
                             f"got shape {arr.shape}")
        self.dim = dim
        self.order = order
        self.coeffs = arr

    @staticmethod
    def constant(value: float, dim: int, order: int) -> "Jet":
        _check_shape(dim, order)
        c = np.zeros(len(_terms(dim, order)))
        c[0] = value
        return Jet(dim, order, c)

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def truncate(self, new_order: int) -> "Jet":
        if new_order > self.order:
            raise OrderExceeded(f"cannot raise truncation order {self.order} -> {new_order}")
        if new_order == self.order:
            return self
        return Jet(self.dim, new_order, self.coeffs[:len(_terms(self.dim, new_order))])

    def extend(self, new_dim: int) -> "Jet":
        """View this jet in a larger variable space (new axes appended)."""
        if new_dim == self.dim:
            return self
        if new_dim < self.dim:
            raise ValueError("extend cannot drop variables")
        _check_shape(new_dim, self.order)
        out = np.zeros(len(_terms(new_dim, self.order)))
        out[_extend_table(self.dim, self.order, new_dim)] = self.coeffs
        return Jet(new_dim, self.order, out)

    def partial(self, axis: int) -> "Jet":
        """Derivative along one axis; lowers the truncation order by one."""
        if not (0 <= axis < self.dim):
            raise ValueError(f"axis {axis} out of range for dim {self.dim}")
        if self.order == 0:
            raise OrderExceeded("cannot differentiate an order-0 jet")
        idx, fac = _partial_table(self.dim, self.order, axis)
        return Jet(self.dim, self.order - 1, self.coeffs[idx] * fac)

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.dim != self.dim:
                raise ValueError(f"jet dimension mismatch: {self.dim} vs {other.dim}")
            return other
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Jet.constant(float(other), self.dim, self.order)
        return None

    def __add__(self, other):
        b = self._coerce(other)
        if b is None:
            return NotImplemented
        o = min(self.order, b.order)
        n = len(_terms(self.dim, o))
        return Jet(self.dim, o, self.coeffs[:n] + b.coeffs[:n])

    __radd__ = __add__

    def __sub__(self, other):
        b = self._coerce(other)
        if b is None:
            return NotImplemented
        o = min(self.order, b.order)
        n = len(_terms(self.dim, o))
        return Jet(self.dim, o, self.coeffs[:n] - b.coeffs[:n])

    def __rsub__(self, other):
        b = self._coerce(other)
        if b is None:
            return NotImplemented
        return b - self

    def __neg__(self):
        return Jet(self.dim, self.order, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Jet(self.dim, self.order, self.coeffs * float(other))
        b = self._coerce(other)
        if b is None:
            return NotImplemented
        o = min(self.order, b.order)
        n = len(_terms(self.dim, o))
        ia, ib, iout = _mul_table(self.dim, o)
        prod = self.coeffs[ia] * b.coeffs[ib]
        return Jet(self.dim, o, np.bincount(iout, weights=prod, minlength=n))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            if abs(other) < _EPS_DIV:
                raise DivisionBySingularJet("division by (near-)zero scalar")
            return Jet(self.dim, self.order, self.coeffs / float(other))
        b = self._coerce(other)
        if b is None:
            return NotImplemented
        return self * reciprocal(b)

    def __rtruediv__(self, other):
        b = self._coerce(other)
        if b is None:
            return NotImplemented
        return b * reciprocal(self)

    def __pow__(self, p):
        return jet_pow(self, p)

    def __repr__(self):
        lead = ", ".join(f"{k}:{c:.6g}" for k, c in
                         zip(_terms(self.dim, self.order), self.coeffs) if c != 0.0)
        return f"Jet(dim={self.dim}, order={self.order}, {{{lead or '0'}}})"


def seed_variable(index: int, value: float, dim: int, order: int) -> Jet:
    """Jet of the coordinate function x_index about the given value."""
    _check_shape(dim, order)
    if not (0 <= index < dim):
        raise ValueError(f"variable index {index} out of range for dim {dim}")
    c = np.zeros(len(_terms(dim, order)))
    c[0] = value
    if order >= 1:
        unit = tuple(1 if i == index else 0 for i in range(dim))
        c[_positions(dim, order)[unit]] = 1.0
    return Jet(dim, order, c)


def seed_point(values, order: int):
    """Seed one jet per coordinate of a point."""
    vals = [float(v) for v in values]
    dim = len(vals)
    return [seed_variable(i, v, dim, order) for i, v in enumerate(vals)]


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    """Strict binary arithmetic: operands must share dim and order exactly."""
    if not isinstance(a, Jet) or not isinstance(b, Jet):
        raise TypeError("jet_arith operates on two jets")
    if a.dim != b.dim or a.order != b.order:
        raise ValueError(f"jet_arith requires matching shape; "
                         f"got ({a.dim},{a.order}) vs ({b.dim},{b.order})")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


def extract_partial(a: Jet, multi_index) -> float:
    """Partial derivative value d^k f at the base point (Taylor-denormalized)."""
    k = tuple(int(v) for v in multi_index)
    if len(k) != a.dim or any(v < 0 for v in k):
        raise ValueError(f"bad multi-index {k} for dim {a.dim}")
    if sum(k) > a.order:
        raise OrderExceeded(f"partial {k} exceeds truncation order {a.order}")
    fac = 1.0
    for v in k:
        fac *= math.factorial(v)
    return float(a.coeffs[_positions(a.dim, a.order)[k]]) * fac


def _compose_univariate(a: Jet, series) -> Jet:
    """Horner substitution of (a - a0) into a power series with given coefficients."""
    abar = a - a.value
    out = Jet.constant(series[-1], a.dim, a.order)
    for s in reversed(series[:-1]):
        out = out * abar + s
    return out


def reciprocal(b: Jet) -> Jet:
    if abs(b.value) < _EPS_DIV:
        raise DivisionBySingularJet("divisor jet has (near-)zero constant term")
    b0 = b.value
    series = [(-1.0) ** k / b0 ** (k + 1) for k in range(b.order + 1)]
    return _compose_univariate(b, series)


def jet_pow(a: Jet, p) -> Jet:
    if isinstance(p, Jet):
        raise TypeError("jet exponents are not supported; exponent must be a constant")
    pf = float(p)
    if pf == int(pf):
        n = int(pf)
        if n == 0:
            return Jet.constant(1.0, a.dim, a.order)
        if n < 0:
            return reciprocal(jet_pow(a, -n))
        out = None
        base = a
        while n:
            if n & 1:
                out = base if out is None else out * base
            n >>= 1
            if n:
                base = base * base
        return out
    if a.value <= 0.0:
        raise DomainError(f"non-integer power of non-positive leading value {a.value}")
    a0 = a.value
    series = []
    coeff = 1.0
    for k in range(a.order + 1):
        series.append(coeff * a0 ** (pf - k))
        coeff *= (pf - k) / (k + 1)
    return _compose_univariate(a, series)


def _elementary_series(fn: str, a0: float, order: int):
    """Taylor coefficients f^(k)(a0)/k! for the supported elementary functions."""
    if fn == "sin":
        cyc = (math.sin(a0), math.cos(a0), -math.sin(a0), -math.cos(a0))
        return [cyc[k % 4] / math.factorial(k) for k in range(order + 1)]
    if fn == "cos":
        cyc = (math.cos(a0), -math.sin(a0), -math.cos(a0), math.sin(a0))
        return [cyc[k % 4] / math.factorial(k) for k in range(order + 1)]
    if fn == "exp":
        e = math.exp(a0)
        return [e / math.factorial(k) for k in range(order + 1)]
    if fn == "log":
        if a0 <= 0.0:
            raise DomainError(f"log of non-positive leading value {a0}")
        out = [math.log(a0)]
        for k in range(1, order + 1):
            out.append((-1.0) ** (k + 1) / (k * a0 ** k))
        return out
    if fn == "sqrt":
        if a0 <= 0.0:
            raise DomainError(f"sqrt of non-positive leading value {a0}")
        out = []
        coeff = 1.0
        for k in range(order + 1):
            out.append(coeff * a0 ** (0.5 - k))
            coeff *= (0.5 - k) / (k + 1)
        return out
    if fn == "sinh":
        cyc = (math.sinh(a0), math.cosh(a0))
        return [cyc[k % 2] / math.factorial(k) for k in range(order + 1)]
    if fn == "cosh":
        cyc = (math.cosh(a0), math.sinh(a0))
        return [cyc[k % 2] / math.factorial(k) for k in range(order + 1)]
    if fn == "atan":
        u = a0
        w = 1.0 + u * u
        derivs = (math.atan(u),
                  1.0 / w,
                  -2.0 * u / w ** 2,
                  (6.0 * u * u - 2.0) / w ** 3,
                  (24.0 * u - 24.0 * u ** 3) / w ** 4)
        return [derivs[k] / math.factorial(k) for k in range(order + 1)]
    raise ValueError(f"unknown elementary function {fn!r}")


_ELEMENTARY = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "atan")


def jet_elementary(fn: str, a: Jet) -> Jet:
    if fn == "tan":
        return jet_elementary("sin", a) / jet_elementary("cos", a)
    return _compose_univariate(a, _elementary_series(fn, a.value, a.order))


def _make_wrapper(name):
    mathfn = getattr(math, name)

    def wrapper(x):
        if isinstance(x, Jet):
            return jet_elementary(name, x)
        try:
            return mathfn(x)
        except ValueError as exc:
            raise DomainError(f"{name}({x}) is outside the real domain") from exc

    wrapper.__name__ = name
    wrapper.__doc__ = f"{name} of a Jet or a plain number."
    return wrapper


sin = _make_wrapper("sin")
cos = _make_wrapper("cos")
tan = _make_wrapper("tan")
exp = _make_wrapper("exp")
log = _make_wrapper("log")
sqrt = _make_wrapper("sqrt")
sinh = _make_wrapper("sinh")
cosh = _make_wrapper("cosh")
atan = _make_wrapper("atan")


def compose(outer: Jet, inners) -> Jet:
    """Substitute displacement jets into a jet's Taylor polynomial.

    inners supplies one jet per outer variable, all of a common shape, each with
    zero constant term (they are displacements from the outer base point).
    """
    inners = list(inners)
    if len(inners) != outer.dim:
        raise ValueError(f"expected {outer.dim} inner jets, got {len(inners)}")
    dim = inners[0].dim
    order = min([outer.order] + [g.order for g in inners])
    gs = []
    for g in inners:
        if g.dim != dim:
            raise ValueError("inner jets must share a common dimension")
        if g.coeffs[0] != 0.0:
            raise ValueError("inner jets must have zero constant term")
        gs.append(g.truncate(order))
    # powers[i][p] = gs[i]**p, built lazily up to the needed degree
    powers = [[Jet.constant(1.0, dim, order), g] for g in gs]
    out = Jet.constant(0.0, dim, order)
    for k, c in zip(_terms(outer.dim, outer.order), outer.coeffs):
        if c == 0.0 or sum(k) > order:
            continue
        term = Jet.constant(c, dim, order)
        for i, e in enumerate(k):
            while len(powers[i]) <= e:
                powers[i].append(powers[i][-1] * powers[i][1])
            if e:
                term = term * powers[i][e]
        out = out + term
    return out


def restrict(a: Jet, axes) -> Jet:
    """Project onto a subset of variables, dropping terms on the other axes.

    Exact only when the jet does not actually depend on the dropped axes
    (their mixed coefficients vanish); callers are responsible for that.
    """
    axes = tuple(axes)
    new_dim = len(axes)
    _check_shape(new_dim, a.order)
    pos = _positions(new_dim, a.order)
    out = np.zeros(len(_terms(new_dim, a.order)))
    keep = set(axes)
    for k, c in zip(_terms(a.dim, a.order), a.coeffs):
        if c == 0.0:
            continue
        if any(k[i] for i in range(a.dim) if i not in keep):
            continue
        out[pos[tuple(k[i] for i in axes)]] = c
    return Jet(new_dim, a.order, out)


def antiderivative_1d(w: Jet, s0: float) -> Jet:
    """One-variable antiderivative with the given constant term.

    The result has the same truncation order as w; the top Taylor coefficient
    of the input contributes to the (order+1) slot and is dropped, so callers
    should supply w at the order they need minus one.
    """
    if w.dim != 1:
        raise ValueError("antiderivative_1d needs a one-variable jet")
    out = np.zeros(w.order + 1)
    out[0] = s0
    for k in range(1, w.order + 1):
        out[k] = w.coeffs[k - 1] / k
    return Jet(1, w.order, out)


# -- generic small-matrix helpers (entries: floats or jets) ------------------

def _lead(x) -> float:
    return x.value if isinstance(x, Jet) else float(x)


def matrix_det(rows):
    """Determinant of a small square matrix of floats or jets."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    if n == 3:
        a, b, c = rows[0]
        d, e, f = rows[1]
        g, h, i = rows[2]
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    det = None
    for j in range(n):
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = rows[0][j] * matrix_det(minor)
        if j % 2:
            term = -term
        det = term if det is None else det + term
    return det


def matrix_inverse(rows):
    """Inverse of a small square matrix of floats or jets (Gauss-Jordan)."""
    n = len(rows)
    a = [list(r) for r in rows]
    if any(len(r) != n for r in a):
        raise ValueError("matrix must be square")
    ident = []
    for i in range(n):
        if isinstance(a[i][i], Jet):
            proto = a[i][i]
            row = [Jet.constant(1.0 if j == i else 0.0, proto.dim, proto.order)
                   for j in range(n)]
        else:
            row = [1.0 if j == i else 0.0 for j in range(n)]
        ident.append(row)
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(_lead(a[r][col])))
        if abs(_lead(a[pivot_row][col])) < 1e-300:
            raise DegenerateMetric("matrix is singular to working precision")
        if pivot_row != col:
            a[col], a[pivot_row] = a[pivot_row], a[col]
            ident[col], ident[pivot_row] = ident[pivot_row], ident[col]
        piv = a[col][col]
        a[col] = [x / piv for x in a[col]]
        ident[col] = [x / piv for x in ident[col]]
        for r in range(n):
            if r == col:
                continue
            factor = a[r][col]
            if isinstance(factor, Jet):
                if not factor.coeffs.any():
                    continue
            elif factor == 0.0:
                continue
            a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
            ident[r] = [x - factor * y for x, y in zip(ident[r], ident[col])]
    return ident
