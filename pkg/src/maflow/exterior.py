"""Exterior algebra over R^m with float or jet coefficients.

FormValue holds a (possibly mixed-grade) exterior form, PolyVector its
contravariant counterpart. Components are stored sparsely per grade, keyed by
strictly increasing index tuples.

Conventions (fixed once, used consistently by every consumer):
  - dx_I evaluated on basis vectors (e_{i_1},...,e_{i_k}) in index order is +1.
  - The interior product fills the leftmost slot: (X -| a)(Y,...) = a(X,Y,...).
    For a decomposable polyvector the first factor is applied first, so
    e_I -| a pairs the slots of a with (e_{i_1},...,e_{i_g}) in order.
  - hodge_star satisfies a ^ star(b) = <a,b>_g vol_g with
    vol_g = sqrt|det g| dx^1...dx^m for the given coordinate orientation.
"""

from __future__ import annotations

import math
from itertools import combinations

from . import jets as _jets
from .errors import DegenerateMetric, DegenerateReference, DimensionError
from .jets import Jet, matrix_det, matrix_inverse

_MIN_DIM = 1
_MAX_DIM = 8


def _lead(x) -> float:
    return x.value if isinstance(x, Jet) else float(x)


def _is_zero(x) -> bool:
    if isinstance(x, Jet):
        return not x.coeffs.any()
    return x == 0.0


def _shuffle_sign(first, second) -> int:
    """Parity of the shuffle merging two internally sorted index tuples."""
    inv = 0
    for f in first:
        for s in second:
            if f > s:
                inv += 1
    return -1 if inv % 2 else 1


def _merge(ia, ib):
    """Sorted merge of two strictly increasing tuples with sign; None on collision."""
    if set(ia) & set(ib):
        return 0, None
    merged = tuple(sorted(ia + ib))
    return _shuffle_sign(ia, ib), merged


class _Multi:
    """Shared storage/arithmetic for forms and polyvectors."""

    kind = "multi"
    __slots__ = ("dim", "components")

    def __init__(self, dim: int, components=None):
        if not (_MIN_DIM <= dim <= _MAX_DIM):
            raise ValueError(f"dimension must be in {_MIN_DIM}..{_MAX_DIM}, got {dim}")
        self.dim = dim
        self.components = {}
        if components:
            for grade, block in components.items():
                for idx, c in block.items():
                    self._insert(grade, tuple(idx), c)

    def _insert(self, grade, idx, coeff):
        if grade != len(idx) or any(not 0 <= i < self.dim for i in idx):
            raise ValueError(f"bad index tuple {idx} for grade {grade}, dim {self.dim}")
        if tuple(sorted(set(idx))) != idx:
            raise ValueError(f"index tuple must be strictly increasing: {idx}")
        block = self.components.setdefault(grade, {})
        if idx in block:
            block[idx] = block[idx] + coeff
        else:
            block[idx] = coeff

    @classmethod
    def from_terms(cls, dim, terms):
        """Build from {index_tuple: coefficient}; () gives the grade-0 part."""
        out = cls(dim)
        for idx, c in terms.items():
            idx = tuple(idx)
            out._insert(len(idx), idx, c)
        return out

    @classmethod
    def zero(cls, dim):
        return cls(dim)

    def terms(self):
        for grade in sorted(self.components):
            for idx, c in self.components[grade].items():
                yield grade, idx, c

    def grades(self):
        return sorted(g for g, block in self.components.items()
                      if any(not _is_zero(c) for c in block.values()))

    def coeff(self, idx):
        idx = tuple(idx)
        return self.components.get(len(idx), {}).get(idx, 0.0)

    def map_coefficients(self, fn):
        out = type(self)(self.dim)
        for g, idx, c in self.terms():
            out._insert(g, idx, fn(c))
        return out

    def lead_values(self):
        """Same shape, jet coefficients collapsed to their values."""
        return self.map_coefficients(_lead)

    def sup_norm(self) -> float:
        vals = [abs(_lead(c)) for _, _, c in self.terms()]
        return max(vals) if vals else 0.0

    def is_zero(self, tol=0.0) -> bool:
        return self.sup_norm() <= tol

    def _binary(self, other, op):
        if type(other) is not type(self) or other.dim != self.dim:
            raise TypeError(f"cannot combine {type(self).__name__} with "
                            f"{type(other).__name__} of dim {getattr(other, 'dim', '?')}")
        out = type(self)(self.dim)
        for g, idx, c in self.terms():
            out._insert(g, idx, c)
        for g, idx, c in other.terms():
            out._insert(g, idx, op(c))
        return out

    def __add__(self, other):
        return self._binary(other, lambda c: c)

    def __sub__(self, other):
        return self._binary(other, lambda c: -c)

    def __neg__(self):
        return self.map_coefficients(lambda c: -c)

    def scale(self, s):
        return self.map_coefficients(lambda c: c * s)

    def __mul__(self, s):
        if isinstance(s, (int, float, Jet)):
            return self.scale(s)
        return NotImplemented

    __rmul__ = __mul__

    def __repr__(self):
        parts = [f"{_lead(c):+.6g}*{'e' if self.kind == 'vector' else 'dx'}{list(idx)}"
                 for _, idx, c in self.terms() if not _is_zero(c)]
        return f"{type(self).__name__}(dim={self.dim}, {' '.join(parts) or '0'})"


class FormValue(_Multi):
    kind = "form"


class PolyVector(_Multi):
    kind = "vector"


def basis_form(dim, idx):
    return FormValue.from_terms(dim, {tuple(idx): 1.0})


def basis_vector(dim, idx):
    return PolyVector.from_terms(dim, {tuple(idx): 1.0})


def vector_from_components(components, dim=None):
    comps = list(components)
    dim = dim or len(comps)
    out = PolyVector(dim)
    for i, c in enumerate(comps):
        if not _is_zero(c):
            out._insert(1, (i,), c)
    return out


def one_form(components, dim=None):
    comps = list(components)
    dim = dim or len(comps)
    out = FormValue(dim)
    for i, c in enumerate(comps):
        if not _is_zero(c):
            out._insert(1, (i,), c)
    return out


def reindex(obj, new_dim, mapping):
    """Re-embed into a larger index space; mapping sends old axis -> new axis."""
    out = type(obj)(new_dim)
    for g, idx, c in obj.terms():
        new_idx = tuple(mapping[i] for i in idx)
        order = sorted(range(g), key=lambda p: new_idx[p])
        sorted_idx = tuple(new_idx[p] for p in order)
        if len(set(sorted_idx)) != g:
            raise ValueError("mapping collapses distinct axes")
        # parity of the sort permutation
        sign = 1
        perm = list(order)
        for i in range(g):
            while perm[i] != i:
                j = perm[i]
                perm[i], perm[j] = perm[j], perm[i]
                sign = -sign
        out._insert(g, sorted_idx, c * sign if sign < 0 else c)
    return out


def wedge(a, b):
    """Exterior product of two forms or two polyvectors."""
    if type(a) is not type(b) or not isinstance(a, _Multi):
        raise TypeError("wedge requires two forms or two polyvectors")
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch {a.dim} vs {b.dim}")
    out = type(a)(a.dim)
    for ga, ia, ca in a.terms():
        if _is_zero(ca):
            continue
        for gb, ib, cb in b.terms():
            if _is_zero(cb):
                continue
            if ga + gb > a.dim:
                continue
            sign, merged = _merge(ia, ib)
            if sign == 0:
                continue
            coeff = ca * cb
            if sign < 0:
                coeff = -coeff
            out._insert(ga + gb, merged, coeff)
    return out


def interior(v: PolyVector, a: FormValue):
    """Iterated leftmost-slot interior product v -| a.

    Returns a FormValue when every contributing pair has vector grade <= form
    grade, a PolyVector in the opposite (transposed) regime.
    """
    if not isinstance(v, PolyVector) or not isinstance(a, FormValue):
        raise TypeError("interior expects (PolyVector, FormValue)")
    if v.dim != a.dim:
        raise ValueError(f"dimension mismatch {v.dim} vs {a.dim}")
    form_out = FormValue(a.dim)
    vec_out = PolyVector(a.dim)
    saw_form = saw_vec = False
    for gv, iv, cv in v.terms():
        if _is_zero(cv):
            continue
        for ga, ia, ca in a.terms():
            if _is_zero(ca):
                continue
            if gv <= ga:
                if not set(iv) <= set(ia):
                    continue
                rest = tuple(i for i in ia if i not in set(iv))
                sign = _shuffle_sign(iv, rest)
                coeff = cv * ca if sign > 0 else -(cv * ca)
                form_out._insert(ga - gv, rest, coeff)
                saw_form = True
            else:
                if not set(ia) <= set(iv):
                    continue
                rest = tuple(i for i in iv if i not in set(ia))
                sign = _shuffle_sign(ia, rest)
                coeff = cv * ca if sign > 0 else -(cv * ca)
                vec_out._insert(gv - ga, rest, coeff)
                saw_vec = True
    if saw_form and saw_vec:
        raise ValueError("interior product mixes form and polyvector output grades")
    return vec_out if saw_vec else form_out


def pairing(v: PolyVector, a: FormValue):
    """Full grade-matching contraction <v, a>."""
    total = 0.0
    for gv, iv, cv in v.terms():
        block = a.components.get(gv, {})
        if iv in block:
            total = total + cv * block[iv]
    return total


def _metric_matrix(metric):
    m = getattr(metric, "matrix", metric)
    try:
        rows = [list(r) for r in m]
    except TypeError:
        raise TypeError("metric must be a matrix or carry a .matrix attribute")
    return rows


def hodge_star(a: FormValue, metric, orientation=1):
    """Hodge dual of a form w.r.t. a (possibly jet-valued) metric.

    orientation is +1/-1 for the coordinate orientation, or a top-grade
    FormValue whose coefficient sign selects the orientation.
    """
    if not isinstance(a, FormValue):
        raise TypeError("hodge_star expects a FormValue")
    rows = _metric_matrix(metric)
    m = a.dim
    if len(rows) != m:
        raise ValueError(f"metric size {len(rows)} does not match form dim {m}")
    det = matrix_det(rows)
    det_lead = _lead(det)
    if abs(det_lead) < 1e-250:
        raise DegenerateMetric("metric determinant vanishes")
    if isinstance(orientation, FormValue):
        top = orientation.components.get(m, {})
        osign = 1 if _lead(top.get(tuple(range(m)), 0.0)) >= 0 else -1
    else:
        osign = 1 if orientation >= 0 else -1
    if isinstance(det, Jet):
        cvol = _jets.sqrt(abs(det_lead) / det_lead * det) * osign
    else:
        cvol = osign * math.sqrt(abs(det))
    ginv = matrix_inverse(rows)
    out = FormValue(m)
    full = tuple(range(m))
    for k, block in a.components.items():
        for idx_j, cj in block.items():
            if _is_zero(cj):
                continue
            for idx_i in combinations(range(m), k):
                if k == 0:
                    gram = 1.0
                else:
                    gram = matrix_det([[ginv[i][j] for j in idx_j] for i in idx_i])
                if _is_zero(gram):
                    continue
                comp = tuple(i for i in full if i not in set(idx_i))
                sign = _shuffle_sign(idx_i, comp)
                coeff = cj * gram * cvol
                if sign < 0:
                    coeff = -coeff
                out._insert(m - k, comp, coeff)
    return out


def form_inner(a: FormValue, b: FormValue, metric):
    """Pointwise metric pairing <a,b>_g of two forms (summed over grades)."""
    rows = _metric_matrix(metric)
    ginv = matrix_inverse(rows)
    total = 0.0
    for k, block in a.components.items():
        other = b.components.get(k, {})
        for idx_a, ca in block.items():
            for idx_b, cb in other.items():
                if k == 0:
                    gram = 1.0
                else:
                    gram = matrix_det([[ginv[i][j] for j in idx_b] for i in idx_a])
                total = total + ca * cb * gram
    return total


def pfaffian(a: FormValue, omega: FormValue):
    """Pfaffian of a 2-form relative to a reference symplectic form (dim 4)."""
    if a.dim != 4 or omega.dim != 4:
        raise DimensionError("pfaffian is defined on 4-dimensional phase space")
    top = (0, 1, 2, 3)
    num = wedge(a, a).coeff(top)
    den = wedge(omega, omega).coeff(top)
    if abs(_lead(den)) < 1e-14:
        raise DegenerateReference("reference form has vanishing top wedge power")
    return num / den


def effective_decompose(rho: FormValue, omega: FormValue):
    """Split rho = rho0 + lam0 * omega with rho0 ^ omega = 0 (dim 4)."""
    if rho.dim != 4 or omega.dim != 4:
        raise DimensionError("effective decomposition implemented on dim-4 space")
    top = (0, 1, 2, 3)
    den = wedge(omega, omega).coeff(top)
    if abs(_lead(den)) < 1e-14:
        raise DegenerateReference("reference form has vanishing top wedge power")
    lam0 = wedge(rho, omega).coeff(top) / den
    rho0 = rho - omega.scale(lam0)
    return rho0, lam0


def numeric_exterior_derivative(field, point, order=1):
    """Exterior derivative of a form field given by jet evaluation.

    field(coord_jets) must return a FormValue with Jet coefficients; the
    result carries plain float coefficients (the value of d(field) at point).
    """
    pt = [float(v) for v in point]
    coord_jets = _jets.seed_point(pt, order)
    val = field(coord_jets)
    if not isinstance(val, FormValue):
        raise TypeError("field must produce a FormValue")
    dim = len(pt)
    if val.dim != dim:
        raise ValueError(f"field dim {val.dim} does not match point dim {dim}")
    out = FormValue(dim)
    unit = [tuple(1 if j == i else 0 for j in range(dim)) for i in range(dim)]
    for g, idx, c in val.terms():
        for i in range(dim):
            if i in idx:
                continue
            if isinstance(c, Jet):
                dc = _jets.extract_partial(c, unit[i])
            else:
                dc = 0.0
            if dc == 0.0:
                continue
            sign, merged = _merge((i,), idx)
            out._insert(g + 1, merged, sign * dc)
    return out
