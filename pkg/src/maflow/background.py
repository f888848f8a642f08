"""Background geometries: metric fields, Christoffel symbols, curvature.

A BackgroundGeometry wraps a metric field given as a function of coordinate
jets; every derived object (Christoffels, Riemann/Ricci/scalar curvature,
covariant derivatives) is produced in jet form so downstream consumers can
keep differentiating without finite differences.

Metric functions receive the full list of coordinate jets for the geometry's
dimension and must build their entries from those jets (constants via
`const_like`), so the same function body works at any truncation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import jets as _jets
from .errors import DegenerateMetric, DimensionError
from .jets import Jet, matrix_det, matrix_inverse, seed_point


def const_like(template: Jet, value: float) -> Jet:
    return Jet.constant(value, template.dim, template.order)


def _as_jets(geometry, point_or_jets, order):
    if point_or_jets and isinstance(point_or_jets[0], Jet):
        return list(point_or_jets)
    return seed_point(point_or_jets, order)


@dataclass
class CurvatureData:
    """Riemann R_{ijk}^l (nested lists, jets), Ricci R_ij, scalar R."""

    riemann: list
    ricci: list
    scalar: Jet


@dataclass
class BackgroundGeometry:
    dim: int
    name: str
    metric_fn: callable
    coords: tuple
    warp: callable = None          # log of the fiber scale, for warped products
    base: "BackgroundGeometry" = None
    flat: bool = False             # known-flat fast path (identity metric)

    def metric_at(self, point_or_jets, order=2):
        """Metric matrix (nested lists of jets) at a point or at given jets."""
        cj = _as_jets(self, point_or_jets, order)
        if len(cj) != self.dim:
            raise DimensionError(f"geometry {self.name} expects {self.dim} coordinates, "
                                 f"got {len(cj)}")
        return self.metric_fn(cj)

    def metric_values(self, point):
        import numpy as np
        rows = self.metric_at(point, order=0)
        return np.array([[e.value if isinstance(e, Jet) else float(e) for e in r]
                         for r in rows])

    # -- constructors --------------------------------------------------------

    @staticmethod
    def flat_space(dim, coords=None):
        names = coords or ("x", "y", "z")[:dim]

        def fn(cj):
            return [[const_like(cj[0], 1.0 if i == j else 0.0) for j in range(dim)]
                    for i in range(dim)]

        return BackgroundGeometry(dim, f"flat{dim}d", fn, tuple(names), flat=True)

    @staticmethod
    def cylindrical():
        """Axisymmetric 3-space in (r, z, theta); diag(1, 1, r^2), warp log r."""

        def fn(cj):
            r = cj[0]
            zero = const_like(r, 0.0)
            one = const_like(r, 1.0)
            return [[one, zero, zero], [zero, one, zero], [zero, zero, r * r]]

        base = BackgroundGeometry.flat_space(2, coords=("r", "z"))
        return BackgroundGeometry(3, "cylindrical", fn, ("r", "z", "theta"),
                                  warp=lambda cj: _jets.log(cj[0]), base=base)

    @staticmethod
    def warped_product(base: "BackgroundGeometry", warp, name=None,
                       fiber_coord="x3"):
        """g3 = g2 + e^{2 phi} dx3 (x) dx3 over a 2D base; warp(cj) -> phi jet."""
        if base.dim != 2:
            raise DimensionError("warped products are built over 2D bases")

        def fn(cj):
            g2 = base.metric_fn(cj[:2]) if base.flat else base.metric_fn(cj)
            # base metric functions written dim-agnostically work on cj directly;
            # flat bases rebuild constants at the full jet shape
            if base.flat:
                g2 = [[const_like(cj[0], 1.0 if i == j else 0.0) for j in range(2)]
                      for i in range(2)]
            zero = const_like(cj[0], 0.0)
            g33 = _jets.exp(warp(cj) * 2.0)
            return [[g2[0][0], g2[0][1], zero],
                    [g2[1][0], g2[1][1], zero],
                    [zero, zero, g33]]

        coords = tuple(base.coords) + (fiber_coord,)
        return BackgroundGeometry(3, name or f"warped-{base.name}", fn, coords,
                                  warp=warp, base=base)

    @staticmethod
    def from_matrix_function(dim, fn, name="custom", coords=None):
        """Wrap an arbitrary (not necessarily definite) metric field.

        fn(coordinate jets) -> nested lists of jets. No definiteness is
        enforced; degeneracy surfaces only where an inverse is required.
        """
        names = coords or tuple(f"x{i+1}" for i in range(dim))
        return BackgroundGeometry(dim, name, fn, tuple(names))


def christoffels_at(geometry: BackgroundGeometry, point_or_jets, order=2):
    """Gamma[i][j][k] = Gamma_{ij}^k as jets of the requested order."""
    cj = _as_jets(geometry, point_or_jets, order + 1)
    n = geometry.dim
    if geometry.flat:
        zero = Jet.constant(0.0, cj[0].dim, cj[0].order - 1)
        return [[[zero] * n for _ in range(n)] for _ in range(n)]
    g = geometry.metric_fn(cj)
    ginv = matrix_inverse(g)
    dg = [[[g[j][k].partial(i) for k in range(n)] for j in range(n)]
          for i in range(n)]
    ginv = [[e.truncate(e.order - 1) for e in row] for row in ginv]
    gamma = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                acc = None
                for l in range(n):
                    term = ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j])
                    acc = term if acc is None else acc + term
                gamma[i][j][k] = acc * 0.5
    return gamma


def curvature_at(geometry: BackgroundGeometry, point_or_jets, order=0):
    """Riemann, Ricci, scalar curvature as jets of the requested order.

    R_{ijk}^l = d_i Gamma_{jk}^l - d_j Gamma_{ik}^l
                - Gamma_{ik}^m Gamma_{jm}^l + Gamma_{jk}^m Gamma_{im}^l
    """
    cj = _as_jets(geometry, point_or_jets, order + 2)
    n = geometry.dim
    gamma = christoffels_at(geometry, cj, order + 1)
    dgamma = [[[[gamma[j][k][l].partial(i) for l in range(n)] for k in range(n)]
               for j in range(n)] for i in range(n)]
    gamma_low = [[[g.truncate(g.order - 1) for g in row] for row in plane]
                 for plane in gamma]
    riem = [[[[None] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    val = dgamma[i][j][k][l] - dgamma[j][i][k][l]
                    for m in range(n):
                        val = val + (gamma_low[j][k][m] * gamma_low[i][m][l]
                                     - gamma_low[i][k][m] * gamma_low[j][m][l])
                    riem[i][j][k][l] = val
    ricci = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = None
            for k in range(n):
                acc = riem[k][i][j][k] if acc is None else acc + riem[k][i][j][k]
            ricci[i][j] = acc
    g = geometry.metric_fn(cj)
    target = ricci[0][0].order
    ginv = [[e.truncate(target) for e in row] for row in matrix_inverse(g)]
    scalar = None
    for i in range(n):
        for j in range(n):
            term = ginv[i][j] * ricci[i][j]
            scalar = term if scalar is None else scalar + term
    return CurvatureData(riemann=riem, ricci=ricci, scalar=scalar)


def covariant_derivative(geometry: BackgroundGeometry, tensor, valence: str,
                         point_or_jets, order=1):
    """Covariant derivative of a tensor field of jets.

    tensor: nested lists of jets, one nesting level per character of valence;
    valence: string over {'u','d'} (contravariant / covariant slots).
    Returns nested lists with a *leading* covariant index: (nabla T)_{i ...}.
    """
    n = geometry.dim
    cj = _as_jets(geometry, point_or_jets, order + 1)
    gamma = christoffels_at(geometry, cj, order)

    rank = len(valence)

    def walk(t, depth):
        if depth == rank:
            return [t]
        return [leaf for branch in t for leaf in walk(branch, depth + 1)]

    def get(t, idx):
        for i in idx:
            t = t[i]
        return t

    def build(shape_depth, fn, idx=()):
        if shape_depth == 0:
            return fn(idx)
        return [build(shape_depth - 1, fn, idx + (i,)) for i in range(n)]

    def entry(full_idx):
        i = full_idx[0]
        idx = full_idx[1:]
        val = get(tensor, idx).partial(i)
        for slot, kind in enumerate(valence):
            a = idx[slot]
            for m in range(n):
                swapped = idx[:slot] + (m,) + idx[slot + 1:]
                t_m = get(tensor, swapped)
                t_m = t_m.truncate(val.order)
                if kind == "u":
                    val = val + gamma[i][m][a].truncate(val.order) * t_m
                else:
                    val = val - gamma[i][a][m].truncate(val.order) * t_m
        return val

    return build(rank + 1, entry)


def metric_volume(geometry: BackgroundGeometry, point_or_jets, order=2):
    """sqrt(det g) as a jet."""
    cj = _as_jets(geometry, point_or_jets, order)
    det = matrix_det(geometry.metric_fn(cj))
    if det.value <= 0.0:
        raise DegenerateMetric(f"metric of {geometry.name} is not Riemannian here")
    return _jets.sqrt(det)
