"""Open-knot B-spline spaces on uniform partitions of [0, 1].

A :class:`SplineSpace1D` describes the univariate space of piecewise
polynomials of degree ``m`` and global continuity ``C^k`` over ``n_elements``
equal elements. Tensor products of two such spaces give the 2D trial and test
spaces used by the flow solver.

Basis evaluation always happens on the *full* B-spline basis of the knot
vector; the ``bc`` flag only selects which of those functions belong to the
space (``space.dofs``).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp


class SplineParameterError(ValueError):
    """Invalid degree / continuity / element-count combination."""


class DomainError(ValueError):
    """Evaluation point outside of [0, 1]."""


class BC(str, Enum):
    NONE = "none"
    ZERO_BOTH_ENDS = "zero-both-ends"
    ONE_DOF_REMOVED = "one-dof-removed"


@dataclass(frozen=True)
class SplineSpace1D:
    degree: int
    continuity: int
    n_elements: int
    bc: BC = BC.NONE
    knots: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m, k, n = self.degree, self.continuity, self.n_elements
        if not isinstance(m, (int, np.integer)) or not isinstance(k, (int, np.integer)):
            raise SplineParameterError("degree and continuity must be integers")
        if m < 1 and k >= 0:
            raise SplineParameterError(f"degree {m} cannot carry continuity C^{k}")
        if m < 0 or k < -1 or k >= m:
            raise SplineParameterError(f"need -1 <= k < m, got m={m}, k={k}")
        if n < 1:
            raise SplineParameterError(f"n_elements must be >= 1, got {n}")
        object.__setattr__(self, "bc", BC(self.bc))
        breaks = np.linspace(0.0, 1.0, n + 1)
        kv = np.concatenate(
            [np.zeros(m + 1)]
            + [np.full(m - k, b) for b in breaks[1:-1]]
            + [np.ones(m + 1)]
        )
        object.__setattr__(self, "knots", tuple(kv.tolist()))

    @property
    def kv(self) -> np.ndarray:
        return np.asarray(self.knots)

    @property
    def n_basis(self) -> int:
        """Number of functions of the full (unconstrained) basis."""
        return self.n_elements * (self.degree - self.continuity) + self.continuity + 1

    @functools.cached_property
    def dofs(self) -> np.ndarray:
        """Indices into the full basis of the functions that span this space."""
        idx = np.arange(self.n_basis)
        if self.bc is BC.ZERO_BOTH_ENDS:
            return idx[1:-1]
        if self.bc is BC.ONE_DOF_REMOVED:
            return idx[1:]
        return idx

    @property
    def dim(self) -> int:
        return len(self.dofs)

    @property
    def breaks(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_elements + 1)

    def with_bc(self, bc) -> "SplineSpace1D":
        return SplineSpace1D(self.degree, self.continuity, self.n_elements, BC(bc))

    def full(self) -> "SplineSpace1D":
        return self.with_bc(BC.NONE)

    def greville(self) -> np.ndarray:
        """Greville abscissae of the full basis."""
        kv, m = self.kv, self.degree
        if m == 0:
            return 0.5 * (kv[:-1] + kv[1:])
        return np.array([kv[i + 1:i + m + 1].mean() for i in range(self.n_basis)])

    def find_span(self, x: float) -> int:
        """Index ``s`` with ``kv[s] <= x < kv[s+1]`` (last non-empty span at x=1)."""
        kv = self.kv
        n = self.n_basis
        if x >= kv[n]:
            return n - 1
        return int(np.searchsorted(kv, x, side="right") - 1)

    def element_of(self, x: float) -> int:
        return min(int(x * self.n_elements), self.n_elements - 1)


def make_space(m: int, k: int, n_elements: int, bc="none") -> SplineSpace1D:
    """Build the space ``S^{m,k}`` on ``n_elements`` uniform elements."""
    return SplineSpace1D(m, k, n_elements, BC(bc))


def eval_basis(space: SplineSpace1D, x: float, max_deriv: int = 0):
    """Evaluate the ``m+1`` B-splines that may be nonzero at ``x``.

    Returns ``(first, table)`` where ``table[d, i]`` is the ``d``-th derivative
    of full basis function ``first + i``. Cox-de Boor recursion with the
    derivative formulas from the triangular table of lower-degree splines.
    """
    x = float(x)
    if not (0.0 <= x <= 1.0) or not np.isfinite(x):
        raise DomainError(f"x={x} outside [0, 1]")
    if max_deriv not in (0, 1, 2):
        raise SplineParameterError("max_deriv must be 0, 1 or 2")
    kv = space.kv
    p = space.degree
    s = space.find_span(x)
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    ndu = np.zeros((p + 1, p + 1))
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = x - kv[s + 1 - j]
        right[j] = kv[s + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    nd = max_deriv
    ders = np.zeros((nd + 1, p + 1))
    ders[0] = ndu[:, p]
    a = np.zeros((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for kk in range(1, min(nd, p) + 1):
            d = 0.0
            rk, pk = r - kk, p - kk
            if r >= kk:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = kk - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, kk] = -a[s1, kk - 1] / ndu[pk + 1, r]
                d += a[s2, kk] * ndu[r, pk]
            ders[kk, r] = d
            s1, s2 = s2, s1
    fac = p
    for kk in range(1, nd + 1):
        ders[kk] *= fac
        fac *= p - kk
    return s - p, ders


@dataclass(frozen=True)
class QuadratureRule:
    points_per_element: int
    nodes: tuple
    weights: tuple

    def on_elements(self, breaks: np.ndarray):
        """Map the rule onto every interval of ``breaks``; returns flat (x, w)."""
        breaks = np.asarray(breaks)
        h = np.diff(breaks)
        x = breaks[:-1, None] + h[:, None] * np.asarray(self.nodes)[None, :]
        w = h[:, None] * np.asarray(self.weights)[None, :]
        return x.ravel(), w.ravel()


@functools.lru_cache(maxsize=None)
def gauss_rule(points_per_element: int) -> QuadratureRule:
    """Gauss-Legendre rule on the reference interval [0, 1]."""
    if not 1 <= points_per_element <= 16:
        raise SplineParameterError(
            f"points_per_element must lie in [1, 16], got {points_per_element}"
        )
    t, w = np.polynomial.legendre.leggauss(points_per_element)
    return QuadratureRule(points_per_element, tuple(0.5 * (t + 1.0)), tuple(0.5 * w))


def assembly_points(*spaces: SplineSpace1D) -> int:
    """Gauss points per element that integrate mass/stiffness/advection exactly."""
    return max(s.degree for s in spaces) + 1


@functools.lru_cache(maxsize=256)
def _collocation(space: SplineSpace1D, npts: int, deriv: int):
    rule = gauss_rule(npts)
    xs, ws = rule.on_elements(space.breaks)
    # Gauss nodes are interior to their element, so span lookup is unambiguous
    rows, cols, vals = [], [], []
    p = space.degree
    for q, x in enumerate(xs):
        first, tab = eval_basis(space, x, deriv)
        rows.extend([q] * (p + 1))
        cols.extend(range(first, first + p + 1))
        vals.extend(tab[deriv])
    full = sp.csr_matrix((vals, (rows, cols)), shape=(len(xs), space.n_basis))
    return xs, ws, full


def collocation(space: SplineSpace1D, npts: int, deriv: int = 0):
    """Values (or derivatives) of the space's basis at the Gauss points.

    Returns ``(x, w, B)`` with ``B`` a sparse ``(len(x), space.dim)`` matrix,
    ``B[q, i]`` being the ``deriv``-th derivative of basis ``i`` at ``x[q]``.
    """
    xs, ws, full = _collocation(space.full(), npts, deriv)
    if space.bc is BC.NONE:
        return xs, ws, full
    return xs, ws, full[:, space.dofs].tocsr()


def basis_matrix(space: SplineSpace1D, xs, deriv: int = 0) -> sp.csr_matrix:
    """Sparse evaluation matrix of the space's basis at arbitrary points."""
    xs = np.asarray(xs, dtype=float).ravel()
    p = space.degree
    rows, cols, vals = [], [], []
    for q, x in enumerate(xs):
        first, tab = eval_basis(space, x, deriv)
        rows.extend([q] * (p + 1))
        cols.extend(range(first, first + p + 1))
        vals.extend(tab[deriv])
    full = sp.csr_matrix((vals, (rows, cols)), shape=(len(xs), space.n_basis))
    if space.bc is BC.NONE:
        return full
    return full[:, space.dofs].tocsr()
