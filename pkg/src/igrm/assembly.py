"""1D mass, stiffness and advection matrices between spline spaces.

Rows always index the *test* (row) space and columns the *trial* (column)
space, so the same functions assemble square Gram blocks and the rectangular
mixed blocks of the residual-minimization systems.
"""

from __future__ import annotations

import functools

import numpy as np
import scipy.sparse as sp

from .spline_basis import SplineSpace1D, assembly_points, collocation


class EvaluationError(ValueError):
    """A user-supplied field returned non-finite values."""


class BandedMatrix:
    """Rectangular matrix stored by diagonals.

    ``data[upper + i - j, j] == A[i, j]`` for ``-lower <= j - i <= upper``
    (the LAPACK ``gb`` layout).
    """

    def __init__(self, data: np.ndarray, lower: int, upper: int, shape):
        self.data = np.asarray(data, dtype=float)
        self.lower = int(lower)
        self.upper = int(upper)
        self.shape = (int(shape[0]), int(shape[1]))
        assert self.data.shape == (self.lower + self.upper + 1, self.shape[1])

    @classmethod
    def from_dense(cls, a: np.ndarray, lower=None, upper=None, tol: float = 0.0):
        a = np.asarray(a, dtype=float)
        nr, nc = a.shape
        ii, jj = np.nonzero(np.abs(a) > tol)
        if lower is None:
            lower = int(max(0, (ii - jj).max())) if ii.size else 0
        if upper is None:
            upper = int(max(0, (jj - ii).max())) if ii.size else 0
        data = np.zeros((lower + upper + 1, nc))
        for j in range(nc):
            i0, i1 = max(0, j - upper), min(nr, j + lower + 1)
            data[upper + np.arange(i0, i1) - j, j] = a[i0:i1, j]
        return cls(data, lower, upper, (nr, nc))

    def todense(self) -> np.ndarray:
        nr, nc = self.shape
        out = np.zeros(self.shape)
        for j in range(nc):
            i0, i1 = max(0, j - self.upper), min(nr, j + self.lower + 1)
            out[i0:i1, j] = self.data[self.upper + np.arange(i0, i1) - j, j]
        return out

    @functools.cached_property
    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(self.todense())

    @property
    def T(self) -> "BandedMatrix":
        return BandedMatrix.from_dense(self.todense().T, self.upper, self.lower)

    def __matmul__(self, other):
        return self.csr @ other

    def __add__(self, other: "BandedMatrix") -> "BandedMatrix":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        lo, up = max(self.lower, other.lower), max(self.upper, other.upper)
        return BandedMatrix.from_dense(self.todense() + other.todense(), lo, up)

    def __mul__(self, scalar: float) -> "BandedMatrix":
        return BandedMatrix(self.data * float(scalar), self.lower, self.upper, self.shape)

    __rmul__ = __mul__

    def __sub__(self, other: "BandedMatrix") -> "BandedMatrix":
        return self + (-1.0) * other

    def __repr__(self):
        return f"BandedMatrix(shape={self.shape}, lower={self.lower}, upper={self.upper})"


def _bilinear(row: SplineSpace1D, col: SplineSpace1D, drow: int, dcol: int) -> BandedMatrix:
    if row.n_elements != col.n_elements:
        raise ValueError("row and column spaces must share the element partition")
    npts = assembly_points(row, col)
    _, w, br = collocation(row, npts, drow)
    _, _, bc = collocation(col, npts, dcol)
    a = (br.T @ sp.diags(w) @ bc).toarray()
    return BandedMatrix.from_dense(a)


def mass(row_space: SplineSpace1D, col_space: SplineSpace1D) -> BandedMatrix:
    """Entries ``int_0^1 B_i^row B_j^col``."""
    return _bilinear(row_space, col_space, 0, 0)


def stiffness(row_space: SplineSpace1D, col_space: SplineSpace1D) -> BandedMatrix:
    """Entries ``int_0^1 (B_i^row)' (B_j^col)'``."""
    return _bilinear(row_space, col_space, 1, 1)


def advection(row_space: SplineSpace1D, col_space: SplineSpace1D) -> BandedMatrix:
    """Entries ``int_0^1 B_i^row (B_j^col)'`` (derivative on the column/trial side)."""
    return _bilinear(row_space, col_space, 0, 1)


def load_vector(row_space_x: SplineSpace1D, row_space_y: SplineSpace1D, f,
                npts: int | None = None) -> np.ndarray:
    """``F[i, j] = int int f(x, y) B_i(x) B_j(y)``.

    ``f`` is called once with broadcastable arrays ``x[:, None]`` and
    ``y[None, :]`` covering the tensor Gauss grid.
    """
    if npts is None:
        npts = assembly_points(row_space_x, row_space_y)
    xq, wx, bx = collocation(row_space_x, npts)
    yq, wy, by = collocation(row_space_y, npts)
    vals = np.broadcast_to(np.asarray(f(xq[:, None], yq[None, :]), dtype=float),
                           (len(xq), len(yq)))
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("load function returned non-finite values")
    weighted = vals * wx[:, None] * wy[None, :]
    return np.asarray(bx.T @ (by.T @ weighted.T).T)
