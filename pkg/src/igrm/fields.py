"""Tensor-product spline fields: Dirichlet boundary coefficients, L2 projection
and evaluation on quadrature grids."""

from __future__ import annotations

import functools

import numpy as np
import scipy.linalg as sla

from .assembly import load_vector, mass
from .kron_solver import BandedLU, solve_kron
from .spline_basis import SplineSpace1D, basis_matrix, collocation


@functools.lru_cache(maxsize=64)
def _greville_interp_lu(space: SplineSpace1D):
    full = space.full()
    g = full.greville()
    return g, sla.lu_factor(basis_matrix(full, g).toarray())


def edge_coefficients(space: SplineSpace1D, values_at_greville: np.ndarray,
                      mode: str = "interpolate") -> np.ndarray:
    """Coefficients of a 1D trace on the full basis of ``space``."""
    g, lu = _greville_interp_lu(space)
    if mode == "anchor":
        return np.asarray(values_at_greville, dtype=float).copy()
    if mode != "interpolate":
        raise ValueError(f"unknown boundary mode {mode!r}")
    return sla.lu_solve(lu, values_at_greville)


def dirichlet_ring(sx: SplineSpace1D, sy: SplineSpace1D, g, t: float,
                   mode: str = "interpolate"):
    """Full-basis coefficient grids carrying boundary data on the outer ring.

    ``g(x, y, t)`` returns the two velocity components; interior entries of the
    returned grids are zero. With open knot vectors the edge trace of the 2D
    spline is the 1D spline of the ring coefficients, so each edge is fitted
    independently; corners agree because both fits reproduce the corner value.
    """
    sx, sy = sx.full(), sy.full()
    gx, gy = sx.greville(), sy.greville()
    zero_y, one_y = np.zeros_like(gy), np.ones_like(gy)
    zero_x, one_x = np.zeros_like(gx), np.ones_like(gx)
    out = []
    edges = {
        "left": g(zero_y, gy, t), "right": g(one_y, gy, t),
        "bottom": g(gx, zero_x, t), "top": g(gx, one_x, t),
    }
    for comp in range(2):
        c = np.zeros((sx.n_basis, sy.n_basis))
        c[:, 0] = edge_coefficients(sx, np.broadcast_to(edges["bottom"][comp], gx.shape), mode)
        c[:, -1] = edge_coefficients(sx, np.broadcast_to(edges["top"][comp], gx.shape), mode)
        c[0, :] = edge_coefficients(sy, np.broadcast_to(edges["left"][comp], gy.shape), mode)
        c[-1, :] = edge_coefficients(sy, np.broadcast_to(edges["right"][comp], gy.shape), mode)
        out.append(c)
    return out


def interior(grid: np.ndarray) -> np.ndarray:
    return grid[1:-1, 1:-1]


def with_interior(ring: np.ndarray, inner: np.ndarray) -> np.ndarray:
    out = ring.copy()
    out[1:-1, 1:-1] = inner
    return out


def l2_project(sx: SplineSpace1D, sy: SplineSpace1D, f) -> np.ndarray:
    """Unconstrained L2 projection of ``f(x, y)`` onto ``sx (x) sy``."""
    rhs = load_vector(sx, sy, f)
    return solve_kron(BandedLU(mass(sx, sx)), BandedLU(mass(sy, sy)), rhs)


def l2_project_constrained(sx: SplineSpace1D, sy: SplineSpace1D, f,
                           ring: np.ndarray) -> np.ndarray:
    """L2 projection of ``f`` with the boundary ring coefficients held fixed."""
    sx, sy = sx.full(), sy.full()
    sx0, sy0 = sx.with_bc("zero-both-ends"), sy.with_bc("zero-both-ends")
    rhs = load_vector(sx0, sy0, f)
    rhs -= mass(sx0, sx) @ np.asarray(mass(sy0, sy) @ ring.T).T
    inner = solve_kron(BandedLU(mass(sx0, sx0)), BandedLU(mass(sy0, sy0)), rhs)
    return with_interior(ring, inner)


def evaluate_on_quadrature(coeffs: np.ndarray, sx: SplineSpace1D, sy: SplineSpace1D,
                           npts: int, dx: int = 0, dy: int = 0):
    """Field (or a partial derivative) at the tensor Gauss grid.

    Returns ``(x, y, wx, wy, values)`` with ``values[a, b]`` at ``(x[a], y[b])``.
    """
    xq, wx, bx = collocation(sx, npts, dx)
    yq, wy, by = collocation(sy, npts, dy)
    vals = np.asarray(bx @ np.asarray(by @ coeffs.T).T)
    return xq, yq, wx, wy, vals


def evaluate_on_points(coeffs: np.ndarray, sx: SplineSpace1D, sy: SplineSpace1D,
                       xs, ys, dx: int = 0, dy: int = 0) -> np.ndarray:
    """Field values on the tensor grid ``xs x ys`` (arbitrary points in [0, 1])."""
    bx = basis_matrix(sx, xs, dx)
    by = basis_matrix(sy, ys, dy)
    return np.asarray(bx @ np.asarray(by @ coeffs.T).T)
