"""Banded LU and linear-cost solvers for Kronecker-structured systems.

Grids are stored with the x-index on axis 0 and the y-index on axis 1, and
flattened row-major, so ``(Ax kron Ay) vec(U) == vec(Ax @ U @ Ay.T)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .assembly import BandedMatrix, mass, stiffness
from .spline_basis import SplineSpace1D


class SingularMatrixError(np.linalg.LinAlgError):
    """Zero pivot met during banded LU factorization."""


class InfSupError(SingularMatrixError):
    """The test space cannot control the trial space (saddle system singular)."""


class KronShapeError(ValueError):
    pass


# pivots below this fraction of the largest entry count as exact zeros
_PIVOT_RTOL = 1e3 * np.finfo(float).eps


class BandedLU:
    """Partial-pivoting LU of a square banded matrix (LAPACK ``gbtrf``)."""

    def __init__(self, a: BandedMatrix):
        n, nc = a.shape
        if n != nc:
            raise KronShapeError(f"banded LU needs a square matrix, got {a.shape}")
        kl, ku = a.lower, a.upper
        ab = np.zeros((2 * kl + ku + 1, n))
        ab[kl:] = a.data
        lu, piv, info = lapack.dgbtrf(ab, kl, ku)
        scale = np.abs(a.data).max() if a.data.size else 0.0
        diag = lu[kl + ku]
        if info > 0 or scale == 0.0 or np.abs(diag).min() <= _PIVOT_RTOL * scale:
            raise SingularMatrixError(
                f"zero pivot in banded LU of a {n}x{n} matrix"
                + (f" at row {info - 1}" if info > 0 else "")
            )
        self.lu = lu
        self.piv = piv
        self.kl = kl
        self.ku = ku
        self.n = n
        self.matrix = a

    def solve(self, b: np.ndarray, trans: bool = False) -> np.ndarray:
        """Solve ``A x = b`` (or ``A^T x = b``); ``b`` may hold many columns."""
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise KronShapeError(f"rhs has {b.shape[0]} rows, matrix has {self.n}")
        x, info = lapack.dgbtrs(self.lu, self.kl, self.ku, b, self.piv,
                                trans=1 if trans else 0)
        if info != 0:
            raise SingularMatrixError(f"gbtrs failed with info={info}")
        return x


def band_lu(a: BandedMatrix) -> BandedLU:
    return BandedLU(a)


def solve_kron(ax: BandedLU, ay: BandedLU, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(Ax kron Ay) vec(U) = vec(rhs)``, i.e. ``Ax U Ay^T = rhs``.

    Two sweeps of banded solves: ``Ay`` along every x-line, then ``Ax`` along
    every y-line.
    """
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (ax.n, ay.n):
        raise KronShapeError(f"rhs shape {rhs.shape} != ({ax.n}, {ay.n})")
    w = ay.solve(rhs.T).T
    return ax.solve(w)


def kron_apply(ax, ay, u: np.ndarray) -> np.ndarray:
    """``Ax U Ay^T`` for banded (or sparse) factors."""
    return np.asarray(ax @ np.asarray(ay @ u.T).T)


def _interleave_order(test: SplineSpace1D, trial: SplineSpace1D) -> np.ndarray:
    """Permutation of ``[r; u]`` unknowns sorted by Greville position."""
    gt = test.full().greville()[test.dofs]
    gu = trial.full().greville()[trial.dofs]
    keys = np.concatenate([gt, gu])
    kind = np.concatenate([np.zeros(len(gt)), np.ones(len(gu))])
    return np.lexsort((kind, keys))


@dataclass
class SaddleOperator:
    """Factored per-direction residual-minimization block system.

    ``G1 = M + K`` on the test space of the enriched direction,
    ``B1 = M + tau/(2 Re) K`` from trial to test in that direction, and the
    perpendicular trial mass. The 1D block matrix ``[[G1, -B1], [B1^T, 0]]`` is
    permuted so test and trial unknowns interleave along the knot spans, which
    keeps its LU bandwidth proportional to the degree.
    """

    direction: str
    test_space: SplineSpace1D
    trial_space: SplineSpace1D
    perp_space: SplineSpace1D
    G1: BandedMatrix
    B1: BandedMatrix
    M_perp: BandedMatrix
    block: BandedMatrix
    order: np.ndarray
    block_lu: BandedLU
    perp_lu: BandedLU
    last_orthogonality: float = 0.0

    @property
    def n_test(self) -> int:
        return self.G1.shape[0]

    @property
    def n_trial(self) -> int:
        return self.B1.shape[1]

    @property
    def line_dim(self) -> int:
        return self.n_test + self.n_trial

    def to_natural(self, grid: np.ndarray) -> np.ndarray:
        return grid if self.direction == "x" else grid.T

    def solve(self, L: np.ndarray):
        return solve_saddle(self, L)


def make_saddle(test_space: SplineSpace1D, trial_space: SplineSpace1D,
                perp_trial_space: SplineSpace1D, tau: float, re: float,
                direction: str) -> SaddleOperator:
    if tau <= 0 or re <= 0:
        raise ValueError(f"tau and Re must be positive, got tau={tau}, Re={re}")
    if direction not in ("x", "y"):
        raise ValueError(f"direction must be 'x' or 'y', got {direction!r}")
    pair = f"test S^{test_space.degree},{test_space.continuity} / " \
           f"trial S^{trial_space.degree},{trial_space.continuity}"
    if test_space.dim < trial_space.dim:
        raise InfSupError(f"inf-sup failure for {pair}: "
                          f"dim(test)={test_space.dim} < dim(trial)={trial_space.dim}")
    g1 = mass(test_space, test_space) + stiffness(test_space, test_space)
    b1 = mass(test_space, trial_space) + (tau / (2.0 * re)) * stiffness(test_space, trial_space)
    nt, nu = g1.shape[0], b1.shape[1]
    full = np.zeros((nt + nu, nt + nu))
    full[:nt, :nt] = g1.todense()
    full[:nt, nt:] = -b1.todense()
    full[nt:, :nt] = b1.todense().T
    order = _interleave_order(test_space, trial_space)
    block = BandedMatrix.from_dense(full[np.ix_(order, order)])
    try:
        block_lu = BandedLU(block)
    except SingularMatrixError as exc:
        raise InfSupError(f"inf-sup failure for {pair}: {exc}") from exc
    m_perp = mass(perp_trial_space, perp_trial_space)
    return SaddleOperator(direction, test_space, trial_space, perp_trial_space,
                          g1, b1, m_perp, block, order, block_lu, BandedLU(m_perp))


def solve_saddle(op: SaddleOperator, L: np.ndarray):
    """Solve ``[[G kron M, -B kron M], [B^T kron M, 0]] [r; u] = [-L; 0]``.

    ``L`` and the returned ``(u, r)`` use natural grid orientation (x on axis
    0); the enriched axis is ``op.direction``.
    """
    L = np.asarray(L, dtype=float)
    lt = op.to_natural(L)  # enriched index first
    if lt.shape != (op.n_test, op.perp_lu.n):
        raise KronShapeError(f"L shape {L.shape} does not match saddle operator "
                             f"({op.n_test} test x {op.perp_lu.n} perp)")
    nt = op.n_test
    # sweep 1: perpendicular mass inverse along every enriched-index line
    lhat = op.perp_lu.solve(lt.T).T
    rhs = np.zeros((op.line_dim, lhat.shape[1]))
    rhs[:nt] = -lhat
    # sweep 2: interleaved 1D saddle solve along every perpendicular line
    sol = np.empty_like(rhs)
    sol[op.order] = op.block_lu.solve(rhs[op.order])
    r, u = sol[:nt], sol[nt:]
    ortho = np.abs(kron_apply(op.B1.csr.T, op.M_perp.csr, r)).max(initial=0.0)
    scale = np.abs(lt).max(initial=0.0)
    op.last_orthogonality = ortho / scale if scale > 0 else ortho
    return op.to_natural(u), op.to_natural(r)


def galerkin_operator(space: SplineSpace1D, tau: float, re: float) -> BandedMatrix:
    """Square ``M + tau/(2 Re) K`` on one space (the Galerkin velocity block)."""
    return mass(space, space) + (tau / (2.0 * re)) * stiffness(space, space)
