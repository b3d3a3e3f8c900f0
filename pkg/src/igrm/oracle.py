"""Dense reference implementation of one time step, for verification.

Everything here is assembled on the 2D tensor Gauss grid with dense
matrices and solved with dense LAPACK; the basis is evaluated through
``scipy.interpolate.BSpline``. Nothing is shared with the banded Kronecker
path except the problem data and the boundary-ring coefficients, so a match
between the two is meaningful. Only intended for small meshes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from .fields import dirichlet_ring
from .splitting import FlowState, GMStepper


def _gauss_grid(n_elements: int, npts: int):
    t, w = np.polynomial.legendre.leggauss(npts)
    h = 1.0 / n_elements
    left = np.arange(n_elements) * h
    x = (left[:, None] + 0.5 * h * (t[None, :] + 1.0)).ravel()
    wx = np.tile(0.5 * h * w, n_elements)
    return x, wx


def _basis(space, x, nu=0):
    full = BSpline(np.asarray(space.kv), np.eye(space.n_basis), space.degree)
    vals = full(x, nu=nu) if nu else full(x)
    return vals[:, space.dofs]


@dataclass
class DenseStepResult:
    state: FlowState
    residuals: list  # residual representatives of the four directional solves
    loads: list


class DenseOracle:
    """Dense counterpart of :class:`~igrm.splitting.GMStepper`."""

    def __init__(self, stepper: GMStepper):
        self.st = stepper
        d = stepper.disc
        self.npts = stepper.npts
        self.x, wx = _gauss_grid(d.nx, self.npts)
        self.y, wy = _gauss_grid(d.ny, self.npts)
        self.w = np.outer(wx, wy).ravel()

    def _phi(self, sx, sy, dx=0, dy=0):
        return np.kron(_basis(sx, self.x, dx), _basis(sy, self.y, dy))

    def _values(self, coeffs, sx, sy, dx=0, dy=0):
        return self._phi(sx.full(), sy.full(), dx, dy) @ coeffs.ravel()

    def _gram(self, a, b):
        return a.T @ (self.w[:, None] * b)

    def _solve(self, G, B, L, igrm):
        if not igrm:
            return np.linalg.solve(B, L), np.zeros_like(L)
        nt, nu = B.shape
        A = np.zeros((nt + nu, nt + nu))
        A[:nt, :nt], A[:nt, nt:], A[nt:, :nt] = G, -B, B.T
        sol = np.linalg.solve(A, np.concatenate([-L, np.zeros(nu)]))
        return sol[nt:], sol[:nt]

    def step(self, state: FlowState) -> DenseStepResult:
        st, cfg, prob = self.st, self.st.cfg, self.st.problem
        d = st.disc
        tau, a = cfg.tau, cfg.tau / (2.0 * cfg.re)
        igrm = cfg.mode == "igrm"
        wx_conv, wy_conv = cfg.convection_weights if cfg.include_convection else (0.0, 0.0)
        X = np.repeat(self.x, len(self.y))
        Y = np.tile(self.y, len(self.x))
        t_half = state.t + 0.5 * tau
        f1, f2 = (np.broadcast_to(c, X.shape) for c in prob.forcing(X, Y, t_half))
        p_tilde = state.p + state.phi
        dpx = self._values(p_tilde, d.px, d.py, 1, 0)
        dpy = self._values(p_tilde, d.px, d.py, 0, 1)
        grad_p = (dpx, dpy)
        forcing = (f1, f2)
        residuals, loads = [], []

        def convection(v1, v2):
            u1, u2 = self._values(v1, d.vx, d.vy), self._values(v2, d.vx, d.vy)
            out = []
            for v in (v1, v2):
                out.append(u1 * self._values(v, d.vx, d.vy, 1, 0)
                           + u2 * self._values(v, d.vx, d.vy, 0, 1))
            return out

        # x-implicit half-step
        tx, vx0, vy0 = st.tx, st.vx0, st.vy0
        ring = dirichlet_ring(d.vx, d.vy, prob.dirichlet, t_half, prob.boundary_mode)
        T, Tdx = self._phi(tx, vy0), self._phi(tx, vy0, 1, 0)
        Tdy = self._phi(tx, vy0, 0, 1)
        U, Udx = self._phi(vx0, vy0), self._phi(vx0, vy0, 1, 0)
        G = self._gram(T, T) + self._gram(Tdx, Tdx)
        B = self._gram(T, U) + a * self._gram(Tdx, Udx)
        conv = convection(state.v1, state.v2)
        v_half = []
        for c, v in enumerate((state.v1, state.v2)):
            vals = self._values(v, d.vx, d.vy)
            src = vals + 0.5 * tau * (forcing[c] - grad_p[c]) - wx_conv * tau * conv[c]
            L = T.T @ (self.w * src) - a * Tdy.T @ (self.w * self._values(v, d.vx, d.vy, 0, 1))
            L -= T.T @ (self.w * self._values(ring[c], d.vx, d.vy))
            L -= a * Tdx.T @ (self.w * self._values(ring[c], d.vx, d.vy, 1, 0))
            u, r = self._solve(G, B, L, igrm)
            residuals.append(r)
            loads.append(L)
            full = ring[c].copy()
            full[1:-1, 1:-1] = u.reshape(vx0.dim, vy0.dim)
            v_half.append(full)

        # y-implicit step
        ty = st.ty
        ring = dirichlet_ring(d.vx, d.vy, prob.dirichlet, state.t + tau, prob.boundary_mode)
        T, Tdy = self._phi(vx0, ty), self._phi(vx0, ty, 0, 1)
        Tdx = self._phi(vx0, ty, 1, 0)
        Udy = self._phi(vx0, vy0, 0, 1)
        G = self._gram(T, T) + self._gram(Tdy, Tdy)
        B = self._gram(T, U) + a * self._gram(Tdy, Udy)
        conv = convection(*v_half)
        v_new = []
        for c, v in enumerate(v_half):
            vals = self._values(v, d.vx, d.vy)
            src = vals + 0.5 * tau * (forcing[c] - grad_p[c]) - wy_conv * tau * conv[c]
            L = T.T @ (self.w * src) - a * Tdx.T @ (self.w * self._values(v, d.vx, d.vy, 1, 0))
            L -= T.T @ (self.w * self._values(ring[c], d.vx, d.vy))
            L -= a * Tdy.T @ (self.w * self._values(ring[c], d.vx, d.vy, 0, 1))
            u, r = self._solve(G, B, L, igrm)
            residuals.append(r)
            loads.append(L)
            full = ring[c].copy()
            full[1:-1, 1:-1] = u.reshape(vx0.dim, vy0.dim)
            v_new.append(full)

        # penalty step and pressure update on the full pressure family
        P = self._phi(d.px, d.py)
        Pdx, Pdy = self._phi(d.px, d.py, 1, 0), self._phi(d.px, d.py, 0, 1)
        Mp = self._gram(P, P)

        def div(v1, v2):
            return self._values(v1, d.vx, d.vy, 1, 0) + self._values(v2, d.vx, d.vy, 0, 1)

        psi = np.linalg.solve(Mp + self._gram(Pdx, Pdx), -P.T @ (self.w * div(*v_new)) / tau)
        phi = np.linalg.solve(Mp + self._gram(Pdy, Pdy), P.T @ (self.w * (P @ psi)))
        p = state.p.ravel() + phi
        if cfg.chi > 0:
            avg = div(0.5 * (v_new[0] + state.v1), 0.5 * (v_new[1] + state.v2))
            p -= (cfg.chi / cfg.re) * np.linalg.solve(Mp, P.T @ (self.w * avg))
        shape = d.p_shape
        p = p.reshape(shape)
        p = p - p[0, 0]
        new = FlowState(v_new[0], v_new[1], p, phi.reshape(shape), state.n + 1,
                        (state.n + 1) * tau)
        return DenseStepResult(new, residuals, loads)


def max_relative_discrepancy(a: FlowState, b: FlowState) -> float:
    """Largest ``|a - b|_inf / |b|_inf`` over the velocity, pressure and penalty grids."""
    worst = 0.0
    for name in ("v1", "v2", "p", "phi"):
        x, y = getattr(a, name), getattr(b, name)
        scale = np.abs(y).max(initial=0.0)
        diff = np.abs(x - y).max(initial=0.0)
        if scale > 0:
            worst = max(worst, diff / scale)
        else:
            worst = max(worst, diff)
    return worst


class VerificationError(AssertionError):
    """The fast solver disagrees with the dense reference."""

    def __init__(self, gap: float, tol: float):
        self.gap = gap
        super().__init__(f"banded and dense steps differ by {gap:.3e} (tol {tol:g})")


ORACLE_MAX_ELEMENTS = 6
ORACLE_TOL = 1e-9


def oracle_check(stepper: GMStepper, state: FlowState, tol: float = ORACLE_TOL) -> float:
    """Advance ``state`` once with both paths; return the largest relative gap.

    Raises :class:`VerificationError` when the gap exceeds ``tol``.
    """
    d = stepper.disc
    if max(d.nx, d.ny) > ORACLE_MAX_ELEMENTS:
        raise ValueError(f"oracle check is limited to {ORACLE_MAX_ELEMENTS} elements "
                         f"per direction, got {d.nx}x{d.ny}")
    fast = stepper.advance(state.copy())
    dense = DenseOracle(stepper).step(state.copy()).state
    gap = max_relative_discrepancy(fast, dense)
    if not gap <= tol:
        raise VerificationError(gap, tol)
    return gap
