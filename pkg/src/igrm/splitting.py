"""Direction-split time stepping for incompressible flow on B-spline spaces.

One step of the scheme, for a flow state carrying ``v^n`` and ``p^{n-1/2}``:

1. pressure predictor ``p~ = p^{n-1/2} + phi^{n-1/2}``;
2. velocity half-step implicit in x (convection explicit), then a second
   half-step implicit in y, each solved either by plain Galerkin or by
   residual minimization with a test space enriched in the implicit direction;
3. penalty step ``(1 - d_xx) psi = -div v^{n+1} / tau``,
   ``(1 - d_yy) phi^{n+1/2} = psi``;
4. pressure update ``p^{n+1/2} = p^{n-1/2} + phi^{n+1/2} - chi/Re div(...)``.

Every linear system has Kronecker structure and is solved by 1D banded sweeps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .assembly import advection, load_vector, mass, stiffness
from .fields import dirichlet_ring, with_interior
from .kron_solver import (BandedLU, galerkin_operator, kron_apply, make_saddle,
                          solve_kron, solve_saddle)
from .spline_basis import SplineSpace1D, assembly_points, collocation, make_space

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    """The velocity norm left its admissible bound (numerical blow-up)."""

    def __init__(self, step: int, t: float, norm: float, bound: float):
        self.step = step
        self.t = t
        self.norm = norm
        self.bound = bound
        super().__init__(f"blow-up at step {step} (t={t:.6g}): "
                         f"|v|_L2={norm:.6g} > {bound:.6g}")


@dataclass(frozen=True)
class SpaceChoice:
    """Degree/continuity pairs of the trial and test families."""

    vel_trial: tuple = (3, 2)
    vel_test: tuple = (4, 2)
    p_trial: tuple = (3, 2)
    p_test: tuple = (4, 2)


@dataclass
class Discretization:
    """Per-direction spline spaces of one run."""

    nx: int
    ny: int
    choice: SpaceChoice = field(default_factory=SpaceChoice)

    def __post_init__(self):
        c = self.choice
        self.vx = make_space(*c.vel_trial, self.nx)
        self.vy = make_space(*c.vel_trial, self.ny)
        self.wx = make_space(*c.vel_test, self.nx)
        self.wy = make_space(*c.vel_test, self.ny)
        self.px = make_space(*c.p_trial, self.nx)
        self.py = make_space(*c.p_trial, self.ny)
        self.qx = make_space(*c.p_test, self.nx)
        self.qy = make_space(*c.p_test, self.ny)

    @property
    def vel_shape(self):
        return self.vx.n_basis, self.vy.n_basis

    @property
    def p_shape(self):
        return self.px.n_basis, self.py.n_basis

    @property
    def dim_trial(self) -> int:
        """Velocity and pressure trial dimension counted on full spline bases."""
        return 2 * self.vx.n_basis * self.vy.n_basis + self.px.n_basis * self.py.n_basis

    @property
    def dim_test(self) -> int:
        return 2 * self.wx.n_basis * self.wy.n_basis + self.qx.n_basis * self.qy.n_basis

    @property
    def dim_trial_dofs(self) -> int:
        """Free unknowns: interior velocity plus pressure with one dof pinned."""
        return (2 * (self.vx.n_basis - 2) * (self.vy.n_basis - 2)
                + self.px.n_basis * self.py.n_basis - 1)


CONVECTION_SCHEMES = ("split", "x-full", "x-half")


@dataclass
class StepperConfig:
    tau: float
    re: float = 1.0
    chi: float = 0.0
    mode: str = "igrm"
    include_convection: bool = False
    blowup_bound: float = 10.0
    convection: str = "split"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.re > 0:
            raise ValueError(f"Re must be positive, got {self.re}")
        if not 0.0 <= self.chi <= 1.0:
            raise ValueError(f"chi must lie in [0, 1], got {self.chi}")
        if self.mode not in ("galerkin", "igrm"):
            raise ValueError(f"mode must be 'galerkin' or 'igrm', got {self.mode!r}")
        if self.convection not in CONVECTION_SCHEMES:
            raise ValueError(f"convection must be one of {CONVECTION_SCHEMES}, "
                             f"got {self.convection!r}")

    @property
    def convection_weights(self):
        """Weights (times tau) of the explicit convection in the x and y half-steps."""
        return {"split": (0.5, 0.5), "x-full": (1.0, 0.0), "x-half": (0.5, 0.0)}[self.convection]


@dataclass
class FlowState:
    """Velocity at ``t_n`` and pressure/penalty at ``t_{n-1/2}``."""

    v1: np.ndarray
    v2: np.ndarray
    p: np.ndarray
    phi: np.ndarray
    n: int = 0
    t: float = 0.0

    def copy(self) -> "FlowState":
        return replace(self, v1=self.v1.copy(), v2=self.v2.copy(),
                       p=self.p.copy(), phi=self.phi.copy())


def pressure_predictor(state: FlowState) -> np.ndarray:
    return state.p + state.phi


def _forcing_load(sx, sy, f, t, npts):
    cache = {}

    def comp(i):
        def fi(x, y):
            key = (x.shape, y.shape)
            if key not in cache:
                cache[key] = f(x, y, t)
            return cache[key][i]
        return fi

    return [load_vector(sx, sy, comp(i), npts) for i in range(2)]


class GMStepper:
    """Owns the factored operators of one (discretization, config) pair."""

    def __init__(self, disc: Discretization, cfg: StepperConfig, problem):
        self.disc = disc
        self.cfg = cfg
        self.problem = problem
        self.max_orthogonality = 0.0
        self.max_residual_ratio = 0.0
        self.initial_norm = None
        d = disc
        tau, re = cfg.tau, cfg.re
        a = tau / (2.0 * re)
        self.a = a
        vx0, vy0 = d.vx.with_bc("zero-both-ends"), d.vy.with_bc("zero-both-ends")
        self.vx0, self.vy0 = vx0, vy0
        igrm = cfg.mode == "igrm"
        tx = d.wx.with_bc("zero-both-ends") if igrm else vx0
        ty = d.wy.with_bc("zero-both-ends") if igrm else vy0
        self.tx, self.ty = tx, ty

        # x half-step: rows tx (x) vy0
        self.Mx_tf, Kx_tf = mass(tx, d.vx), stiffness(tx, d.vx)
        self.Bx_tf = self.Mx_tf + a * Kx_tf
        self.My_if = mass(vy0, d.vy)
        self.Ey_if = self.My_if - a * stiffness(vy0, d.vy)
        self.Ax_tp, self.Mx_tp = advection(tx, d.px), mass(tx, d.px)
        self.My_ip, self.Ay_ip = mass(vy0, d.py), advection(vy0, d.py)
        # y step: rows vx0 (x) ty
        self.My_tf, Ky_tf = mass(ty, d.vy), stiffness(ty, d.vy)
        self.By_tf = self.My_tf + a * Ky_tf
        self.Mx_if = mass(vx0, d.vx)
        self.Ex_if = self.Mx_if - a * stiffness(vx0, d.vx)
        self.Ax_ip, self.Mx_ip = advection(vx0, d.px), mass(vx0, d.px)
        self.My_tp, self.Ay_tp = mass(ty, d.py), advection(ty, d.py)

        if igrm:
            self.saddle_x = make_saddle(tx, vx0, vy0, tau, re, "x")
            self.saddle_y = make_saddle(ty, vy0, vx0, tau, re, "y")
        else:
            self.gal_x = BandedLU(galerkin_operator(vx0, tau, re))
            self.gal_y = BandedLU(galerkin_operator(vy0, tau, re))
            self.mass_x0 = BandedLU(mass(vx0, vx0))
            self.mass_y0 = BandedLU(mass(vy0, vy0))

        # penalty step on the full pressure family
        self.Mpx, self.Mpy = mass(d.px, d.px), mass(d.py, d.py)
        self.Mpx_lu, self.Mpy_lu = BandedLU(self.Mpx), BandedLU(self.Mpy)
        self.Gpx_lu = BandedLU(self.Mpx + stiffness(d.px, d.px))
        self.Gpy_lu = BandedLU(self.Mpy + stiffness(d.py, d.py))
        self.Ax_pv, self.Mx_pv = advection(d.px, d.vx), mass(d.px, d.vx)
        self.My_pv, self.Ay_pv = mass(d.py, d.vy), advection(d.py, d.vy)
        # full velocity mass for norm tracking
        self.Mvx, self.Mvy = mass(d.vx, d.vx), mass(d.vy, d.vy)

        # load quadrature: exact for the trilinear convection form (test * v * grad v)
        trilinear = (max(tx.degree, ty.degree) + 2 * d.vx.degree) // 2 + 1
        self.npts = max(assembly_points(tx, ty, d.vx, d.px), trilinear)

    # -- building blocks ---------------------------------------------------

    def convection_load(self, v1: np.ndarray, v2: np.ndarray, test_x: SplineSpace1D,
                        test_y: SplineSpace1D, npts: int | None = None):
        """Loads ``((v . grad) v, w)`` for ``w`` in ``test_x (x) test_y``."""
        d = self.disc
        if npts is None:
            npts = self.npts
        _, wx, bx = collocation(d.vx, npts, 0)
        _, _, dbx = collocation(d.vx, npts, 1)
        _, wy, by = collocation(d.vy, npts, 0)
        _, _, dby = collocation(d.vy, npts, 1)
        _, _, tbx = collocation(test_x, npts, 0)
        _, _, tby = collocation(test_y, npts, 0)

        def ev(c, ox, oy):
            return np.asarray(ox @ np.asarray(oy @ c.T).T)

        u1, u2 = ev(v1, bx, by), ev(v2, bx, by)
        c1 = u1 * ev(v1, dbx, by) + u2 * ev(v1, bx, dby)
        c2 = u1 * ev(v2, dbx, by) + u2 * ev(v2, bx, dby)
        w = wx[:, None] * wy[None, :]
        return [np.asarray(tbx.T @ np.asarray(tby.T @ (c * w).T).T) for c in (c1, c2)]

    def _check_residual(self, op, L, r):
        self.max_orthogonality = max(self.max_orthogonality, op.last_orthogonality)
        ln = np.linalg.norm(L)
        if ln > 0:
            self.max_residual_ratio = max(self.max_residual_ratio, np.linalg.norm(r) / ln)

    def _lift_and_solve(self, L, direction):
        if self.cfg.mode == "igrm":
            op = self.saddle_x if direction == "x" else self.saddle_y
            u, r = solve_saddle(op, L)
            self._check_residual(op, L, r)
            return u
        if direction == "x":
            return solve_kron(self.gal_x, self.mass_y0, L)
        return solve_kron(self.mass_x0, self.gal_y, L)

    def x_rhs(self, state: FlowState, p_tilde: np.ndarray, t_half: float, ring):
        """Right-hand sides of the x-implicit half-step (boundary lifting included)."""
        tau = self.cfg.tau
        prob = self.problem
        f = _forcing_load(self.tx, self.vy0, prob.forcing, t_half, self.npts)
        wconv = self.cfg.convection_weights[0]
        if self.cfg.include_convection and wconv:
            conv = self.convection_load(state.v1, state.v2, self.tx, self.vy0)
        else:
            conv = [0.0, 0.0]
        grad_p = [kron_apply(self.Ax_tp, self.My_ip, p_tilde),
                  kron_apply(self.Mx_tp, self.Ay_ip, p_tilde)]
        out = []
        for c, v in enumerate((state.v1, state.v2)):
            L = kron_apply(self.Mx_tf, self.Ey_if, v)
            L -= kron_apply(self.Bx_tf, self.My_if, ring[c])
            L += 0.5 * tau * (f[c] - grad_p[c]) - wconv * tau * conv[c]
            out.append(L)
        return out

    def y_rhs(self, v_half, p_tilde: np.ndarray, t_half: float, ring):
        tau = self.cfg.tau
        f = _forcing_load(self.vx0, self.ty, self.problem.forcing, t_half, self.npts)
        wconv = self.cfg.convection_weights[1]
        if self.cfg.include_convection and wconv:
            conv = self.convection_load(v_half[0], v_half[1], self.vx0, self.ty)
        else:
            conv = [0.0, 0.0]
        grad_p = [kron_apply(self.Ax_ip, self.My_tp, p_tilde),
                  kron_apply(self.Mx_ip, self.Ay_tp, p_tilde)]
        out = []
        for c, v in enumerate(v_half):
            L = kron_apply(self.Ex_if, self.My_tf, v)
            L -= kron_apply(self.Mx_if, self.By_tf, ring[c])
            L += 0.5 * tau * (f[c] - grad_p[c]) - wconv * tau * conv[c]
            out.append(L)
        return out

    def ring(self, t: float):
        d = self.disc
        return dirichlet_ring(d.vx, d.vy, self.problem.dirichlet, t,
                              self.problem.boundary_mode)

    def velocity_half_step_x(self, state: FlowState, p_tilde: np.ndarray):
        t_half = state.t + 0.5 * self.cfg.tau
        ring = self.ring(t_half)
        Ls = self.x_rhs(state, p_tilde, t_half, ring)
        return [with_interior(ring[c], self._lift_and_solve(Ls[c], "x")) for c in range(2)]

    def velocity_step_y(self, state: FlowState, v_half, p_tilde: np.ndarray):
        t_half = state.t + 0.5 * self.cfg.tau
        ring = self.ring(state.t + self.cfg.tau)
        Ls = self.y_rhs(v_half, p_tilde, t_half, ring)
        return [with_interior(ring[c], self._lift_and_solve(Ls[c], "y")) for c in range(2)]

    def divergence_load(self, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
        """``(div v, w)`` for ``w`` in the full pressure family."""
        return kron_apply(self.Ax_pv, self.My_pv, v1) + kron_apply(self.Mx_pv, self.Ay_pv, v2)

    def penalty_step(self, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
        rhs = -self.divergence_load(v1, v2) / self.cfg.tau
        psi = solve_kron(self.Gpx_lu, self.Mpy_lu, rhs)
        return solve_kron(self.Mpx_lu, self.Gpy_lu, kron_apply(self.Mpx, self.Mpy, psi))

    def pressure_update(self, state: FlowState, phi: np.ndarray, v_new, v_old) -> np.ndarray:
        p = state.p + phi
        if self.cfg.chi > 0.0:
            avg = [0.5 * (a + b) for a, b in zip(v_new, v_old)]
            div = solve_kron(self.Mpx_lu, self.Mpy_lu, self.divergence_load(*avg))
            p = p - (self.cfg.chi / self.cfg.re) * div
        # pin the pressure constant: p(0, 0) = 0 (a uniform coefficient shift)
        return p - p[0, 0]

    def velocity_norm(self, v1: np.ndarray, v2: np.ndarray) -> float:
        s = sum(float(np.sum(v * kron_apply(self.Mvx, self.Mvy, v))) for v in (v1, v2))
        return float(np.sqrt(max(s, 0.0)))

    # -- the full step -----------------------------------------------------

    def advance(self, state: FlowState) -> FlowState:
        if self.initial_norm is None:
            self.initial_norm = self.velocity_norm(state.v1, state.v2)
        tau = self.cfg.tau
        p_tilde = pressure_predictor(state)
        v_half = self.velocity_half_step_x(state, p_tilde)
        v_new = self.velocity_step_y(state, v_half, p_tilde)
        phi = self.penalty_step(*v_new)
        p = self.pressure_update(state, phi, v_new, (state.v1, state.v2))
        new = FlowState(v_new[0], v_new[1], p, phi, state.n + 1, (state.n + 1) * tau)
        self._check_blowup(new)
        return new

    def _check_blowup(self, state: FlowState):
        norm = self.velocity_norm(state.v1, state.v2)
        bound = self.cfg.blowup_bound * max(1.0, self.initial_norm or 0.0)
        finite = all(np.all(np.isfinite(a)) for a in (state.v1, state.v2, state.p))
        if not finite or not np.isfinite(norm) or norm > bound:
            raise DivergenceError(state.n, state.t, norm, bound)


def advance(state: FlowState, stepper: GMStepper) -> FlowState:
    return stepper.advance(state)
