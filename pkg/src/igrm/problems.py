"""Manufactured-solution and lid-driven cavity problem definitions.

Every callable takes broadcastable coordinate arrays ``x``, ``y`` and a scalar
time ``t``; vector fields return a ``(v1, v2)`` tuple of arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Optional

import numpy as np

if TYPE_CHECKING:
    from .splitting import FlowState

Field = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
VectorField = Callable[[np.ndarray, np.ndarray, float], tuple]


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    re: float
    t_final: float
    forcing: VectorField
    dirichlet: VectorField
    include_convection: bool
    exact_v: Optional[VectorField] = None
    exact_p: Optional[Field] = None
    exact_grad_v: Optional[Callable] = None
    initial_v: Optional[VectorField] = None
    initial_p: Optional[Field] = None
    # "interpolate": spline interpolation of the edge trace at Greville points;
    # "anchor": coefficient = data at the Greville point (discontinuous data)
    boundary_mode: str = "interpolate"
    defaults: dict = field(default_factory=dict)

    @property
    def has_exact(self) -> bool:
        return self.exact_v is not None


def _zero(x, y, t=0.0):
    return np.zeros(np.broadcast(x, y).shape)


def _mms_fields():
    def v(x, y, t):
        s = y + t
        return np.sin(x) * np.sin(s), np.cos(x) * np.cos(s)

    def p(x, y, t):
        return np.cos(x) * np.sin(y + t)

    def grad_v(x, y, t):
        s = y + t
        # ((dv1/dx, dv1/dy), (dv2/dx, dv2/dy))
        return ((np.cos(x) * np.sin(s), np.sin(x) * np.cos(s)),
                (-np.sin(x) * np.cos(s), -np.cos(x) * np.sin(s)))

    return v, p, grad_v


def _mms_forcing(re: float, convection: bool):
    inv_re = 1.0 / re

    def f(x, y, t):
        s = y + t
        sx, cx, ss, cs = np.sin(x), np.cos(x), np.sin(s), np.cos(s)
        # dt v - (1/Re) lap v + grad p   (lap v = -2 v)
        f1 = sx * cs + 2.0 * inv_re * sx * ss - sx * ss
        f2 = -cx * ss + 2.0 * inv_re * cx * cs + cx * cs
        if convection:
            f1 = f1 + sx * cx
            f2 = f2 - ss * cs
        return f1, f2

    return f


def stokes_mms() -> ProblemSpec:
    """Non-stationary Stokes flow with a smooth travelling manufactured solution."""
    v, p, grad_v = _mms_fields()
    return ProblemSpec(
        name="stokes-mms", re=1.0, t_final=2.0,
        forcing=_mms_forcing(1.0, convection=False),
        dirichlet=v, include_convection=False,
        exact_v=v, exact_p=p, exact_grad_v=grad_v,
        initial_v=lambda x, y, t=0.0: v(x, y, 0.0),
        initial_p=lambda x, y, t=0.0: p(x, y, 0.0),
    )


def ns_mms(re: float = 1000.0) -> ProblemSpec:
    """Navier-Stokes version of the manufactured problem at Reynolds number ``re``."""
    if re <= 0:
        raise ValueError(f"Re must be positive, got {re}")
    v, p, grad_v = _mms_fields()
    return ProblemSpec(
        name="ns-mms", re=float(re), t_final=2.0,
        forcing=_mms_forcing(re, convection=True),
        dirichlet=v, include_convection=True,
        exact_v=v, exact_p=p, exact_grad_v=grad_v,
        initial_v=lambda x, y, t=0.0: v(x, y, 0.0),
        initial_p=lambda x, y, t=0.0: p(x, y, 0.0),
    )


def cavity(re: float = 1000.0) -> ProblemSpec:
    """Lid-driven cavity: unit tangential velocity on y=1 (corners included)."""
    if re <= 0:
        raise ValueError(f"Re must be positive, got {re}")

    def g(x, y, t):
        lid = np.broadcast_to(np.asarray(y, dtype=float) >= 1.0, np.broadcast(x, y).shape)
        return lid.astype(float), _zero(x, y)

    return ProblemSpec(
        name="cavity", re=float(re), t_final=10.0,
        forcing=lambda x, y, t: (_zero(x, y), _zero(x, y)),
        dirichlet=g, include_convection=True,
        initial_v=lambda x, y, t=0.0: (_zero(x, y), _zero(x, y)),
        initial_p=_zero,
        boundary_mode="anchor",
    )


def zero_problem(re: float = 1.0, convection: bool = False) -> ProblemSpec:
    """All data identically zero; the exact solution is the zero flow."""
    zv = lambda x, y, t=0.0: (_zero(x, y), _zero(x, y))  # noqa: E731
    zg = lambda x, y, t=0.0: ((_zero(x, y), _zero(x, y)),  # noqa: E731
                              (_zero(x, y), _zero(x, y)))
    return ProblemSpec(
        name="zero", re=float(re), t_final=1.0,
        forcing=zv, dirichlet=zv, include_convection=convection,
        exact_v=zv, exact_p=_zero, exact_grad_v=zg,
        initial_v=zv, initial_p=_zero,
    )


PROBLEMS = {
    "stokes-mms": lambda re=None: stokes_mms(),
    "ns-mms": lambda re=None: ns_mms(1000.0 if re is None else re),
    "cavity": lambda re=None: cavity(1000.0 if re is None else re),
    "zero": lambda re=None: zero_problem(1.0 if re is None else re),
}


def get_problem(name: str, re: float | None = None) -> ProblemSpec:
    try:
        return PROBLEMS[name](re)
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


def project_initial(problem: ProblemSpec, disc) -> "FlowState":
    """Initial flow state: constrained L2 projection of the initial velocity
    (boundary ring from the Dirichlet data at t=0), L2 projection of the
    initial pressure, zero penalty variable."""
    from .fields import dirichlet_ring, l2_project, l2_project_constrained
    from .splitting import FlowState

    ring = dirichlet_ring(disc.vx, disc.vy, problem.dirichlet, 0.0, problem.boundary_mode)
    v = []
    for c in range(2):
        fc = lambda x, y, c=c: problem.initial_v(x, y, 0.0)[c]  # noqa: E731
        v.append(l2_project_constrained(disc.vx, disc.vy, fc, ring[c]))
    p = l2_project(disc.px, disc.py, lambda x, y: problem.initial_p(x, y, 0.0))
    p = p - p[0, 0]
    return FlowState(v[0], v[1], p, np.zeros_like(p), 0, 0.0)
