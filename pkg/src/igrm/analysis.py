"""Norms, errors against exact fields, time series and order fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fields import evaluate_on_quadrature
from .spline_basis import SplineSpace1D


class OrderFitError(ValueError):
    pass


def error_points(*spaces: SplineSpace1D) -> int:
    """Gauss points per element for error quadrature (one more than assembly)."""
    return max(s.degree for s in spaces) + 2


def _weights(wx, wy):
    return wx[:, None] * wy[None, :]


def field_error(coeffs: np.ndarray, sx: SplineSpace1D, sy: SplineSpace1D, exact, t: float,
                norm: str = "L2", exact_grad=None, npts: int | None = None):
    """Absolute and relative error of a scalar spline field.

    ``exact(x, y, t)`` gives values, ``exact_grad(x, y, t)`` the pair
    ``(d/dx, d/dy)`` (needed for ``norm="H1"``, the full H1 norm). The relative
    error is ``None`` when the exact field has zero norm.
    """
    sq_err, sq_ref = _field_sq(coeffs, sx, sy, exact, t, norm, exact_grad, npts)
    a, r = math.sqrt(sq_err), math.sqrt(sq_ref)
    return a, (a / r if r > 0.0 else None)


def _field_sq(coeffs, sx, sy, exact, t, norm, exact_grad, npts):
    if norm not in ("L2", "H1"):
        raise ValueError(f"norm must be 'L2' or 'H1', got {norm!r}")
    if npts is None:
        npts = error_points(sx, sy)
    x, y, wx, wy, uh = evaluate_on_quadrature(coeffs, sx, sy, npts)
    X, Y = x[:, None], y[None, :]
    w = _weights(wx, wy)
    u = np.broadcast_to(exact(X, Y, t), uh.shape)
    sq_err = float(np.sum((uh - u) ** 2 * w))
    sq_ref = float(np.sum(u ** 2 * w))
    if norm == "H1":
        if exact_grad is None:
            raise ValueError("H1 error needs the exact gradient")
        gx, gy = exact_grad(X, Y, t)
        for (dx, dy), g in (((1, 0), gx), ((0, 1), gy)):
            dh = evaluate_on_quadrature(coeffs, sx, sy, npts, dx, dy)[4]
            g = np.broadcast_to(g, dh.shape)
            sq_err += float(np.sum((dh - g) ** 2 * w))
            sq_ref += float(np.sum(g ** 2 * w))
    return sq_err, sq_ref


def velocity_error(v1, v2, sx, sy, exact_v, t, norm="L2", exact_grad_v=None):
    """Vector-field error ``(|e|, |e| / |v|)`` summing both components."""
    sq_e = sq_r = 0.0
    for c, coeffs in enumerate((v1, v2)):
        ex = lambda x, y, tt, c=c: exact_v(x, y, tt)[c]  # noqa: E731
        eg = None
        if exact_grad_v is not None:
            eg = lambda x, y, tt, c=c: exact_grad_v(x, y, tt)[c]  # noqa: E731
        e, r = _field_sq(coeffs, sx, sy, ex, t, norm, eg, None)
        sq_e += e
        sq_r += r
    a = math.sqrt(sq_e)
    return a, (a / math.sqrt(sq_r) if sq_r > 0 else None)


def pressure_error(p_coeffs, sx, sy, exact_p, t_compare: float):
    """Mean-adjusted relative L2 pressure error at ``t_compare``.

    The constant mode of ``p_h - p`` is removed before taking the norm; the
    reference is the plain L2 norm of the exact pressure.
    """
    return pressure_error_pair(p_coeffs, sx, sy, exact_p, t_compare)[1]


def pressure_error_pair(p_coeffs, sx, sy, exact_p, t_compare: float):
    """``(absolute, relative)`` mean-adjusted pressure error; relative may be None."""
    npts = error_points(sx, sy)
    x, y, wx, wy, ph = evaluate_on_quadrature(p_coeffs, sx, sy, npts)
    w = _weights(wx, wy)
    p = np.broadcast_to(exact_p(x[:, None], y[None, :], t_compare), ph.shape)
    d = ph - p
    d = d - np.sum(d * w) / np.sum(w)
    a = math.sqrt(float(np.sum(d ** 2 * w)))
    ref = math.sqrt(float(np.sum(p ** 2 * w)))
    return a, (a / ref if ref > 0 else None)


def l2_norm(coeffs, sx, sy) -> float:
    x, y, wx, wy, u = evaluate_on_quadrature(coeffs, sx, sy, error_points(sx, sy))
    return math.sqrt(float(np.sum(u ** 2 * _weights(wx, wy))))


def h1_norm(coeffs, sx, sy) -> float:
    """Full H1 norm (L2 part plus gradient seminorm)."""
    npts = error_points(sx, sy)
    total = 0.0
    for dx, dy in ((0, 0), (1, 0), (0, 1)):
        x, y, wx, wy, u = evaluate_on_quadrature(coeffs, sx, sy, npts, dx, dy)
        total += float(np.sum(u ** 2 * _weights(wx, wy)))
    return math.sqrt(total)


def divergence_norm(v1, v2, sx, sy) -> float:
    """``|d_x v1 + d_y v2|_{L2}``."""
    npts = error_points(sx, sy)
    x, y, wx, wy, d1 = evaluate_on_quadrature(v1, sx, sy, npts, 1, 0)
    d2 = evaluate_on_quadrature(v2, sx, sy, npts, 0, 1)[4]
    return math.sqrt(float(np.sum((d1 + d2) ** 2 * _weights(wx, wy))))


def fit_order(pairs) -> float:
    """Least-squares slope of ``log(error)`` against ``log(parameter)``."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise OrderFitError("need at least three (parameter, error) pairs")
    h = np.array([p[0] for p in pairs], dtype=float)
    e = np.array([p[1] for p in pairs], dtype=float)
    if np.any(~np.isfinite(h)) or np.any(~np.isfinite(e)) or np.any(h <= 0) or np.any(e <= 0):
        raise OrderFitError("order fitting needs positive, finite values")
    if np.unique(h).size < 2:
        raise OrderFitError("parameters must not all be equal")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


CSV_COLUMNS = ("step", "t", "vel_l2", "vel_h1", "p_l2", "div_l2",
               "err_vel_l2_rel", "err_vel_h1_rel", "err_p_l2_rel")


@dataclass
class NormRecord:
    step: int
    t: float
    vel_l2: float
    vel_h1: float
    p_l2: float
    div_l2: float
    err_vel_l2_rel: Optional[float] = None
    err_vel_h1_rel: Optional[float] = None
    err_p_l2_rel: Optional[float] = None
    # absolute errors are kept alongside (not part of the CSV schema)
    err_vel_l2_abs: Optional[float] = None
    err_vel_h1_abs: Optional[float] = None
    err_p_l2_abs: Optional[float] = None

    def row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


@dataclass
class NormSeries:
    records: list = field(default_factory=list)
    blowup_step: Optional[int] = None

    def append(self, rec: NormRecord):
        if self.records and rec.t < self.records[-1].t:
            raise ValueError("time column must be monotone")
        self.records.append(rec)

    def mark_blowup(self, step: int):
        self.blowup_step = step

    @property
    def last(self) -> NormRecord:
        return self.records[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)


def measure(state, disc, problem, tau: float) -> NormRecord:
    """Norms of a flow state plus, when exact fields exist, relative errors."""
    vx, vy, px, py = disc.vx, disc.vy, disc.px, disc.py
    vel_l2 = math.hypot(l2_norm(state.v1, vx, vy), l2_norm(state.v2, vx, vy))
    vel_h1 = math.hypot(h1_norm(state.v1, vx, vy), h1_norm(state.v2, vx, vy))
    rec = NormRecord(state.n, state.t, vel_l2, vel_h1, l2_norm(state.p, px, py),
                     divergence_norm(state.v1, state.v2, vx, vy))
    if problem.has_exact:
        rec.err_vel_l2_abs, rec.err_vel_l2_rel = velocity_error(
            state.v1, state.v2, vx, vy, problem.exact_v, state.t)
        rec.err_vel_h1_abs, rec.err_vel_h1_rel = velocity_error(
            state.v1, state.v2, vx, vy, problem.exact_v, state.t, "H1", problem.exact_grad_v)
        # the pressure carries the half index t_n - tau/2 (t=0 holds p_0)
        t_p = max(state.t - 0.5 * tau, 0.0) if state.n > 0 else 0.0
        rec.err_p_l2_abs, rec.err_p_l2_rel = pressure_error_pair(
            state.p, px, py, problem.exact_p, t_p)
    return rec
