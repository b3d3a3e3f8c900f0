"""Experiment orchestration: single runs, parameter sweeps and file output.

A run writes into its output directory

* ``norms.csv``: one row per time step (``analysis.CSV_COLUMNS``),
* ``fields.txt``: final fields sampled on a uniform grid, ``x y v1 v2 p`` rows,
  y-major (x varies fastest), plus ``fields.vtk`` on request,
* ``summary.txt``: ``key=value`` lines.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import CSV_COLUMNS, NormSeries, OrderFitError, fit_order, measure
from .fields import evaluate_on_points
from .oracle import ORACLE_MAX_ELEMENTS, VerificationError, oracle_check
from .problems import PROBLEMS, get_problem, project_initial
from .splitting import (CONVECTION_SCHEMES, Discretization, DivergenceError, GMStepper,
                        SpaceChoice, StepperConfig)

log = logging.getLogger(__name__)

MAX_DEGREE = 12


class ExitStatus(enum.IntEnum):
    OK = 0
    CONFIG_ERROR = 2
    BLOWUP = 3
    VERIFICATION_FAILED = 4


class ConfigError(ValueError):
    pass


def _space_dim(m, k, n):
    return n * (m - k) + k + 1


@dataclass
class RunConfig:
    problem: str = "stokes-mms"
    nx: int = 20
    ny: Optional[int] = None
    vel_trial: tuple = (3, 2)
    vel_test: tuple = (4, 2)
    p_trial: tuple = (3, 2)
    p_test: tuple = (4, 2)
    re: Optional[float] = None
    tau: float = 1.0 / 64
    tmax: Optional[float] = None
    chi: float = 0.0
    mode: str = "igrm"
    blowup_bound: float = 10.0
    out: str = "out"
    oracle: bool = False
    sample: int = 41
    vtk: bool = False
    convection: str = "split"

    def __post_init__(self):
        if self.ny is None:
            self.ny = self.nx
        for name in ("vel_trial", "vel_test", "p_trial", "p_test"):
            setattr(self, name, tuple(int(v) for v in getattr(self, name)))

    def validate(self) -> "RunConfig":
        """Check every precondition that can be checked without allocating."""
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 1:
                raise ConfigError(f"{name} must be a positive integer, got {n}")
        for name in ("vel_trial", "vel_test", "p_trial", "p_test"):
            pair = getattr(self, name)
            if len(pair) != 2:
                raise ConfigError(f"{name} must be a (degree, continuity) pair")
            m, k = pair
            if not (1 <= m <= MAX_DEGREE and 0 <= k < m):
                raise ConfigError(f"{name}=S^{{{m},{k}}} needs 1 <= degree <= {MAX_DEGREE} "
                                  "and 0 <= continuity < degree")
        if self.mode not in ("galerkin", "igrm"):
            raise ConfigError(f"mode must be galerkin or igrm, got {self.mode!r}")
        if self.mode == "igrm":
            for n in (self.nx, self.ny):
                if _space_dim(*self.vel_test, n) < _space_dim(*self.vel_trial, n):
                    raise ConfigError(
                        "test space S^{%d,%d} is smaller than trial space S^{%d,%d} "
                        "on %d elements (inf-sup cannot hold)"
                        % (*self.vel_test, *self.vel_trial, n))
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.tmax is not None and not self.tmax > 0:
            raise ConfigError(f"tmax must be positive, got {self.tmax}")
        if self.re is not None and not self.re > 0:
            raise ConfigError(f"Re must be positive, got {self.re}")
        if not 0.0 <= self.chi <= 1.0:
            raise ConfigError(f"chi must lie in [0, 1], got {self.chi}")
        if not self.blowup_bound > 0:
            raise ConfigError(f"blowup bound must be positive, got {self.blowup_bound}")
        if self.sample < 2:
            raise ConfigError(f"sample must be at least 2, got {self.sample}")
        if self.convection not in CONVECTION_SCHEMES:
            raise ConfigError(f"convection must be one of {CONVECTION_SCHEMES}")
        if self.oracle and max(self.nx, self.ny) > ORACLE_MAX_ELEMENTS:
            raise ConfigError(f"--oracle needs a mesh of at most {ORACLE_MAX_ELEMENTS}x"
                              f"{ORACLE_MAX_ELEMENTS} elements")
        return self

    @property
    def choice(self) -> SpaceChoice:
        return SpaceChoice(self.vel_trial, self.vel_test, self.p_trial, self.p_test)

    def n_steps(self, t_final: float) -> int:
        return max(1, int(round(t_final / self.tau)))


@dataclass
class RunResult:
    status: ExitStatus
    summary: dict
    series: NormSeries = field(default_factory=NormSeries)
    state: object = None
    stepper: object = None
    out: Optional[Path] = None


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def build(config: RunConfig):
    """Problem, discretization, stepper and initial state of a validated config."""
    prob = get_problem(config.problem, config.re)
    disc = Discretization(config.nx, config.ny, config.choice)
    cfg = StepperConfig(tau=config.tau, re=prob.re, chi=config.chi, mode=config.mode,
                        include_convection=prob.include_convection,
                        blowup_bound=config.blowup_bound, convection=config.convection)
    stepper = GMStepper(disc, cfg, prob)
    return prob, disc, stepper, project_initial(prob, disc)


def run(config: RunConfig, write: bool = True) -> RunResult:
    """Run one experiment; returns the exit status and the recorded series."""
    try:
        config.validate()
    except ConfigError as exc:
        log.debug("%s", exc)
        return RunResult(ExitStatus.CONFIG_ERROR, {"error": str(exc)})
    t0 = time.perf_counter()
    prob, disc, stepper, state = build(config)
    t_final = config.tmax if config.tmax is not None else prob.t_final
    n_steps = config.n_steps(t_final)
    summary = {"problem": prob.name, "mode": config.mode, "re": prob.re, "tau": config.tau,
               "nx": config.nx, "ny": config.ny, "steps_requested": n_steps}
    status = ExitStatus.OK
    if config.oracle:
        try:
            summary["oracle_discrepancy"] = oracle_check(
                GMStepper(disc, stepper.cfg, prob), state)
        except VerificationError as exc:
            log.error("%s", exc)
            summary["oracle_discrepancy"] = exc.gap
            status = ExitStatus.VERIFICATION_FAILED

    out = Path(config.out) if write else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    series = NormSeries()
    blowup_step = None
    t_solve = 0.0
    fh = open(out / "norms.csv", "w", newline="") if out is not None else None
    try:
        writer = csv.writer(fh, lineterminator="\n") if fh else None
        if writer:
            writer.writerow(CSV_COLUMNS)

        def record(s):
            rec = measure(s, disc, prob, config.tau)
            series.append(rec)
            if writer:
                writer.writerow([_fmt(v) for v in rec.row()])

        record(state)
        if status == ExitStatus.OK:
            for _ in range(n_steps):
                ts = time.perf_counter()
                try:
                    state = stepper.advance(state)
                except DivergenceError as exc:
                    log.warning("%s", exc)
                    blowup_step = exc.step
                    series.mark_blowup(exc.step)
                    status = ExitStatus.BLOWUP
                    break
                finally:
                    t_solve += time.perf_counter() - ts
                record(state)
    finally:
        if fh:
            fh.close()

    last = series.last
    summary.update({
        "status": status.name.lower(),
        "steps": state.n,
        "t_final": state.t,
        "dim_trial": disc.dim_trial,
        "dim_test": disc.dim_test,
        "dim_trial_dofs": disc.dim_trial_dofs,
        "final_vel_l2": last.vel_l2,
        "final_vel_h1": last.vel_h1,
        "final_p_l2": last.p_l2,
        "final_div_l2": last.div_l2,
        "final_err_vel_l2_rel": last.err_vel_l2_rel,
        "final_err_vel_h1_rel": last.err_vel_h1_rel,
        "final_err_p_l2_rel": last.err_p_l2_rel,
        "final_err_vel_l2_abs": last.err_vel_l2_abs,
        "final_err_vel_h1_abs": last.err_vel_h1_abs,
        "final_err_p_l2_abs": last.err_p_l2_abs,
        "max_orthogonality": stepper.max_orthogonality,
        "max_residual_ratio": stepper.max_residual_ratio,
        "blowup_step": blowup_step,
        "solve_time_s": t_solve,
        "wall_time_s": time.perf_counter() - t0,
    })
    if out is not None:
        write_fields(out, state, disc, config.sample, config.vtk)
        write_summary(out / "summary.txt", summary)
    return RunResult(status, summary, series, state, stepper, out)


def write_summary(path: Path, summary: dict):
    with open(path, "w") as fh:
        for k, v in summary.items():
            fh.write(f"{k}={v if isinstance(v, str) else _fmt(v)}\n")


def read_summary(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def sample_fields(state, disc, n: int):
    xs = np.linspace(0.0, 1.0, n)
    ys = np.linspace(0.0, 1.0, n)
    v1 = evaluate_on_points(state.v1, disc.vx, disc.vy, xs, ys)
    v2 = evaluate_on_points(state.v2, disc.vx, disc.vy, xs, ys)
    p = evaluate_on_points(state.p, disc.px, disc.py, xs, ys)
    return xs, ys, v1, v2, p


def write_fields(out: Path, state, disc, n: int, vtk: bool = False):
    xs, ys, v1, v2, p = sample_fields(state, disc, n)
    # arrays are indexed [x, y]; transposing makes x the fastest index
    X, Y = np.meshgrid(xs, ys)
    table = np.column_stack([X.ravel(), Y.ravel(), v1.T.ravel(), v2.T.ravel(), p.T.ravel()])
    np.savetxt(out / "fields.txt", table, fmt="%.10e", header="x y v1 v2 p", comments="")
    if vtk:
        h = 1.0 / (n - 1)
        with open(out / "fields.vtk", "w") as fh:
            fh.write("# vtk DataFile Version 3.0\nflow fields\nASCII\n")
            fh.write(f"DATASET STRUCTURED_POINTS\nDIMENSIONS {n} {n} 1\n")
            fh.write(f"ORIGIN 0 0 0\nSPACING {h!r} {h!r} 1\nPOINT_DATA {n * n}\n")
            fh.write("SCALARS p double 1\nLOOKUP_TABLE default\n")
            np.savetxt(fh, p.T.ravel(), fmt="%.10e")
            fh.write("VECTORS velocity double\n")
            vel = np.column_stack([v1.T.ravel(), v2.T.ravel(), np.zeros(n * n)])
            np.savetxt(fh, vel, fmt="%.10e")


SWEEP_COLUMNS = ("value", "status", "blowup", "blowup_step", "steps", "final_vel_l2",
                 "final_err_vel_l2_rel", "final_err_vel_h1_rel", "final_err_p_l2_rel")


@dataclass
class SweepResult:
    rows: list
    runs: list
    order: Optional[float] = None
    status: ExitStatus = ExitStatus.OK


def sweep(template: RunConfig, parameter: str, values, write: bool = True) -> SweepResult:
    """One run per value of ``tau`` or ``mesh`` (nx = ny = value).

    Blow-ups are recorded per row. With three or more completed runs that
    carry exact errors, the least-squares order of the relative L2 velocity
    error is fitted (against tau, or against h = 1/n for mesh sweeps).
    """
    if parameter not in ("tau", "mesh"):
        raise ConfigError(f"sweep parameter must be tau or mesh, got {parameter!r}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    base = Path(template.out)
    rows, runs, pairs = [], [], []
    status = ExitStatus.OK
    for v in values:
        if parameter == "tau":
            cfg = replace(template, tau=float(v))
        else:
            if int(v) != v:
                raise ConfigError(f"mesh values must be integers, got {v}")
            cfg = replace(template, nx=int(v), ny=int(v))
        cfg = replace(cfg, out=str(base / f"{parameter}_{v}"))
        res = run(cfg, write=write)
        if res.status == ExitStatus.CONFIG_ERROR:
            return SweepResult(rows, runs, None, ExitStatus.CONFIG_ERROR)
        if res.status == ExitStatus.VERIFICATION_FAILED:
            status = ExitStatus.VERIFICATION_FAILED
        runs.append(res)
        s = res.summary
        row = {"value": v, "status": s["status"], "blowup": res.status == ExitStatus.BLOWUP,
               "blowup_step": s["blowup_step"], "steps": s["steps"],
               "final_vel_l2": s["final_vel_l2"],
               "final_err_vel_l2_rel": s["final_err_vel_l2_rel"],
               "final_err_vel_h1_rel": s["final_err_vel_h1_rel"],
               "final_err_p_l2_rel": s["final_err_p_l2_rel"]}
        rows.append(row)
        err = s["final_err_vel_l2_rel"]
        if res.status == ExitStatus.OK and err is not None and err > 0:
            pairs.append((float(v) if parameter == "tau" else 1.0 / float(v), err))
    order = None
    if len(pairs) >= 3:
        try:
            order = fit_order(pairs)
        except OrderFitError as exc:
            log.warning("order fit skipped: %s", exc)
    if write:
        base.mkdir(parents=True, exist_ok=True)
        with open(base / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_COLUMNS)
            for r in rows:
                w.writerow([r["value"], r["status"], int(r["blowup"]),
                            *(_fmt(r[c]) for c in SWEEP_COLUMNS[3:])])
        write_summary(base / "sweep_summary.txt",
                      {"parameter": parameter, "values": ",".join(str(v) for v in values),
                       "order_vel_l2": order})
    return SweepResult(rows, runs, order, status)
