"""Command-line entry point.

Settings come from flags and, optionally, a ``key=value`` file given with
``--config``; flags override the file. File keys are flag names without the
leading dashes (``tau=0.01``, ``trial-degree=3``, ``oracle=true``).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .problems import PROBLEMS
from .runner import ConfigError, ExitStatus, RunConfig, run, sweep

# flag -> (RunConfig field, converter); degree/continuity flags fill tuples
_SCALARS = {
    "problem": ("problem", str), "nx": ("nx", int), "ny": ("ny", int),
    "re": ("re", float), "tau": ("tau", float), "tmax": ("tmax", float),
    "chi": ("chi", float), "mode": ("mode", str), "blowup-bound": ("blowup_bound", float),
    "out": ("out", str), "sample": ("sample", int), "convection": ("convection", str),
}
_BOOLS = {"oracle": "oracle", "vtk": "vtk"}
_PAIRS = {
    "trial": "vel_trial", "test": "vel_test",
    "pressure-trial": "p_trial", "pressure-test": "p_test",
}
_SWEEP = ("sweep", "values")


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _known_keys():
    keys = set(_SCALARS) | set(_BOOLS) | set(_SWEEP)
    for prefix in _PAIRS:
        keys |= {f"{prefix}-degree", f"{prefix}-cont"}
    return keys


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    known = _known_keys()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("_", "-")
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="igrm",
        description="Direction-split B-spline solver for Stokes and Navier-Stokes flow.")
    p.add_argument("--config", help="key=value settings file (flags override it)")
    p.add_argument("--problem", choices=sorted(PROBLEMS))
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    for prefix, label in (("trial", "velocity trial"), ("test", "velocity test"),
                          ("pressure-trial", "pressure trial"),
                          ("pressure-test", "pressure test")):
        p.add_argument(f"--{prefix}-degree", type=int, help=f"{label} degree")
        p.add_argument(f"--{prefix}-cont", type=int, help=f"{label} continuity")
    p.add_argument("--re", type=float, help="Reynolds number (problem default if omitted)")
    p.add_argument("--tau", type=float, help="time step")
    p.add_argument("--tmax", type=float, help="final time (problem default if omitted)")
    p.add_argument("--chi", type=float, help="rotational pressure correction weight in [0, 1]")
    p.add_argument("--mode", choices=("galerkin", "igrm"))
    p.add_argument("--blowup-bound", type=float,
                   help="blow-up when |v| exceeds this multiple of max(1, |v0|)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--oracle", action="store_true", default=None,
                   help="check the first step against the dense reference solver")
    p.add_argument("--sample", type=int, help="points per direction of the field dump")
    p.add_argument("--vtk", action="store_true", default=None,
                   help="also write a legacy VTK structured-points file")
    p.add_argument("--convection", choices=("split", "x-full", "x-half"),
                   help="placement of the explicit convection term")
    p.add_argument("--sweep", choices=("tau", "mesh"))
    p.add_argument("--values", help="comma-separated sweep values")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _parse_fraction(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def merge_settings(args: argparse.Namespace) -> tuple[RunConfig, str | None, list | None]:
    """Combine the optional config file with the flags into a RunConfig."""
    settings = read_config_file(args.config) if args.config else {}
    for key in _known_keys():
        v = getattr(args, key.replace("-", "_"), None)
        if v is not None:
            settings[key] = v
    kw = {}
    try:
        for key, (name, conv) in _SCALARS.items():
            if key in settings:
                kw[name] = _parse_fraction(str(settings[key])) if conv is float \
                    else conv(settings[key])
        for key, name in _BOOLS.items():
            if key in settings:
                kw[name] = _bool(settings[key])
        defaults = RunConfig()
        for prefix, name in _PAIRS.items():
            m, k = getattr(defaults, name)
            m = int(settings.get(f"{prefix}-degree", m))
            k = int(settings.get(f"{prefix}-cont", k))
            kw[name] = (m, k)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    config = RunConfig(**kw)
    parameter = settings.get("sweep")
    values = None
    if parameter is not None:
        if parameter not in ("tau", "mesh"):
            raise ConfigError(f"sweep must be tau or mesh, got {parameter!r}")
        if "values" not in settings:
            raise ConfigError("--sweep needs --values")
        conv = _parse_fraction if parameter == "tau" else int
        try:
            values = [conv(v) for v in str(settings["values"]).split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad sweep values: {exc}") from None
    elif "values" in settings:
        raise ConfigError("--values needs --sweep")
    return config, parameter, values


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config, parameter, values = merge_settings(args)
        if parameter is None:
            result = run(config)
            status = result.status
            if status != ExitStatus.CONFIG_ERROR:
                s = result.summary
                print(f"{s['status']}: {s['steps']} steps, t={s['t_final']:.6g}, "
                      f"|v|={s['final_vel_l2']:.6g}, output in {config.out}")
            else:
                print(f"error: {result.summary['error']}", file=sys.stderr)
            return int(status)
        res = sweep(config, parameter, values)
        for r in res.rows:
            print(f"{parameter}={r['value']}: {r['status']} "
                  f"err_vel_l2_rel={r['final_err_vel_l2_rel']}")
        if res.order is not None:
            print(f"fitted order: {res.order:.4f}")
        return int(res.status)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return int(ExitStatus.CONFIG_ERROR)
