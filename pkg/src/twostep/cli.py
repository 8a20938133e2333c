"""Command-line front end.

Exit codes: 0 pass, 1 a mathematical check failed, 2 bad input,
3 numerical breakdown.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import PRESETS, build_preset
from .decomposition import HomogeneousSpace, load_space, structural_checks
from .exceptions import ConditionViolated, InputError, NumericalError
from .geodesic import (
    DEFAULT_STEP,
    DEFAULT_TOL_DEFECT,
    DEFAULT_TOL_ODE,
    TwoStepCurve,
    coset_distance,
    curve_point,
    defect_coords,
    integrate_at_times,
    verify_two_step,
)
from .lie import DEFAULT_TOL_ALG
from .report import VerificationReport

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("catalog", "describe", "check", "verify", "trace", "oracle")


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise InputError(f"environment variable {name}={raw!r} is not a number") from None


def _positive(kind):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _time_range(text: str) -> np.ndarray:
    parts = text.split(":")
    try:
        if len(parts) != 3:
            raise ValueError
        start, end, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:end:count, got {text!r}") from None
    if count < 1 or start < 0 or end < start:
        raise argparse.ArgumentTypeError("need 0 <= start <= end and count >= 1")
    return np.linspace(start, end, count)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twostep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("space_arg", nargs="?", metavar="SPACE", help="preset string or space spec JSON file")
    parser.add_argument("--space", help="same as the positional SPACE")
    parser.add_argument("--lambda", dest="lam", type=_positive(float), help="override the preset's lambda")
    parser.add_argument("--trials", type=_positive(int), default=20)
    parser.add_argument("--samples", type=_positive(int), default=100, help="time samples in [0, 2 pi]")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tol-alg", type=_positive(float), default=None)
    parser.add_argument("--tol-ode", type=_positive(float), default=None)
    parser.add_argument("--tol-defect", type=_positive(float), default=DEFAULT_TOL_DEFECT)
    parser.add_argument("--step", type=_positive(float), default=DEFAULT_STEP, help="RK4 step")
    parser.add_argument("--t", dest="times", type=_time_range, default=None, help="start:end:count")
    parser.add_argument("--Xa", type=_vector, help="coordinates over the m_a basis (see describe)")
    parser.add_argument("--Xb", type=_vector, help="coordinates over the m_b basis")
    parser.add_argument("--pair", default="1,2", help="split members a,b (1-based) for trace/oracle")
    parser.add_argument("--oracle", action="store_true", help="trace: also integrate the ODE oracle")
    parser.add_argument("--no-oracle", action="store_true", help="verify: skip the ODE comparison")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=("json", "csv"), default=None)
    return parser


def _load_space(spec: str, lam: float | None, tol: float) -> HomogeneousSpace:
    if spec.endswith(".json") or Path(spec).is_file():
        space = load_space(spec, tol=tol)
        if lam is not None:
            if space.s < 2:
                raise InputError("--lambda needs a space with at least two split members")
            lambdas = (1.0,) * (space.s - 1) + (lam,)
            space = HomogeneousSpace(space.algebra, space.k, space.split, lambdas, name=space.name)
        return space
    return build_preset(spec, lam=lam, tol=tol)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args, tol_alg, tol_ode) -> dict:
    return {
        "command": args.command,
        "space": args.space_arg or args.space,
        "lambda_override": args.lam,
        "trials": args.trials,
        "samples": args.samples,
        "seed": args.seed,
        "tol_alg": tol_alg,
        "tol_ode": tol_ode,
        "tol_defect": args.tol_defect,
        "step": args.step,
    }


def cmd_catalog(args) -> int:
    if args.format == "json":
        _emit(json.dumps([{"name": p.name, "grammar": p.grammar} for p in PRESETS.values()], indent=2) + "\n",
              args.out)
    else:
        _emit("".join(f"{p.name:<12} {p.grammar}\n" for p in PRESETS.values()), args.out)
    return EXIT_PASS


def describe_text(space: HomogeneousSpace) -> str:
    info = space.describe()
    lam = ",".join(f"{x:g}" for x in space.lambdas)
    split = ",".join(str(d) for d in info["split"])
    lines = [
        f"space: {space.name}",
        f"algebra: {info['algebra']} (dim g = {info['dim_g']}, dim k = {info['dim_k']})",
        f"dim m = {info['dim_m']}, split ({split}), λ = ({lam})" + ("  [degenerate split]" if space.degenerate else ""),
    ]
    for check in structural_checks(space)[:4]:
        lines.append(f"  {check}")
    lines.append("m-basis (coefficients over the algebra basis), in command-line order:")
    for i, sub in enumerate(space.split):
        lines.append(f"  m{i + 1} [{sub.label}]:")
        for j, vec in enumerate(sub.basis):
            lines.append(f"    {j + 1}: " + " ".join(f"{v:+.6f}" for v in vec))
    return "\n".join(lines) + "\n"


def cmd_describe(args, space) -> int:
    _emit(describe_text(space), args.out)
    return EXIT_PASS


def cmd_check(args, space, config) -> int:
    report = VerificationReport(space.name, structural_checks(space, config["tol_alg"]), config=config)
    _emit(report.to_json(), args.out)
    for check in report.failing():
        print(f"check failed: {check}", file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_verify(args, space, config) -> int:
    report = verify_two_step(space, trials=args.trials, t_samples=args.samples, seed=args.seed,
                             tol_defect=args.tol_defect, tol_ode=config["tol_ode"], step=args.step,
                             oracle=not args.no_oracle)
    report.config = {**config, **report.config}
    _emit(report.to_json(), args.out)
    for check in report.failing():
        print(f"check failed: {check}", file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _curve_from_args(args, space) -> TwoStepCurve:
    try:
        a, b = (int(x) - 1 for x in args.pair.split(","))
    except ValueError:
        raise InputError(f"--pair expects two 1-based indices, got {args.pair!r}") from None
    if not (0 <= a < space.s and 0 <= b < space.s) or a == b:
        raise InputError(f"--pair {args.pair} invalid for a space with {space.s} split members")
    if args.Xa is None or args.Xb is None:
        raise InputError("--Xa and --Xb are required")
    return TwoStepCurve(space, a, b, space.block_vector(a, args.Xa), space.block_vector(b, args.Xb))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_trace(args, space, config) -> int:
    curve = _curve_from_args(args, space)
    times = args.times if args.times is not None else np.linspace(0.0, 2 * np.pi, args.samples)
    defects = defect_coords(curve, times)
    errors = [""] * len(times)
    if args.oracle:
        g_ode, _ = integrate_at_times(space, space.m.coords(curve.v0), times, args.step, config["tol_ode"])
        errors = []
        for t, g in zip(times, g_ode[:, 0]):
            try:
                errors.append(f"{coset_distance(curve_point(curve, t), g, space):.6e}")
            except NumericalError as exc:
                raise type(exc)(f"{exc} (at t = {t:.6g})") from exc
    header = ["t"] + [f"defect_{i + 1}" for i in range(space.dim_m)] + ["coset_error"]
    rows = [[f"{t:.10g}"] + [f"{d:.6e}" for d in row] + [err] for t, row, err in zip(times, defects, errors)]
    _emit(_csv(header, rows), args.out)
    worst = float(np.max(np.linalg.norm(defects, axis=-1)))
    return EXIT_PASS if worst <= args.tol_defect else EXIT_FAIL


def cmd_oracle(args, space, config) -> int:
    curve = _curve_from_args(args, space)
    times = args.times if args.times is not None else np.linspace(0.0, 2.0, 21)
    g_ode, x_ode = integrate_at_times(space, space.m.coords(curve.v0), times, args.step, config["tol_ode"])
    n, dim = space.algebra.ambient_dim, space.dim_m
    header = (["t"] + [f"x_{i + 1}" for i in range(dim)] + ["speed_sq"]
              + [f"g_{p + 1}{q + 1}_{part}" for p in range(n) for q in range(n) for part in ("re", "im")])
    rows = []
    for t, g, x in zip(times, g_ode[:, 0], x_ode[:, 0]):
        speed = x @ space.metric_gram @ x
        entries = [f"{v:.12e}" for z in g.ravel() for v in (z.real, z.imag)]
        rows.append([f"{t:.10g}"] + [f"{v:.12e}" for v in x] + [f"{speed:.12e}"] + entries)
    _emit(_csv(header, rows), args.out)
    return EXIT_PASS


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tol_alg = args.tol_alg or _env_float("TWOSTEP_TOL_ALG", DEFAULT_TOL_ALG)
        tol_ode = args.tol_ode or _env_float("TWOSTEP_TOL_ODE", DEFAULT_TOL_ODE)
        if args.format == "csv" and args.command in ("check", "verify"):
            raise InputError(f"{args.command} writes JSON reports; --format csv is not available")
        if args.format == "json" and args.command in ("trace", "oracle"):
            raise InputError(f"{args.command} writes CSV traces; --format json is not available")
        if args.command == "catalog":
            return cmd_catalog(args)
        spec = args.space_arg or args.space
        if not spec:
            raise InputError(f"{args.command} needs a space (preset string or spec file)")
        config = _config(args, tol_alg, tol_ode)
        try:
            space = _load_space(spec, args.lam, tol_alg)
        except ConditionViolated as exc:
            raise InputError(f"construction failed: {exc}") from exc
        handler = {"describe": lambda: cmd_describe(args, space),
                   "check": lambda: cmd_check(args, space, config),
                   "verify": lambda: cmd_verify(args, space, config),
                   "trace": lambda: cmd_trace(args, space, config),
                   "oracle": lambda: cmd_oracle(args, space, config)}[args.command]
        return handler()
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConditionViolated as exc:
        print(f"condition violated: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
