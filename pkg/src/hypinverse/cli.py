"""Command-line front end: ``hypinverse {check,solve-inverse,solve-forward,manufacture,residual}``.

Exit codes: 0 success, 2 a condition is violated, 3 no convergence,
4 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import jsonschema
import numpy as np

from . import expr as E
from .basis import coefficients
from .conditions import check_conditions, compute_constants, max_T
from .errors import HypInverseError, NonConvergence
from .inverse import Iterate, fixed_point_solve, forward_solve, norm_E, residual_report
from .manufactured import PRESETS, build, error_report, preset_spec, truth_iterate
from .problem import Discretization, ExprFunction, ProblemData, SampledFunction
from .spectral import COUPLING_MODES, SpectralState, extract_data, space_grid, synthesize_field, time_grid

EXIT_OK, EXIT_CONDITION, EXIT_NONCONVERGENCE, EXIT_INVALID = 0, 2, 3, 4

_FUNC = {"oneOf": [
    {"type": "string"},
    {"type": "object", "properties": {"csv": {"type": "string"}}, "required": ["csv"],
     "additionalProperties": False},
]}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "beta": {"type": "number"},
        "delta1": {"type": "number", "minimum": 0},
        "delta2": {"type": "number", "minimum": 0},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "K": {"type": "integer", "minimum": 1},
        "nt": {"type": "integer", "minimum": 5},
        "nx": {"type": "integer", "minimum": 5},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "max_iter": {"type": "integer", "minimum": 1},
        "coupling_mode": {"enum": list(COUPLING_MODES)},
        "preset": {"enum": sorted(PRESETS)},
        "a": {"type": "string"},
        "functions": {
            "type": "object",
            "properties": {"f": _FUNC, "phi": _FUNC, "psi": _FUNC, "h": _FUNC},
            "required": ["f", "phi", "psi", "h"],
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
    "oneOf": [
        {"required": ["functions", "beta", "delta1", "delta2", "T"], "not": {"required": ["preset"]}},
        {"required": ["preset"], "not": {"anyOf": [{"required": ["functions"]}, {"required": ["beta"]},
                                                   {"required": ["delta1"]}, {"required": ["delta2"]}]}},
    ],
}

DEFAULTS = {"K": 16, "nt": 257, "nx": 513, "tol": 1e-10, "max_iter": 100, "coupling_mode": "ode-consistent"}


class InvalidInput(HypInverseError):
    pass


@dataclasses.dataclass
class Loaded:
    problem: ProblemData
    disc: Discretization
    settings: dict
    spec: object = None  # ManufacturedSpec when the config names a preset

    def make_problem(self, T):
        if self.spec is not None:
            return build(preset_spec(self.settings["preset"], T))[0]
        return dataclasses.replace(self.problem, T=T)


# ------------------------------------------------------------------ input

def _read_columns(path: Path, ncols: int):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise InvalidInput(f"{path}: expected a header row and data")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise InvalidInput(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != ncols:
        raise InvalidInput(f"{path}: expected {ncols} columns")
    return data


def _sampled(ref: dict, variables, base: Path):
    path = (base / ref["csv"]).resolve()
    if len(variables) == 1:
        data = _read_columns(path, 2)
        return SampledFunction(data[:, 0], data[:, 1], variables, source=str(path))
    data = _read_columns(path, 3)
    xs, ts = np.unique(data[:, 0]), np.unique(data[:, 1])
    if xs.size * ts.size != data.shape[0]:
        raise InvalidInput(f"{path}: samples do not form a full (x, t) grid")
    grid = np.full((xs.size, ts.size), np.nan)
    grid[np.searchsorted(xs, data[:, 0]), np.searchsorted(ts, data[:, 1])] = data[:, 2]
    return SampledFunction((xs, ts), grid, variables, source=str(path))


def _function(value, variables, base):
    if isinstance(value, str):
        return ExprFunction(value, variables)
    return _sampled(value, variables, base)


def load_config(path, overrides: dict | None = None) -> Loaded:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read config {path}: {exc}") from None
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InvalidInput(f"config {path} is invalid: {exc.message}") from None
    settings = {**DEFAULTS, **cfg}
    settings.update({k: v for k, v in (overrides or {}).items() if v is not None})
    disc = Discretization(settings["K"], settings["nt"], settings["nx"])
    if "preset" in cfg:
        spec = preset_spec(cfg["preset"], cfg.get("T"))
        problem = build(spec)[0]
        return Loaded(problem, disc, settings, spec)
    fn = cfg["functions"]
    base = path.parent
    problem = ProblemData(
        cfg["beta"], cfg["delta1"], cfg["delta2"], cfg["T"],
        _function(fn["f"], ("x", "t"), base), _function(fn["phi"], ("x",), base),
        _function(fn["psi"], ("x",), base), _function(fn["h"], ("t",), base))
    problem.nonlocal_params  # validates delta1, delta2, T
    problem.basis  # validates beta
    return Loaded(problem, disc, settings)


# ----------------------------------------------------------------- output

def _fmt(v) -> str:
    return repr(float(v))


def write_csv(path: Path, header, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_fmt(v) for v in row])


def write_field(path: Path, x, t, u):
    """``u`` has shape ``(len(x), len(t))``; rows are ordered by ``x``, then ``t``."""
    X, Tm = np.meshgrid(x, t, indexing="ij")
    write_csv(path, ["x", "t", "u"], [X.ravel(), Tm.ravel(), np.asarray(u).ravel()])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_json(path: Path, doc):
    path.write_text(json.dumps(_clean(doc), indent=2) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands

def _audit(loaded: Loaded):
    compliance = check_conditions(loaded.problem)
    constants = compute_constants(loaded.problem)
    return compliance, constants


def cmd_check(args) -> int:
    loaded = load_config(args.config)
    compliance, constants = _audit(loaded)
    report = {"T": loaded.problem.T, "compliance": compliance.as_dict(), "constants": constants.as_dict()}
    if args.max_T:
        report["max_T"] = max_T(loaded.make_problem, T0=loaded.problem.T, rtol=1e-4)
    write_json(_out_dir(args) / "check_report.json", report)
    ok = compliance.all_passed and constants.eq33_holds
    print(f"conditions {'pass' if compliance.all_passed else 'FAIL ' + ','.join(compliance.failed())}; "
          f"eq33_lhs = {constants.eq33_lhs:.6g} ({'holds' if constants.eq33_holds else 'fails'})"
          + (f"; max_T = {report['max_T']:.6g}" if args.max_T else ""))
    return EXIT_OK if ok else EXIT_CONDITION


def _gate(loaded, args):
    """Audit before solving; returns an exit code when the run must stop."""
    compliance, constants = _audit(loaded)
    ok = compliance.all_passed and constants.eq33_holds
    if not ok:
        failed = compliance.failed() + ([] if constants.eq33_holds else ["eq33"])
        if not args.force:
            print(f"conditions violated: {', '.join(failed)} (use --force to run anyway)", file=sys.stderr)
            return compliance, constants, EXIT_CONDITION
        warnings.warn(f"running despite violated conditions: {', '.join(failed)}", stacklevel=2)
    return compliance, constants, None


def _field(state: SpectralState, problem: ProblemData, nx: int):
    x = space_grid(nx).nodes
    return x, synthesize_field(state, problem.basis, x)


def cmd_solve_inverse(args) -> int:
    loaded = load_config(args.config, {"max_iter": args.max_iter, "coupling_mode": args.mode})
    compliance, constants, stop = _gate(loaded, args)
    out = _out_dir(args)
    s = loaded.settings
    report = {"compliance": compliance.as_dict(), "constants": constants.as_dict(), "settings": s}
    if stop is not None:
        write_json(out / "run_report.json", report)
        return stop
    problem = loaded.problem
    data = extract_data(problem, loaded.disc)
    code = EXIT_OK
    try:
        result = fixed_point_solve(data, problem.nonlocal_params, problem.basis, tol=s["tol"],
                                   max_iter=s["max_iter"], radius=constants.R, mode=s["coupling_mode"],
                                   threads=args.threads)
    except NonConvergence as exc:
        result, code = exc.result, EXIT_NONCONVERGENCE
        print(str(exc), file=sys.stderr)
    z = result.solution
    t = z.grid.nodes
    columns, header = [t, z.a], ["t", "a"]
    if loaded.spec is not None:
        truth = truth_iterate(loaded.spec, loaded.disc.K, loaded.disc.nt)
        columns += [truth.a, np.abs(z.a - truth.a)]
        header += ["a_true", "abs_err"]
        report["errors"] = error_report(result, truth)
    write_csv(out / "a.csv", header, columns)
    x, u = _field(z.state, problem, loaded.disc.nx)
    write_field(out / "u.csv", x, t, u)
    report.update({
        "converged": result.converged, "iterations": result.iterations, "history": result.history,
        "contraction_ratios": result.contraction_ratios,
        "geometric_mean_ratio": result.geometric_mean_ratio, "tail_ratio": result.tail_ratio,
        "solution_norm": norm_E(z), "residuals": {**result.residuals, **residual_report(z, problem)},
    })
    write_json(out / "run_report.json", report)
    print(f"{'converged' if result.converged else 'NOT converged'} after {result.iterations} iterations"
          + (f"; max |a - a*| = {report['errors']['a_sup']:.3g}" if "errors" in report else ""))
    return code


def cmd_solve_forward(args) -> int:
    loaded = load_config(args.config, {"max_iter": args.max_iter, "coupling_mode": args.mode})
    s = loaded.settings
    if "a" in s:
        a_fn = ExprFunction(s["a"], ("t",))
    elif loaded.spec is not None:
        a_fn = ExprFunction(loaded.spec.a_star, ("t",))
    else:
        raise InvalidInput("solve-forward needs a coefficient 'a' in the config")
    problem = loaded.problem
    data = extract_data(problem, loaded.disc, check_h=False)
    t = data.grid.nodes
    a = np.broadcast_to(a_fn(t), t.shape)
    out = _out_dir(args)
    try:
        state = forward_solve(data, a, problem.nonlocal_params, problem.basis, tol=s["tol"],
                              max_iter=s["max_iter"], mode=s["coupling_mode"], threads=args.threads)
    except NonConvergence as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NONCONVERGENCE
    x, u = _field(state, problem, loaded.disc.nx)
    write_field(out / "u.csv", x, t, u)
    write_json(out / "forward_report.json",
               {"settings": s, "residuals": residual_report(Iterate(state, a), problem)})
    print(f"forward solution written to {out / 'u.csv'}")
    return EXIT_OK


def problem_config(spec, settings=None) -> dict:
    """Serializable config (expression form) of a manufactured problem."""
    problem = build(spec)[0]
    cfg = {"beta": spec.beta, "delta1": spec.delta1, "delta2": spec.delta2, "T": spec.T,
           "functions": {name: getattr(problem, name).text for name in ("f", "phi", "psi", "h")}}
    for key in ("K", "nt", "nx", "tol", "max_iter", "coupling_mode"):
        if settings and key in settings:
            cfg[key] = settings[key]
    return cfg


def cmd_manufacture(args) -> int:
    if args.preset not in PRESETS:
        raise InvalidInput(f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}")
    spec = preset_spec(args.preset, args.T)
    settings = {**DEFAULTS, "K": args.K, "nt": args.nt, "nx": args.nx}
    out = _out_dir(args)
    write_json(out / "problem.json", problem_config(spec, settings))
    truth = truth_iterate(spec, args.K, args.nt)
    t = truth.grid.nodes
    write_csv(out / "truth_a.csv", ["t", "a"], [t, truth.a])
    x, u = _field(truth.state, build(spec)[0], args.nx)
    write_field(out / "truth_u.csv", x, t, u)
    write_json(out / "truth.json", {"preset": args.preset, "T": spec.T, "a_star": spec.a_star,
                                    "modes": [dataclasses.asdict(m) for m in spec.modes]})
    print(f"preset {args.preset} (T = {spec.T!r}) written to {out}")
    return EXIT_OK


def _read_field(path: Path):
    data = _read_columns(path, 3)
    xs, ts = np.unique(data[:, 0]), np.unique(data[:, 1])
    if xs.size * ts.size != data.shape[0]:
        raise InvalidInput(f"{path}: samples do not form a full (x, t) grid")
    u = np.full((xs.size, ts.size), np.nan)
    u[np.searchsorted(xs, data[:, 0]), np.searchsorted(ts, data[:, 1])] = data[:, 2]
    return xs, ts, u


def cmd_residual(args) -> int:
    loaded = load_config(args.config)
    problem = loaded.problem
    xs, ts, u = _read_field(Path(args.u))
    a_data = _read_columns(Path(args.a), 2)
    grid = time_grid(problem.T, ts.size)
    if (not np.allclose(ts, grid.nodes, rtol=0, atol=1e-9 * problem.T)
            or not np.allclose(a_data[:, 0], grid.nodes, rtol=0, atol=1e-9 * problem.T)):
        raise InvalidInput("solution times must form the uniform grid of [0, T] shared by both files")
    if not np.allclose(xs, space_grid(xs.size).nodes, rtol=0, atol=1e-12):
        raise InvalidInput("solution x values must form a uniform grid of [0, 1]")
    modes = coefficients(u.T, loaded.disc.K, problem.basis).T
    z = Iterate(SpectralState(modes, grid), a_data[:, 1])
    report = residual_report(z, problem)
    write_json(_out_dir(args) / "residual_report.json", report)
    print(", ".join(f"{k} = {v:.3g}" for k, v in report.items()))
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypinverse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="problem config (JSON)")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("check", help="audit conditions and constants")
    common(p)
    p.add_argument("--max-T", action="store_true", help="bisect for the largest T with B(A+2)^2 < 1")
    p.set_defaults(func=cmd_check)

    for name, func in (("solve-inverse", cmd_solve_inverse), ("solve-forward", cmd_solve_forward)):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--mode", choices=COUPLING_MODES)
        p.add_argument("--max-iter", type=int)
        p.add_argument("--force", action="store_true", help="run even when conditions fail")
        p.set_defaults(func=func)

    p = sub.add_parser("manufacture", help="write a manufactured problem and its exact solution")
    p.add_argument("preset")
    common(p, config=False)
    p.add_argument("--T", type=float, help="horizon (default: largest T passing the contraction test)")
    p.add_argument("--K", type=int, default=DEFAULTS["K"])
    p.add_argument("--nt", type=int, default=DEFAULTS["nt"])
    p.add_argument("--nx", type=int, default=DEFAULTS["nx"])
    p.set_defaults(func=cmd_manufacture)

    p = sub.add_parser("residual", help="residuals of a solution given as CSV files")
    common(p)
    p.add_argument("--a", required=True, help="CSV with columns t,a")
    p.add_argument("--u", required=True, help="CSV with columns x,t,u")
    p.set_defaults(func=cmd_residual)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (HypInverseError, E.ParseError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
