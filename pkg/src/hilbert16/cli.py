"""Command-line entry point: ``python -m hilbert16 <command> [flags]``.

Exit codes: 0 success, 1 domain error, 2 usage error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import jsonschema
import numpy as np

from . import bounds as bnd
from .errors import DomainError, Hilbert16Error, InvalidDegree, NumericFailure, PolySyntaxError
from .implicit_curve import DEFAULT_GRID, div_curve_report, write_components_csv
from .ode_oracle import cycle_energy_check, find_limit_cycle
from .paths import DiscretizedPath, interpolate, radial_noise
from .poly import Box2, PlanarSystem
from .solver2d import contact_points
from .variational import (
    DescentOptions,
    EnergyConfig,
    descend,
    el_residual,
    energy_config,
    energy_E0,
    morse_census,
    morse_index,
    positively_oriented,
    winding_number,
    write_trace_csv,
)

log = logging.getLogger("hilbert16")

EXIT_DOMAIN, EXIT_USAGE, EXIT_NUMERIC = 1, 2, 3
LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
WINDOW_FLAGS = ("--window", "--window-x", "--window-y")


class UsageError(Exception):
    pass


# -- JSON ----------------------------------------------------------------------


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON with floats printed to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(v, (int, float, bool, np.number)) or v is None for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


_NUM = {"type": ["number", "null"]}
_INT = {"type": "integer"}

SCHEMAS = {
    "bounds": {
        "type": "object",
        "required": ["kind", "n", "M", "N", "master_bound", "quartic_bound", "behaviors"],
        "properties": {
            "n": _INT, "M": _INT, "N": _INT, "master_bound": _INT, "quartic_bound": _INT,
            "behaviors": _INT, "notes": {"type": "array", "items": {"type": "string"}},
        },
    },
    "degree_bounds": {
        "type": "object",
        "required": ["kind", "n", "quartic_bound", "harnack_cap_on_M", "bezout_cap_on_N"],
        "properties": {"n": _INT, "quartic_bound": _INT},
    },
    "divcurve": {
        "type": "object",
        "required": ["kind", "M", "generic", "components", "window", "grid"],
        "properties": {
            "M": _INT,
            "generic": {"type": "boolean"},
            "components": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["kind", "touches_boundary"],
                    "properties": {"kind": {"enum": ["Oval", "LineType"]}},
                },
            },
        },
    },
    "contacts": {
        "type": "object",
        "required": ["kind", "N", "points", "undecided_boxes", "certified"],
        "properties": {
            "N": _INT,
            "points": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["x", "y", "radius", "simple"],
                    "properties": {"x": _NUM, "y": _NUM, "radius": _NUM, "simple": {"type": "boolean"}},
                },
            },
        },
    },
    "oracle": {
        "type": "object",
        "required": ["kind", "period", "closure_error", "section", "K", "cycle_energy"],
        "properties": {"period": _NUM, "K": _INT, "cycle_energy": _NUM},
    },
    "descend": {
        "type": "object",
        "required": ["kind", "epsilon", "K", "reason", "iterations", "objective", "E0", "grad_norm", "winding"],
        "properties": {"K": _INT, "iterations": _INT, "objective": _NUM, "E0": _NUM, "winding": _INT},
    },
    "census": {
        "type": "object",
        "required": ["kind", "epsilon", "starts", "critical_points", "census"],
        "properties": {
            "census": {
                "type": "object",
                "required": ["counts", "alternating_sum", "valley_identity_holds"],
            }
        },
    },
}
for _k, _s in SCHEMAS.items():
    _s.setdefault("properties", {})["kind"] = {"const": _k}


def validate_report(obj) -> str:
    """Raise jsonschema.ValidationError unless ``obj`` is a known report."""
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind not in SCHEMAS:
        raise jsonschema.ValidationError(f"unknown report kind {kind!r}")
    jsonschema.validate(obj, SCHEMAS[kind])
    return kind


# -- argument handling ---------------------------------------------------------


def _join_window_args(argv):
    """Glue '--window -4:4' into '--window=-4:4' so argparse accepts it."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in WINDOW_FLAGS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _parse_range(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected lo:hi") from None
    if not lo < hi:
        raise UsageError(f"empty range {text!r}")
    return lo, hi


def _window(args, default=(-10.0, 10.0)) -> Box2:
    base = _parse_range(args.window) if args.window else default
    xr = _parse_range(args.window_x) if args.window_x else base
    yr = _parse_range(args.window_y) if args.window_y else base
    return Box2(xr[0], xr[1], yr[0], yr[1])


def load_system(path) -> PlanarSystem:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read system file: {e}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"system file is not valid JSON: {e}") from None
    if not isinstance(obj, dict) or not isinstance(obj.get("P"), str) or not isinstance(obj.get("Q"), str):
        raise UsageError("system file needs string fields 'P' and 'Q'")
    return PlanarSystem.from_strings(obj["P"], obj["Q"], obj.get("name"))


def _need_system(args) -> PlanarSystem:
    if not args.system:
        raise UsageError("--system FILE is required")
    return load_system(args.system)


def _emit(args, report):
    text = dumps(report)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")


# -- commands ------------------------------------------------------------------


def cmd_bounds(args):
    if args.degree is not None and args.system:
        raise UsageError("give either --degree or --system, not both")
    if args.degree is not None:
        if args.degree < 2:
            raise InvalidDegree(f"degree n > 1 required, got {args.degree}")
        return bnd.degree_report(args.degree)
    sys_ = _need_system(args)
    window = _window(args)
    div = div_curve_report(sys_, window, args.grid)
    contacts = contact_points(sys_, window)
    notes = []
    if contacts.undecided_boxes:
        notes.append(f"{len(contacts.undecided_boxes)} undecided solver boxes: N is a lower count")
    behaviors = 0
    if div.generic:
        behaviors = bnd.behavior_census(div, contacts).behaviors
    else:
        notes.append("divergence curve is singular: behaviour census skipped")
    if sys_.n == 2:
        notes.append("quadratic corollary: " + bnd.quadratic_verdict(sys_, contacts).label)
    rep = bnd.bound_report(sys_.n, div.M, contacts.N, behaviors, notes).to_json()
    rep["system"] = sys_.name
    return rep


def cmd_divcurve(args):
    sys_ = _need_system(args)
    rep = div_curve_report(sys_, _window(args), args.grid)
    if args.csv:
        write_components_csv(rep.components, args.csv)
    return rep.to_json()


def cmd_contacts(args):
    sys_ = _need_system(args)
    return contact_points(sys_, _window(args)).to_json()


def cmd_oracle(args):
    sys_ = _need_system(args)
    x0 = _parse_point(args.x0) if args.x0 else None
    orbit = find_limit_cycle(sys_, args.section, x0=x0, K=args.K, h=args.h)
    if args.csv:
        orbit.to_csv(args.csv)
    return {
        "kind": "oracle",
        "system": sys_.name,
        "section": args.section,
        "period": orbit.period,
        "closure_error": orbit.closure_error(),
        "start": [float(v) for v in orbit.points[0]],
        "K": args.K,
        "cycle_energy": cycle_energy_check(sys_, orbit, args.K),
    }


def _parse_point(text):
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"bad point {text!r}; expected x,y") from None
    return x, y


def initial_path(sys_, spec: str, K: int) -> DiscretizedPath:
    """``circle:R[:cx,cy]``, ``oracle[:SECTION]`` or ``csv:FILE``."""
    kind, _, rest = spec.partition(":")
    if kind == "circle":
        parts = rest.split(":") if rest else ["1"]
        try:
            r = float(parts[0])
        except ValueError:
            raise UsageError(f"bad circle radius in {spec!r}") from None
        center = _parse_point(parts[1]) if len(parts) > 1 else (0.0, 0.0)
        return DiscretizedPath.circle(K, r, center)
    if kind == "oracle":
        orbit = find_limit_cycle(sys_, rest or "x=0+", K=K)
        return positively_oriented(orbit.to_path())
    if kind == "csv":
        try:
            path = DiscretizedPath.from_csv(rest)
        except (OSError, KeyError, ValueError) as e:
            raise UsageError(f"cannot read path CSV: {e}") from None
        if path.K != K:
            path = interpolate(path, K)
        return path
    raise UsageError(f"bad --init {spec!r}; expected circle:R, oracle[:SECTION] or csv:FILE")


def _options(args) -> DescentOptions:
    return DescentOptions(
        step_policy=args.policy,
        max_iters=args.max_iters,
        grad_tol=args.grad_tol,
        h2_precondition=args.h2_precondition,
    )


def _config(args) -> EnergyConfig:
    if args.eps < 0:
        raise UsageError("--eps must be nonnegative")
    return energy_config(args.eps, args.K) if args.eps > 0 else EnergyConfig(0.0)


def cmd_descend(args):
    sys_ = _need_system(args)
    path = radial_noise(initial_path(sys_, args.init, args.K), args.noise, args.seed)
    cfg = _config(args)
    res = descend(path, sys_, cfg, _options(args))
    if args.csv:
        res.path.to_csv(args.csv)
    if args.trace:
        write_trace_csv(res.trace, args.trace)
    return {
        "kind": "descend",
        "system": sys_.name,
        "epsilon": args.eps,
        "K": args.K,
        "init": args.init,
        "noise": args.noise,
        "seed": args.seed,
        "reason": res.reason,
        "iterations": res.accepted_steps,
        "objective": res.trace[-1].energy,
        "E0": energy_E0(res.path, sys_),
        "grad_norm": res.grad_norm,
        "winding": winding_number(res.path).number,
        "el_residual": el_residual(res.path, sys_, cfg if args.eps > 0 else None),
    }


def _census_worker(job):
    sys_, path, cfg, opts = job
    res = descend(path, sys_, cfg, opts)
    try:
        idx = morse_index(res.path, sys_, cfg, grad_tol=opts.grad_tol)
    except DomainError:
        idx = None  # not critical within tolerance
    return res.trace[-1].energy, res.grad_norm, res.reason, idx


def cmd_census(args):
    sys_ = _need_system(args)
    if args.eps <= 0:
        raise UsageError("census needs --eps > 0")
    cfg = _config(args)
    opts = _options(args)
    base = initial_path(sys_, args.init, args.K)
    jobs = [(sys_, radial_noise(base, args.noise, args.seed + i), cfg, opts) for i in range(args.starts)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            results = list(ex.map(_census_worker, jobs))
    else:
        results = [_census_worker(j) for j in jobs]
    starts = []
    distinct: list[tuple[float, int]] = []
    for i, (energy, gnorm, reason, idx) in enumerate(results):
        starts.append({"seed": args.seed + i, "objective": energy, "grad_norm": gnorm, "reason": reason, "index": idx})
        if idx is None:
            continue
        if not any(abs(energy - e) <= 1e-6 * (1 + abs(e)) and idx == k for e, k in distinct):
            distinct.append((energy, idx))
    distinct.sort()
    census = morse_census([k for _, k in distinct])
    return {
        "kind": "census",
        "system": sys_.name,
        "epsilon": args.eps,
        "K": args.K,
        "starts": starts,
        "critical_points": [{"objective": e, "index": k} for e, k in distinct],
        "census": census.to_json(),
    }


def cmd_validate(args):
    try:
        with open(args.file) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot load {args.file}: {e}") from None
    try:
        kind = validate_report(obj)
    except jsonschema.ValidationError as e:
        print(dumps({"kind": "validation", "valid": False, "error": e.message}))
        return EXIT_DOMAIN
    print(dumps({"kind": "validation", "valid": True, "report_kind": kind}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", help="JSON file with string fields P, Q and optional name")
    common.add_argument("--out", help="also write the JSON report to this file")
    common.add_argument("--window", help="lo:hi for both axes (default -10:10)")
    common.add_argument("--window-x", help="lo:hi for x only")
    common.add_argument("--window-y", help="lo:hi for y only")
    common.add_argument("--grid", type=int, default=DEFAULT_GRID)
    common.add_argument("--K", type=int, default=256, help="samples per path")
    common.add_argument("--eps", type=float, default=0.0, help="singular perturbation epsilon")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for multi-start runs")
    common.add_argument("--h2-precondition", action="store_true")

    p = argparse.ArgumentParser(prog="hilbert16", description="Limit-cycle toolkit for planar polynomial systems.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", parents=[common], help="degree-only or system bounds")
    b.add_argument("--degree", type=int)
    b.set_defaults(func=cmd_bounds)

    d = sub.add_parser("divcurve", parents=[common], help="components of Div = 0")
    d.add_argument("--csv", help="write component polylines")
    d.set_defaults(func=cmd_divcurve)

    c = sub.add_parser("contacts", parents=[common], help="certified contact points")
    c.set_defaults(func=cmd_contacts)

    o = sub.add_parser("oracle", parents=[common], help="limit cycle by Poincare return map")
    o.add_argument("--section", default="x=0+", help="e.g. x=0+ (line x=0 crossed with x increasing)")
    o.add_argument("--x0", help="starting point x,y")
    o.add_argument("--h", type=float, default=1e-3, help="RK4 step")
    o.add_argument("--csv", help="write the sampled cycle (t,x,y)")
    o.set_defaults(func=cmd_oracle)

    for name, func, helptext in (
        ("descend", cmd_descend, "energy descent from an initial path"),
        ("census", cmd_census, "multi-start descent and Morse census"),
    ):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--init", default="circle:1.0", help="circle:R[:cx,cy], oracle[:SECTION] or csv:FILE")
        s.add_argument("--noise", type=float, default=0.05 if name == "census" else 0.0,
                       help="low-mode radial noise amplitude (seeded)")
        s.add_argument("--policy", choices=["lbfgs", "bb", "armijo"], default="lbfgs")
        s.add_argument("--max-iters", type=int, default=20000)
        s.add_argument("--grad-tol", type=float, default=1e-8)
        if name == "descend":
            s.add_argument("--csv", help="write the final path (t,x,y)")
            s.add_argument("--trace", help="write the descent trace")
        else:
            s.add_argument("--starts", type=int, default=4)
        s.set_defaults(func=func)

    v = sub.add_parser("validate", help="check a JSON report against its schema")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)
    return p


def _setup_logging():
    level = LOG_LEVELS.get(os.environ.get("HILBERT16_LOG", "").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    argv = _join_window_args(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        out = args.func(args)
    except (UsageError, InvalidDegree, PolySyntaxError) as e:
        print(f"hilbert16: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailure as e:
        print(f"hilbert16: numeric failure ({type(e).__name__}): {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, Hilbert16Error) as e:
        print(f"hilbert16: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    if isinstance(out, int):
        return out
    _emit(args, out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
