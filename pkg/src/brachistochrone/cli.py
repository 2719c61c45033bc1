"""Command-line front end.

Every subcommand accepts the shared options (``--quad-tol``, ``--root-tol``,
``--out-dir``, ``--jobs``, ``--seed``, ``--config``) before or after its
name.  A config file holds ``key=value`` lines using the long option names;
options given on the command line win.

Exit status: 0 success, 1 probe failure, 2 bad configuration, 3 solver
error.  Errors are reported on stderr as one JSON object ``{code, message}``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis, export, verification
from .errors import BrachistochroneError
from .expr import compile_expression
from .geometry import surface_from_keyword
from .media import Symmetry, potential_from_keyword, relativistic_index
from .solver import (Branch, SolverConfig, StopRule, continue_past_turning, shoot, solve)

SUBCOMMANDS = ("solve", "shoot", "time", "probe", "sector", "relativistic", "compare")
BOOL_OPTIONS = {"full"}


class ConfigError(ValueError):
    code = "config_error"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


@dataclass(frozen=True)
class RunConfig:
    surface: str
    field: str
    A: tuple
    B: Optional[tuple] = None
    C: Optional[float] = None
    branch: str = "plus"
    full: bool = False
    samples: int = 200
    span: float = 20.0
    quad_tol: float = 1e-10
    root_tol: float = 1e-12
    out_dir: Path = Path(".")
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if (self.C is None) == (self.B is None):
            raise ConfigError("give exactly one of --C and --B")


def parse_pair(text: str) -> tuple:
    """``"u,v"`` with each part a number or constant expression (``pi/2``)."""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        raise ConfigError(f"expected 'u,v', got {text!r}")
    try:
        return tuple(float(compile_expression(p)(0.0)) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad coordinate pair {text!r}: {exc}") from exc


def parse_list(text: str) -> list:
    try:
        return [float(compile_expression(p.strip())(0.0)) for p in str(text).split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}: {exc}") from exc


def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("shared options")
    g.add_argument("--quad-tol", type=float, default=argparse.SUPPRESS)
    g.add_argument("--root-tol", type=float, default=argparse.SUPPRESS)
    g.add_argument("--out-dir", default=argparse.SUPPRESS)
    g.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    g.add_argument("--config", default=argparse.SUPPRESS, help="key=value file")
    return p


def _problem_options(p):
    p.add_argument("--surface", default="plane",
                   help="plane, cone, hyperboloid, cylinder, polar or revolution:<h>:<g>")
    p.add_argument("--field", default="uniform", help="uniform, central:<n> or relativistic:<c>")
    p.add_argument("--A", required=True, type=parse_pair, help="start point u,v")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--span", type=float, default=20.0)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="brachistochrone", description="Least-time curves on symmetric surfaces.",
                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", parents=[common], help="integrate from A with a given constant")
    _problem_options(p)
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--branch", choices=("plus", "minus"), default="plus")
    p.add_argument("--full", action="store_true", help="continue through the turning point")

    p = sub.add_parser("shoot", parents=[common], help="find the curve from A through B")
    _problem_options(p)
    p.add_argument("--B", required=True, type=parse_pair)

    p = sub.add_parser("time", parents=[common], help="travel time along a curve CSV")
    p.add_argument("csv")
    p.add_argument("--surface", default="plane")
    p.add_argument("--field", default="uniform")
    p.add_argument("--V0", type=float, default=None, help="start level (default: V at first sample)")

    p = sub.add_parser("probe", parents=[common], help="perturbation test of a curve CSV")
    p.add_argument("csv")
    p.add_argument("--surface", default="plane")
    p.add_argument("--field", default="uniform")
    p.add_argument("--V0", type=float, default=None)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--amplitude", type=float, default=0.05)
    p.add_argument("--free", choices=("u", "v"), default=None)

    p = sub.add_parser("sector", parents=[common], help="swept angle in a central power field")
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--c0", type=parse_list, required=True, help="comma-separated turning radii")

    p = sub.add_parser("relativistic", parents=[common],
                       help="overlay relativistic and classical curves in a uniform field")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--surface", default="plane")
    p.add_argument("--A", type=parse_pair, default=(0.0, 0.0))
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--k", type=float, help="relativistic ray constant")
    grp.add_argument("--B", type=parse_pair, help="common target point")
    p.add_argument("--branch", choices=("plus", "minus"), default="plus")
    p.add_argument("--samples", type=int, default=200)

    p = sub.add_parser("compare", parents=[common], help="arrival times where two curves cross")
    _problem_options(p)
    p.add_argument("--C", type=parse_list, required=True, help="two constants C1,C2")
    p.add_argument("--branch", choices=("plus", "minus"), default="plus")
    return parser


def read_config_file(path) -> list:
    """Turn ``key=value`` lines into option tokens."""
    tokens = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (x.strip() for x in line.split("=", 1))
        key = key.replace("_", "-")
        if key == "config":
            raise ConfigError(f"{path}:{n}: nested config files are not supported")
        if key in BOOL_OPTIONS:
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append(f"--{key}")
            continue
        tokens.append(f"--{key}={value}")
    return tokens


def _arrange(argv: list) -> list:
    """Put the subcommand first, then config-file options, then command-line options."""
    idx = next((i for i, a in enumerate(argv) if a in SUBCOMMANDS), None)
    if idx is None:
        return argv
    rest = argv[:idx] + argv[idx + 1:]
    cfg_path = None
    for i, a in enumerate(rest):
        if a == "--config" and i + 1 < len(rest):
            cfg_path = rest[i + 1]
        elif a.startswith("--config="):
            cfg_path = a.split("=", 1)[1]
    file_tokens = read_config_file(cfg_path) if cfg_path else []
    return [argv[idx]] + file_tokens + rest


def _defaults(args) -> argparse.Namespace:
    base = dict(quad_tol=1e-10, root_tol=1e-12, out_dir=".", jobs=1, seed=0)
    for k, v in base.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    args.out_dir = Path(args.out_dir)
    return args


# -- helpers ------------------------------------------------------------------

def _source(surface, field_key: str, A):
    pot, c = potential_from_keyword(field_key, surface)
    if c is None:
        return pot
    return relativistic_index(pot, pot.V(*A), c)


def _out_dir(args) -> Path:
    try:
        args.out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {args.out_dir}: {exc}") from exc
    return args.out_dir


def _write_curve(out: Path, curve, stem: str = "curve", title: str = "") -> list:
    paths = [export.write_curve_csv(out / f"{stem}.csv", curve)]
    chart, space = export.curve_figures([curve], title=title)
    paths.append(chart.save(out / f"{stem}.svg"))
    paths.append(space.save(out / f"{stem}_3d.svg"))
    return paths


def _summary(curve, cfg) -> dict:
    info = {"C": cfg.C, "branch": cfg.branch.value, "total_time": curve.total_time,
            "stop_reason": curve.stop_reason, "samples": len(curve.u)}
    if curve.turning is not None:
        info["turning"] = curve.turning.c0
    return info


def _print(obj: dict):
    print(json.dumps({k: (float(v) if isinstance(v, np.floating) else v) for k, v in obj.items()}))


# -- commands -----------------------------------------------------------------

class _Stage:
    """Marks failures during setup (exit 2) versus during solving (exit 3)."""

    def __init__(self):
        self.solving = False


def run_config(args) -> RunConfig:
    return RunConfig(surface=args.surface, field=args.field, A=args.A,
                     B=getattr(args, "B", None), C=getattr(args, "C", None),
                     branch=getattr(args, "branch", "plus"), full=getattr(args, "full", False),
                     samples=args.samples, span=args.span, quad_tol=args.quad_tol,
                     root_tol=args.root_tol, out_dir=args.out_dir, seed=args.seed, jobs=args.jobs)


def cmd_solve(args, stage):
    rc = run_config(args)
    surface = surface_from_keyword(rc.surface)
    source = _source(surface, rc.field, rc.A)
    cfg = SolverConfig(C=rc.C, branch=Branch(rc.branch), quad_tol=rc.quad_tol,
                       root_tol=rc.root_tol)
    stop = StopRule(n_samples=rc.samples, span=rc.span)
    out = _out_dir(args)
    stage.solving = True
    curve = solve(surface, source, rc.A, cfg, stop)
    if rc.full and curve.turning is not None:
        curve = continue_past_turning(curve)
    _write_curve(out, curve, title=f"{rc.surface}, {rc.field}, C={rc.C:g}")
    _print(_summary(curve, cfg))
    return 0


def cmd_shoot(args, stage):
    rc = run_config(args)
    surface = surface_from_keyword(rc.surface)
    source = _source(surface, rc.field, rc.A)
    template = SolverConfig(quad_tol=rc.quad_tol, root_tol=rc.root_tol)
    out = _out_dir(args)
    stage.solving = True
    cfg, curve = shoot(surface, source, rc.A, rc.B, template, n_samples=rc.samples)
    _write_curve(out, curve, title=f"{rc.surface}, {rc.field}, through B")
    _print(_summary(curve, cfg))
    return 0


def _csv_curve(args):
    data = export.read_curve_csv(args.csv)
    surface = surface_from_keyword(args.surface)
    pot, c = potential_from_keyword(args.field, surface)
    if c is not None:
        raise ConfigError("travel time is defined for classical fields only")
    curve = verification.DiscreteCurve(data["u"], data["v"])
    V0 = args.V0 if args.V0 is not None else pot.V(curve.u[0], curve.v[0])
    return data, surface, pot, curve, V0


def cmd_time(args, stage):
    data, surface, pot, curve, V0 = _csv_curve(args)
    stage.solving = True
    T = verification.travel_time(surface, pot, V0, curve)
    info = {"travel_time": T, "segments": len(curve) - 1}
    if "time" in data:
        info["recorded_time"] = float(data["time"][-1])
    _print(info)
    return 0


def cmd_probe(args, stage):
    _, surface, pot, curve, V0 = _csv_curve(args)
    free = args.free or ("u" if pot.symmetry is Symmetry.INDEPENDENT_OF_U else "v")
    stage.solving = True
    rep = verification.minimality_probe(surface, pot, curve, args.trials, args.amplitude,
                                        args.seed, V0=V0, free=free, jobs=args.jobs)
    _print({"result": "PASS" if rep.passed else "FAIL", "min_gap": rep.min_gap,
            "trials": rep.trials, "seed": rep.seed, "redraws": rep.redraws})
    return 0 if rep.passed else 1


def cmd_sector(args, stage):
    if not args.n > 0:
        raise ConfigError(f"field exponent must be positive, got {args.n!r}")
    bad = [c for c in args.c0 if not 0 < c < 1]
    if bad:
        raise ConfigError(f"turning radii must lie in (0, 1), got {bad}")
    out = _out_dir(args)
    stage.solving = True
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        reports = list(pool.map(lambda c: analysis.sector_angle(args.n, c), args.c0))
    rows = [(r.c0, r.theta, r.theta_limit, r.sector_central_angle) for r in reports]
    header = ("c0", "theta", "theta_limit", "sector_central_angle")
    export.write_table(out / "sector.csv", header, rows)
    print(",".join(header))
    for row in rows:
        print(",".join(export.fmt(x) for x in row))
    return 0


def cmd_relativistic(args, stage):
    surface = surface_from_keyword(args.surface)
    pot, _ = potential_from_keyword("uniform", surface)
    V0 = pot.V(*args.A)
    medium = relativistic_index(pot, V0, args.c)
    out = _out_dir(args)
    stage.solving = True
    tol = dict(quad_tol=args.quad_tol, root_tol=args.root_tol)
    if args.B is not None:
        cfg_r, rel = shoot(surface, medium, args.A, args.B, SolverConfig(**tol), n_samples=args.samples)
        cfg_c, cls = shoot(surface, pot, args.A, args.B, SolverConfig(**tol), n_samples=args.samples)
    else:
        branch = Branch(args.branch)
        cfg_r = SolverConfig(C=args.k, branch=branch, **tol)
        cfg_c = replace(cfg_r, C=args.k * math.sqrt(2.0) / args.c)
        stop = StopRule(n_samples=args.samples)
        rel = solve(surface, medium, args.A, cfg_r, stop)
        cls = solve(surface, pot, args.A, cfg_c, stop)
    export.write_curve_csv(out / "relativistic.csv", rel)
    export.write_curve_csv(out / "classical.csv", cls)
    chart, space = export.curve_figures([rel, cls], labels=[f"relativistic c={args.c:g}", "classical"],
                                        dashed=[False, True], title="relativistic vs classical")
    chart.save(out / "relativistic.svg")
    space.save(out / "relativistic_3d.svg")
    _print({"k": cfg_r.C, "C_classical": cfg_c.C, "sup_gap": analysis.curve_gap(rel, cls),
            "time_relativistic": rel.total_time, "time_classical": cls.total_time})
    return 0


def cmd_compare(args, stage):
    if len(args.C) != 2:
        raise ConfigError("compare needs exactly two constants")
    surface = surface_from_keyword(args.surface)
    source = _source(surface, args.field, args.A)
    stop = StopRule(n_samples=args.samples, span=args.span)
    cfgs = [SolverConfig(C=c, branch=Branch(args.branch), quad_tol=args.quad_tol,
                         root_tol=args.root_tol) for c in args.C]
    out = _out_dir(args)
    stage.solving = True
    curves = [solve(surface, source, args.A, cfg, stop) for cfg in cfgs]
    rep = analysis.compare_intersecting(*curves)
    chart, space = export.curve_figures(curves, labels=[f"C={c:g}" for c in args.C],
                                        title="crossing curves")
    chart.save(out / "compare.svg")
    space.save(out / "compare_3d.svg")
    rows = [(k.u, k.v_a, k.v_b, k.time_a, k.time_b, k.gap) for k in rep.crossings]
    export.write_table(out / "crossings.csv", ("u", "v_a", "v_b", "time_a", "time_b", "gap"), rows)
    _print({"crossings": len(rep.crossings), "winner": rep.winner, "gap": rep.gap})
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "shoot": cmd_shoot,
    "time": cmd_time,
    "probe": cmd_probe,
    "sector": cmd_sector,
    "relativistic": cmd_relativistic,
    "compare": cmd_compare,
}


def _fail(code: str, message: str, status: int) -> int:
    print(json.dumps({"code": code, "message": message}), file=sys.stderr)
    return status


def main(argv: Optional[list] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stage = _Stage()
    try:
        args = _defaults(build_parser().parse_args(_arrange(argv)))
        return COMMANDS[args.command](args, stage)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigError as exc:
        return _fail(exc.code, str(exc), 2)
    except BrachistochroneError as exc:
        return _fail(exc.code, str(exc), 3 if stage.solving else 2)
    except (ValueError, OSError) as exc:
        if stage.solving:
            return _fail("solver_error", str(exc), 3)
        return _fail("config_error", str(exc), 2)


if __name__ == "__main__":
    sys.exit(main())
