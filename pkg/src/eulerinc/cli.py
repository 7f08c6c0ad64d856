"""Command-line interface.

Subcommands: reach (tube export), converge (convergence study),
track (relaxed | nonconvex | controls), verify-inclusions (coco | psi-hull),
bounds (constant sheet), validate (constants audit). Exit code 0 means every
assertion made by the subcommand passed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bounds as bounds_mod
from . import tracking, verify
from .engine import (evolve_reach, export_tube, linear_prune_rule,
                     make_step_maps, quadratic_prune_rule)
from .families import benchmark_names, get_benchmark, load_problem, validate_constants
from .tracking import export_path, make_reference, schedule_from_spec


def _resolve_problem(spec: str):
    if spec in benchmark_names():
        return get_benchmark(spec)
    if os.path.exists(spec):
        return load_problem(spec)
    raise ValueError(
        f"{spec!r} is neither a registered benchmark "
        f"({', '.join(benchmark_names())}) nor a config file"
    )


def _resolve_prune_rule(spec: str):
    if spec == "quadratic":
        return quadratic_prune_rule
    if spec.startswith("linear"):
        _, _, arg = spec.partition(":")
        return linear_prune_rule(float(arg)) if arg else linear_prune_rule()
    cell = float(spec)
    return lambda dt, fam: cell


def _n_steps(problem, dt: float) -> int:
    n = round(problem.horizon / dt)
    if n < 1 or abs(n * dt - problem.horizon) > 1e-9:
        raise ValueError(f"dt={dt} does not divide the horizon {problem.horizon}")
    return n


def _print_payload(payload: dict, fmt: str):
    if fmt == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        flat = {k: v for k, v in payload.items() if not isinstance(v, (list, dict))}
        print(",".join(flat))
        print(",".join(str(v) for v in flat.values()))


def _cmd_reach(args) -> int:
    problem = _resolve_problem(args.problem)
    maps = make_step_maps(problem, _n_steps(problem, args.dt))
    rule = _resolve_prune_rule(args.prune_cell)
    tube = evolve_reach(maps, problem.x0, rule(maps.dt, problem.family))
    os.makedirs(args.out, exist_ok=True)
    paths = export_tube(tube, os.path.join(args.out, "tube"))
    print(f"wrote {paths[0]} and {paths[1]} "
          f"({sum(len(c) for c in tube.clouds)} points)")
    return 0


def _cmd_converge(args) -> int:
    problem = _resolve_problem(args.problem)
    dts = [float(v) for v in args.dt_list.split(",")]
    rule = _resolve_prune_rule(args.prune_cell)
    study = verify.run_convergence_study(problem, dts, refine=args.refine,
                                         prune_rule=rule)
    if args.out:
        verify.emit_report(study, args.out, name="converge")
    _print_payload(study.as_dict(), args.format)
    return 0 if study.passed else 1


def _cmd_track(args) -> int:
    problem = _resolve_problem(args.problem)
    fam = problem.family
    n = _n_steps(problem, args.dt)
    maps = make_step_maps(problem, n)
    spec = args.schedule or ("chatter:1,2" if fam.n_members > 1 else "pure:1")
    schedule = schedule_from_spec(spec, fam.n_members, problem.horizon)
    ref = make_reference(problem, n, schedule, refine=args.refine)
    if args.mode == "relaxed":
        path, report = tracking.track_relaxed(maps, ref, grid_res=args.grid_res)
    elif args.mode == "nonconvex":
        path, report = tracking.track_nonconvex(
            maps, ref, lookahead=args.lookahead, beam=args.beam,
            grid_res=args.grid_res)
    else:
        path, report = tracking.track_controls(maps, ref, beam=args.beam,
                                               grid_res=args.grid_res)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        export_path(path, ref, report, os.path.join(args.out, f"track_{args.mode}"))
    _print_payload(report.as_dict(), args.format)
    ok = report.max_deviation <= report.theoretical_bound + report.sampling_slack
    return 0 if ok else 1


def _cmd_verify_inclusions(args) -> int:
    problem = _resolve_problem(args.problem)
    dts = ([float(v) for v in args.dt_list.split(",")] if args.dt_list
           else [args.dt])
    checks = []
    for dt in dts:
        if args.mode == "coco":
            checks.append(verify.check_coco_inclusion(
                problem, dt, samples=args.samples,
                seed=args.seed if args.seed is not None else verify.COCO_SEED))
        else:
            checks.append(verify.check_psi_hull_inclusion(
                problem, dt, grid_res=args.grid_res, samples=args.samples,
                seed=args.seed if args.seed is not None else verify.PSI_HULL_SEED))
    if args.out:
        verify.emit_report(checks, args.out, name=f"inclusions_{args.mode}")
    for check in checks:
        _print_payload(check.as_dict(), args.format)
    return 0 if all(c.passed for c in checks) else 1


def _cmd_bounds(args) -> int:
    sheet = bounds_mod.bound_sheet(args.speed, args.lip, args.smooth,
                                   args.horizon, args.dim, args.members,
                                   args.n_steps)
    print(json.dumps(sheet.as_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_validate(args) -> int:
    problem = _resolve_problem(args.problem)
    report = validate_constants(problem.family,
                                (problem.box_lo, problem.box_hi),
                                samples=args.samples)
    _print_payload(report.as_dict(), args.format)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "validate.json"), "w") as fh:
            json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eulerinc",
        description="Set-valued forward Euler: reachable sets, tracking, bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, problem=True):
        if problem:
            p.add_argument("--problem", required=True,
                           help="benchmark name or config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("reach", help="evolve and export a reachable tube")
    add_common(p)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--prune-cell", default="quadratic",
                   help="cell size, or 'quadratic' / 'linear[:scale]'")
    p.set_defaults(func=_cmd_reach, out="reach_out")

    p = sub.add_parser("converge", help="run a convergence study")
    add_common(p)
    p.add_argument("--dt-list", required=True, help="comma-separated steps")
    p.add_argument("--refine", type=int, default=32)
    p.add_argument("--prune-cell", default="quadratic")
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("track", help="track a reference trajectory")
    p.add_argument("mode", choices=["relaxed", "nonconvex", "controls"])
    add_common(p)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--grid-res", type=int, default=8)
    p.add_argument("--lookahead", type=int, default=None)
    p.add_argument("--beam", type=int, default=1)
    p.add_argument("--refine", type=int, default=64)
    p.add_argument("--schedule", default=None,
                   help="pure:i | chatter:i,j | blend:i,j")
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("verify-inclusions", help="sampled hull inclusions")
    p.add_argument("mode", choices=["coco", "psi-hull"])
    add_common(p)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--dt-list", default=None)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--grid-res", type=int, default=8)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_verify_inclusions)

    p = sub.add_parser("bounds", help="print a bound sheet as JSON")
    p.add_argument("--speed", "-K", type=float, required=True)
    p.add_argument("--lip", "-L", type=float, required=True)
    p.add_argument("--smooth", "-S", type=float, default=0.0)
    p.add_argument("--horizon", "-T", type=float, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--members", type=int, required=True)
    p.add_argument("--n-steps", type=int, required=True)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("validate", help="audit a family's constants")
    add_common(p)
    p.add_argument("--samples", type=int, default=128)
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
