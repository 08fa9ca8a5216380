"""Command-line interface: ``ifsm-bm {generate,invert,pipeline,diagnose,replay}``.

Exit status is 0 on success, 1 on numerical failure (solver or fixed-point
non-convergence, non-contractive system) and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor

from .operator import ConvergenceError, NotContractiveError
from .path import read_csv
from .pipeline import (
    BaseSpec,
    FixedPointOptions,
    RunManifest,
    SolverOptions,
    diagnostics,
    generate,
    invert,
    replay,
    run_pipeline,
)
from .qp import InfeasibleError

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _add_solver_flags(p: argparse.ArgumentParser, cap_default: float | None) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--bound", type=float, default=5.0, help="box bound on every alpha and beta")
    g.add_argument(
        "--max-contractivity",
        type=float,
        default=cap_default,
        help="cap on sum sqrt(c_k)|alpha_k| (default: %(default)s)",
    )
    g.add_argument(
        "--no-contractivity", action="store_true", help="drop the contractivity cap"
    )
    g.add_argument("--kkt-tol", type=float, default=1e-8)
    g.add_argument("--max-iter", type=int, default=10_000)


def _add_fixed_point_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("fixed point")
    g.add_argument("--fp-tol", type=float, default=FixedPointOptions.tol)
    g.add_argument("--fp-max-iter", type=int, default=FixedPointOptions.max_iter)


def _solver(args) -> SolverOptions:
    cap = None if args.no_contractivity else args.max_contractivity
    return SolverOptions(args.bound, cap, args.kkt_tol, args.max_iter)


def _fixed(args) -> FixedPointOptions:
    return FixedPointOptions(args.fp_tol, args.fp_max_iter)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ifsm-bm", description="Brownian-motion paths as fixed points of IFSM operators."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate a base Brownian path")
    p.add_argument("method", choices=["euler", "kac-siegert"])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, default=1024, help="grid cells (power of two)")
    p.add_argument("--steps", type=int, default=50, help="Euler steps")
    p.add_argument("--terms", type=int, default=25, help="Kac-Siegert terms")
    p.add_argument("--out", default="out")
    p.add_argument("--no-svg", action="store_true")

    p = sub.add_parser("invert", help="fit a wavelet IFSM to a path CSV")
    p.add_argument("csv")
    p.add_argument("--wavelet-M", type=int, required=True, dest="M")
    _add_solver_flags(p, None)
    p.add_argument("--fixed-point", action="store_true", help="also write the fixed point")
    _add_fixed_point_flags(p)
    p.add_argument("--out", default="out")

    p = sub.add_parser("pipeline", help="base path -> IFSM -> fixed point, with plots")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--M", type=int, default=8)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--base", choices=["euler", "kac-siegert"], default="euler")
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--terms", type=int, default=25)
    p.add_argument("--refine", type=int, default=1, help="output grid refinement factor")
    _add_solver_flags(p, 0.999)
    _add_fixed_point_flags(p)
    p.add_argument("--sweep", help="run several seeds, e.g. seeds=1..8 (one subdirectory each)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for --sweep")
    p.add_argument("--out", default="out")

    p = sub.add_parser("diagnose", help="variation statistics of a path CSV")
    p.add_argument("csv")
    p.add_argument("--out", help="write the JSON summary here instead of stdout")

    p = sub.add_parser("replay", help="recompute the outputs of a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default="replay")
    p.add_argument(
        "--check", action="store_true", help="compare with the files beside the manifest"
    )
    return parser


def _parse_sweep(text: str) -> list[int]:
    m = re.fullmatch(r"seeds=(\d+)\.\.(\d+)", text)
    if not m or int(m[1]) > int(m[2]):
        raise UsageError(f"--sweep expects seeds=a..b with a <= b, got {text!r}")
    return list(range(int(m[1]), int(m[2]) + 1))


def _report(out) -> None:
    print(os.path.abspath(out))


def _cmd_generate(args) -> int:
    base = BaseSpec(args.method, args.steps, args.terms)
    run = generate(args.seed, args.n, base)
    if args.no_svg:
        run.files.pop("path.svg")
        run.manifest.outputs.pop("svg")
    _report(run.write(args.out))
    return EXIT_OK


def _cmd_invert(args) -> int:
    v = read_csv(args.csv)
    fixed = _fixed(args) if args.fixed_point else None
    run, _, report = invert(v, args.M, _solver(args), fixed, source=args.csv)
    _report(run.write(args.out))
    print(f"delta2={report.delta2!r} C={report.contractivity!r} converged={report.converged}")
    return EXIT_OK if report.converged else EXIT_NUMERICAL


def _pipeline_one(seed, args_dict, out) -> bool:
    args = argparse.Namespace(**args_dict)
    run = run_pipeline(
        seed,
        args.M,
        args.n,
        BaseSpec(args.base, args.steps, args.terms),
        _solver(args),
        _fixed(args),
        args.refine,
    )
    run.output().write(out)
    s = run.manifest.summary
    print(
        f"seed={seed} delta2={s['delta2']!r} C={s['contractivity']!r} "
        f"l2={s['l2_distance']!r} converged={run.report.converged} -> {os.path.abspath(out)}"
    )
    return run.report.converged


def _cmd_pipeline(args) -> int:
    if args.sweep is None:
        return EXIT_OK if _pipeline_one(args.seed, vars(args), args.out) else EXIT_NUMERICAL
    seeds = _parse_sweep(args.sweep)
    outs = [os.path.join(args.out, f"seed-{s}") for s in seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            ok = list(pool.map(_pipeline_one, seeds, [vars(args)] * len(seeds), outs))
    else:
        ok = [_pipeline_one(s, vars(args), o) for s, o in zip(seeds, outs)]
    return EXIT_OK if all(ok) else EXIT_NUMERICAL


def _cmd_diagnose(args) -> int:
    text = json.dumps(diagnostics(read_csv(args.csv)).to_dict(), indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_replay(args) -> int:
    manifest = RunManifest.read(args.manifest)
    run = replay(manifest)
    _report(run.write(args.out))
    if args.check:
        src = os.path.dirname(os.path.abspath(args.manifest))
        bad = []
        for name, text in run.files.items():
            with open(os.path.join(src, name)) as fh:
                if fh.read() != text:
                    bad.append(name)
        if bad:
            print(f"replay differs: {', '.join(bad)}", file=sys.stderr)
            return EXIT_NUMERICAL
        print("replay identical")
    return EXIT_OK if run.manifest.converged else EXIT_NUMERICAL


COMMANDS = {
    "generate": _cmd_generate,
    "invert": _cmd_invert,
    "pipeline": _cmd_pipeline,
    "diagnose": _cmd_diagnose,
    "replay": _cmd_replay,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (NotContractiveError, ConvergenceError, InfeasibleError) as exc:
        print(f"ifsm-bm: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, ValueError, OSError) as exc:
        print(f"ifsm-bm: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
