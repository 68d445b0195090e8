"""Command-line front end: kernel audits, rearrangement, symmetrization,
steady states, evolution runs, and the acceptance suites.

Exit codes: 0 success, 1 domain/config error (one-line diagnostic on
stderr), 2 assertion failure (the violating record is written next to the
outputs and its path printed).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .acceptance import SUITES, run_suite
from .evolve import SolverConfig, StepError, run
from .grids import Density2D
from .io import RunManifest, parse_config, read_density, write_density, write_diagnostics_csv
from .kernels import audit_assumptions, get_kernel
from .rearrange import schwarz_rearrangement
from .steady import SolverSettings, SteadySolveError, solve_radial_steady
from .steiner import SteinerConfig, modified_steiner_advance, steiner_advance


def _manifest_config(args) -> dict:
    return {k: v for k, v in vars(args).items() if isinstance(v, (str, int, float, bool, type(None)))}


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("AGGDIFF_THREADS", "1")))
    except ValueError:
        return 1


def _cmd_kernel(args) -> int:
    if args.action != "check":
        print(f"unknown kernel action {args.action!r}; expected 'check'", file=sys.stderr)
        return 1
    kernel = get_kernel(args.kernel)
    report = audit_assumptions(kernel)
    print(f"kernel {kernel.name} (d = {kernel.dimension}):")
    for line in report.summary_lines():
        print("  " + line)
    return 0


def _cmd_rearrange(args) -> int:
    manifest = RunManifest("rearrange", _manifest_config(args)).start()
    manifest.add_input(args.input)
    rho = read_density(args.input)
    out = schwarz_rearrangement(rho)
    write_density(args.out, out)
    manifest.add_output(args.out)
    manifest.finish(Path(args.out).with_suffix(".manifest.json"))
    print(f"wrote rearranged profile to {args.out} (mass {out.mass():.12g})")
    return 0


def _cmd_symmetrize(args) -> int:
    manifest = RunManifest("symmetrize", _manifest_config(args)).start()
    manifest.add_input(args.input)
    rho = read_density(args.input)
    if not isinstance(rho, Density2D):
        print("symmetrize expects a 2D density file", file=sys.stderr)
        return 1
    config = SteinerConfig(direction=args.direction, levels=args.levels, h0=args.h0)
    if args.mode == "continuous":
        out = steiner_advance(rho, args.tau, config)
    else:
        out = modified_steiner_advance(rho, args.tau, config)
    write_density(args.out, out)
    manifest.add_output(args.out)
    manifest.finish(Path(args.out).with_suffix(".manifest.json"))
    print(f"wrote S^tau density (tau = {args.tau:g}, mode {args.mode}) to {args.out}")
    return 0


def _cmd_steady(args) -> int:
    manifest = RunManifest("steady", _manifest_config(args)).start()
    kernel = get_kernel(args.kernel)
    profile = solve_radial_steady(
        args.m,
        args.mass,
        kernel,
        n=args.grid_n,
        rmax=args.rmax,
        settings=SolverSettings(damping=args.damping),
    )
    write_density(args.out, profile.density)
    manifest.add_output(args.out)
    manifest.finish(Path(args.out).with_suffix(".manifest.json"))
    print(
        f"steady profile: mass {profile.mass:.10g}, support {profile.support_radius:.6g}, "
        f"multiplier {profile.multiplier:.8g}, residual {profile.residual:.2e} "
        f"({profile.iterations} iterations) -> {args.out}"
    )
    return 0


def _solver_config_from_file(path: str) -> SolverConfig:
    raw = parse_config(path)

    def get(key, cast, default):
        return cast(raw[key]) if key in raw else default

    init_params = {}
    for key, value in raw.items():
        if key.startswith("init.") and key != "init.kind":
            name = key[len("init."):]
            init_params[name] = value if name == "path" else float(value)
    return SolverConfig(
        m=get("m", float, 2.0),
        mass=get("mass", float, 1.0),
        kernel=get("kernel", str, "log2d"),
        epsilon=get("epsilon", float, 0.0),
        grid_n=get("grid.n", int, 256),
        grid_extent=get("grid.extent", float, 8.0),
        grid_rmax=get("grid.rmax", float, 8.0),
        radial=get("radial", lambda s: s.lower() in ("1", "true", "yes"), False),
        dt_safety=get("dt.safety", float, 0.2),
        t_end=get("t_end", float, 10.0),
        record_every=get("record.every", float, 0.25),
        snapshot_every=get("snapshot.every", float, 0.0),
        initial=get("init.kind", str, "gaussian"),
        initial_params=init_params,
        seed=get("seed", int, 0),
        diffusion_only=get("diffusion_only", lambda s: s.lower() in ("1", "true", "yes"), False),
        energy_tol=get("energy.tol", float, 1e-8),
        workers=_workers(),
    )


def _cmd_evolve(args) -> int:
    manifest = RunManifest("evolve", {"config": args.config}).start()
    manifest.add_input(args.config)
    config = _solver_config_from_file(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        series = run(config)
    except StepError as err:
        if err.record is not None:
            bad = out_dir / "violating_record.csv"
            write_diagnostics_csv(bad, [err.record])
            print(f"online assertion failed: {err} (record: {bad})", file=sys.stderr)
        else:
            print(f"online assertion failed: {err}", file=sys.stderr)
        return 2
    diag = out_dir / "diagnostics.csv"
    write_diagnostics_csv(diag, series.records)
    manifest.add_output(diag)
    for t, snap in series.snapshots:
        path = out_dir / f"snapshot_t{t:08.3f}.csv"
        write_density(path, snap)
        manifest.add_output(path)
    manifest.finish(out_dir / "manifest.json")
    print(
        f"run complete: t = {series.records[-1].t:.6g}, {len(series.records)} records, "
        f"max energy increase ratio {series.max_energy_increase_ratio:.2e} -> {diag}"
    )
    return 0


def _cmd_accept(args) -> int:
    results = run_suite(args.suite)
    for res in results:
        print(res.line())
    if not results:
        print(f"suite {args.suite!r}: nothing to run")
        return 0
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 2 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aggdiff",
        description="numerical laboratory for nonlinear aggregation-diffusion equations",
    )
    parser.add_argument("--version", action="version", version=f"aggdiff {__version__}")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("kernel", help="audit an interaction kernel")
    p.add_argument("action", choices=["check"])
    p.add_argument("--kernel", required=True)
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("rearrange", help="Schwarz rearrangement of a density file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rearrange)

    p = sub.add_parser("symmetrize", help="continuous Steiner symmetrization")
    p.add_argument("--input", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--mode", choices=["continuous", "modified"], default="continuous")
    p.add_argument("--levels", type=int, default=256)
    p.add_argument("--h0", type=float, default=None)
    p.add_argument("--direction", choices=["x", "y"], default="x")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_symmetrize)

    p = sub.add_parser("steady", help="solve the radial steady state")
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--mass", type=float, required=True)
    p.add_argument("--kernel", default="log2d")
    p.add_argument("--grid-n", type=int, default=2048)
    p.add_argument("--rmax", type=float, default=8.0)
    p.add_argument("--damping", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_steady)

    p = sub.add_parser("evolve", help="run the evolution solver from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default="run_output")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("accept", help="run an acceptance suite")
    p.add_argument("--suite", default="fast", choices=sorted(SUITES))
    p.set_defaults(func=_cmd_accept)

    return parser


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_usage()
        return 1
    try:
        return args.func(args)
    except (ValueError, SteadySolveError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
