"""Command-line front end: benchmark runs, validation, efficiency sweeps
and mesh export.

Exit codes: 0 success, 1 usage or configuration error, 2 solver failure,
3 validation thresholds not met.
"""

from __future__ import annotations

import argparse
import re
import sys

from .config import BenchmarkConfig, ConfigError, apply_overrides, parse_config
from .runner import (export_mesh, run_benchmark, run_efficiency_sweep,
                     run_validation)
from .solving import SolverError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2
EXIT_THRESHOLD = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract reserves 2 for
    solver failures, so remap to 1."""

    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(parser):
    parser.add_argument("--config", metavar="PATH",
                        help="key = value config file (defaults otherwise)")
    parser.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    parser.add_argument("--output-dir", metavar="DIR",
                        help="artifact directory (overrides output_dir)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="q3dtherm",
                     description="Quasi-3D thermal solver for superconducting "
                                 "cable stacks, with a 3D reference solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="transient benchmark run")
    _add_common(run_p)
    run_p.add_argument("--solver", choices=("q3d", "ref3d"), default="q3d")

    validate_p = sub.add_parser(
        "validate", help="compare plain/adapted Q3D against the 3D oracle")
    _add_common(validate_p)

    sweep_p = sub.add_parser(
        "sweep", help="steady error vs dimension over refinement levels")
    _add_common(sweep_p)
    sweep_p.add_argument("--levels", default="0 1 2", metavar="LEVELS",
                         help="refinement levels, space or comma separated")

    mesh_p = sub.add_parser("mesh-export",
                            help="write the cross-section mesh as VTK")
    _add_common(mesh_p)
    return parser


def _load_config(args) -> BenchmarkConfig:
    config = parse_config(args.config) if args.config else BenchmarkConfig()
    return apply_overrides(config, args.overrides)


def _parse_levels(text: str) -> list:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if not parts:
        raise ConfigError("no refinement levels given")
    try:
        return [int(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"invalid levels '{text}'") from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "sweep":
            levels = _parse_levels(args.levels)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "run":
            artifacts = run_benchmark(config, solver=args.solver,
                                      output_dir=args.output_dir)
            print(f"{args.solver}: dimension {artifacts.metadata['dimension']}"
                  f" ({artifacts.metadata['num_triangles']} triangles),"
                  f" final time {artifacts.metadata['final_time_s']} s")
            for name in ("probes", "profile", "field", "meta"):
                print(f"wrote {artifacts.files[name]}")
            return EXIT_OK

        if args.command == "validate":
            report = run_validation(config, output_dir=args.output_dir)
            print(f"max rel diff plain:   {report.max_rel_plain:.6f}")
            print(f"max rel diff adapted: {report.max_rel_adapted:.6f}")
            for name in ("validation", "meta"):
                print(f"wrote {report.files[name]}")
            if report.passed:
                print("validation PASSED")
                return EXIT_OK
            print("validation FAILED"
                  + (" (runs agree below 1%: investigate rather than reject)"
                     if report.agreement else ""))
            return EXIT_THRESHOLD

        if args.command == "sweep":
            report = run_efficiency_sweep(config, levels=levels,
                                          output_dir=args.output_dir)
            for i, level in enumerate(report.levels):
                print(f"level {level}: q3d dim {report.q3d_dimensions[i]}"
                      f" err {report.q3d_errors[i]:.3e} |"
                      f" ref3d dim {report.ref3d_dimensions[i]}"
                      f" err {report.ref3d_errors[i]:.3e}")
            print(f"matched levels {report.matched_levels},"
                  f" dimension ratio ok: {report.matched_ratio_ok}")
            for name in ("sweep", "meta"):
                print(f"wrote {report.files[name]}")
            return EXIT_OK

        info = export_mesh(config, output_dir=args.output_dir)
        print(f"mesh: {info['num_nodes']} nodes,"
              f" {info['num_triangles']} triangles")
        print(f"wrote {info['mesh']}")
        return EXIT_OK
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
