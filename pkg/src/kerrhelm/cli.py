"""Command-line entry point.

Subcommands mirror the experiments; flags override config-file values.
Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from . import harness


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="config file (INI sections: problem/discretization/experiment)")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--method", choices=["fem", "cip"])
    sub.add_argument("--scheme", choices=["newton", "modified", "frozen"])
    sub.add_argument("--level", type=int, help="refinement level of the base mesh")
    sub.add_argument("--h", type=float, dest="h_target", help="direct mesh size target")
    sub.add_argument("--tol", type=float)
    sub.add_argument("--max-iter", type=int)
    sub.add_argument("--seed", type=int, help="seed recorded for randomized checks")
    sub.add_argument("--k", type=float)
    sub.add_argument("--k-list", help="comma-separated wave numbers")
    sub.add_argument("--sigma0", type=float)
    sub.add_argument("--thickness", type=float, help="absorbing-layer thickness")
    sub.add_argument("--epsilon", help="cubic-term strength: a number or k^-2")
    sub.add_argument("--fine", action="store_true", help="fine-mode resolution (sweeps)")


def build_parser() -> _Parser:
    parser = _Parser(prog="kerrhelm",
                     description="Nonlinear Helmholtz experiments on a disk with an absorbing layer")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("solve", "single nonlinear solve, nodal dump and error report"),
        ("convergence", "refinement ladder against the reference field"),
        ("pollution", "fixed k*h sweep over wave numbers"),
        ("pml-study", "error versus layer strength on a fixed mesh"),
        ("newton-table", "per-step errors/orders of the three schemes"),
        ("bistability", "amplitude continuation with hysteresis detection"),
    ]:
        sub = subs.add_parser(name, help=helptext)
        _add_common(sub)
        if name == "solve":
            sub.add_argument("--export-mesh", action="store_true")
            sub.add_argument("--import-mesh", nargs=2, metavar=("NODES", "ELEMENTS"))
        if name == "bistability":
            sub.add_argument("--amplitudes", help="start:stop:step or comma list")
    return parser


def _apply_overrides(cfg, args) -> None:
    mapping = {"out": "out_dir", "h_target": "h_target", "max_iter": "max_iter"}
    for attr in ("method", "scheme", "level", "h_target", "tol", "max_iter", "seed",
                 "k", "sigma0", "thickness", "epsilon", "out", "fine"):
        value = getattr(args, attr if attr != "out" else "out", None)
        if value is None or (attr == "fine" and not value):
            continue
        setattr(cfg, mapping.get(attr, attr), value)
    if getattr(args, "k_list", None):
        cfg.k_list = [float(p) for p in args.k_list.split(",") if p.strip()]
    if getattr(args, "amplitudes", None):
        cfg.amplitudes = harness._parse_value("amplitudes", args.amplitudes)
    if getattr(args, "k", None) is not None:
        cfg.k_list = [float(args.k)]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = harness.read_config(args.config)
        else:
            cfg = harness.ExperimentConfig()
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    cfg.experiment = args.command
    try:
        _apply_overrides(cfg, args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    runner = harness.RUNNERS[args.command]
    try:
        if args.command == "solve":
            path = runner(cfg, export_mesh=args.export_mesh,
                          mesh_files=tuple(args.import_mesh) if args.import_mesh else None)
        else:
            path = runner(cfg)
    except (RuntimeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
