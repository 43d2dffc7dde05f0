"""Command-line entry point ``ddpole``.

Exit codes: 0 ok, 1 usage or bad input, 2 infeasible, 3 insufficient data,
4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .baselines import identify_least_squares
from .errors import DDPoleError
from .plant import SimulationConfig, load_system, simulate
from .signals import extract_data_matrices, is_persistently_exciting, read_trajectory, write_trajectory
from .synthesis import assign_eigenstructure, load_pole_spec, place_poles

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4

log = logging.getLogger("ddpole")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_json(obj, path):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_pe_check(args) -> int:
    traj = read_trajectory(args.trajectory)
    report = is_persistently_exciting(traj.inputs, args.order)
    print(report.describe())
    return EXIT_OK if report.is_pe else EXIT_DATA


def cmd_place(args) -> int:
    traj = read_trajectory(args.trajectory)
    spec = load_pole_spec(args.poles, args.eigvecs)
    dm = extract_data_matrices(traj)
    if spec.X is not None:
        result = assign_eigenstructure(dm, spec)
    else:
        result = place_poles(dm, spec, seed=args.seed)
    _write_json(result.to_json(), args.out)
    print(f"placement error {result.placement_error:.3e}, cond(V) {result.eigvec_condition:.3e}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    system = load_system(args.system)
    traj = simulate(system, SimulationConfig(T=args.T, noise_variance=args.noise, rng_seed=args.seed))
    write_trajectory(traj, args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    experiment = args.experiment.replace("-", "_")
    overrides = {}
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    cfg = bench.ExperimentConfig.from_json(experiment, overrides)
    records, summary = bench.run(cfg)
    rec_path, sum_path = bench.emit_results(records, args.out, summary)
    failed = sum(not r.ok for r in records)
    print(f"{len(records)} records ({failed} failed) -> {rec_path}, {sum_path}")
    return EXIT_OK


def cmd_identify(args) -> int:
    traj = read_trajectory(args.trajectory)
    model = identify_least_squares(extract_data_matrices(traj))
    _write_json(model.to_json(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ddpole", description="Pole placement and eigenstructure assignment from data.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("pe-check", help="persistency-of-excitation test of the input")
    s.add_argument("--trajectory", required=True)
    s.add_argument("--order", type=int, required=True)
    s.set_defaults(func=cmd_pe_check)

    s = sub.add_parser("place", help="data-driven pole placement / eigenstructure assignment")
    s.add_argument("--trajectory", required=True)
    s.add_argument("--poles", required=True)
    s.add_argument("--eigvecs")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_place)

    s = sub.add_parser("simulate", help="simulate a system with Gaussian input")
    s.add_argument("--system", required=True)
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--noise", type=float, default=0.0, help="noise variance")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("bench", help="run an experiment")
    s.add_argument("experiment", choices=["reactor", "vary-t", "montecarlo"])
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("identify", help="least-squares estimate of (A, B)")
    s.add_argument("--trajectory", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_identify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DDPoleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"error: linear algebra failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
