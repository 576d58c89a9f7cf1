"""Command-line entry point: ``mmdp {run,sweep-b1,sweep-smin,solve,oracle}``.

Exit codes: 0 success, 2 bad config or input file, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .config import ConfigError, load_config
from .qubo import QuboProblem
from .sim.policies import POLICY_KINDS
from .solver import AnnealSchedule, SolverParams, brute_force, solve_sa, solve_sqa

log = logging.getLogger("mmdp")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class InputError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmdp", description="Micro-mobility dispatch experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def experiment(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", type=Path)
        sp.add_argument("--out", type=Path, default=Path("results"))
        sp.add_argument("--seed", type=int)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--duration", type=float, help="trial length in seconds")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted config key, value parsed as JSON (repeatable)")
        return sp

    sp = experiment("run", "compare dispatch policies")
    sp.add_argument("--policy", action="append", choices=POLICY_KINDS,
                    help="policy to run (repeatable; default: config list)")
    sp = experiment("sweep-b1", "mean wait against the station-target weight B1")
    sp.add_argument("--policy", action="append", choices=POLICY_KINDS)
    sp.add_argument("--values", type=_floats, help="comma-separated B1 values")
    sp = experiment("sweep-smin", "residual energy of forward and reverse annealing")
    sp.add_argument("--values", type=_floats, help="comma-separated s_min values")
    sp.add_argument("--instances", type=int)

    for name, help_ in (("solve", "anneal a QUBO problem file"),
                        ("oracle", "brute-force a QUBO problem file")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("problem", type=Path, help="QUBO problem JSON")
        sp.add_argument("--out", type=Path, help="output file (default: stdout)")
    sp = sub.choices["solve"]
    sp.add_argument("--sampler", choices=("sqa", "sa"), default="sqa")
    sp.add_argument("--schedule", choices=("forward", "reverse"), default="forward")
    sp.add_argument("--s-min", type=float, default=0.4)
    sp.add_argument("--initial", help="initial bitstring such as 0110 (reverse schedule)")
    sp.add_argument("--include-initial", action="store_true")
    sp.add_argument("--replicas", type=int, default=SolverParams.replicas)
    sp.add_argument("--sweeps", type=int, default=SolverParams.sweeps)
    sp.add_argument("--reads", type=int, default=SolverParams.reads)
    sp.add_argument("--beta", type=float, default=SolverParams.beta)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--e-opt", type=float, help="known optimum, enables p_opt, TTS and E_res")
    sp.add_argument("--timing", action="store_true",
                    help="include wall-clock t_c and TTS (not reproducible)")
    return p


# -- output -------------------------------------------------------------------

def rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(experiments.CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_results(out: Path, name: str, cfg: dict, rows) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.csv").write_text(rows_csv(rows))
    summary = {"experiment": name, "config": cfg, "rows": [r.to_dict() for r in rows]}
    (out / f"{name}.json").write_text(_dump(summary))


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


# -- commands -----------------------------------------------------------------

def _experiment_config(args) -> dict:
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.trials is not None:
        overrides.append(f"trials={args.trials}")
    if args.duration is not None:
        overrides.append(f"trial_duration={args.duration}")
    if getattr(args, "instances", None) is not None:
        overrides.append(f"sweep_smin.instances={args.instances}")
    return load_config(args.config, overrides)


def cmd_run(args) -> int:
    cfg = _experiment_config(args)
    rows = experiments.run_policies(cfg, args.policy)
    write_results(args.out, "run", cfg, rows)
    return EXIT_OK


def cmd_sweep_b1(args) -> int:
    cfg = _experiment_config(args)
    rows = experiments.sweep_b1(cfg, args.values, args.policy)
    write_results(args.out, "sweep_b1", cfg, rows)
    return EXIT_OK


def cmd_sweep_smin(args) -> int:
    cfg = _experiment_config(args)
    rows = experiments.sweep_smin(cfg, args.values)
    write_results(args.out, "sweep_smin", cfg, rows)
    return EXIT_OK


def _load_problem(path: Path) -> QuboProblem:
    try:
        return QuboProblem.from_json(path.read_text())
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read problem {path}: {exc}") from exc


def cmd_solve(args) -> int:
    problem = _load_problem(args.problem)
    initial = None
    if args.initial is not None:
        if set(args.initial) - {"0", "1"}:
            raise InputError("--initial must be a string of 0/1")
        initial = np.array([int(c) for c in args.initial], dtype=np.int8)
    params = SolverParams(replicas=args.replicas, sweeps=args.sweeps, beta=args.beta,
                          reads=args.reads, seed=args.seed, include_initial=args.include_initial)
    if args.sampler == "sa":
        report = solve_sa(problem, params, e_opt=args.e_opt)
    else:
        sched = (AnnealSchedule.reverse(args.s_min, params.sweeps) if args.schedule == "reverse"
                 else AnnealSchedule.forward(params.sweeps))
        report = solve_sqa(problem, sched, params, initial=initial, e_opt=args.e_opt)
    _emit(_dump(report.to_dict(timing=args.timing)), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    problem = _load_problem(args.problem)
    bits, e = brute_force(problem)
    _emit(_dump({"bits": [int(b) for b in bits], "energy": e}), args.out)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep-b1": cmd_sweep_b1, "sweep-smin": cmd_sweep_smin,
            "solve": cmd_solve, "oracle": cmd_oracle}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InputError) as exc:
        print(f"mmdp: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.debug("runtime failure", exc_info=True)
        print(f"mmdp: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
