"""Command line interface: ``gaxplain {run,explain,plot,gen-cnf}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .core import RngStream
from .harness import (
    PROBLEMS,
    ExperimentConfig,
    ExperimentError,
    build_problem,
    emit_svg_barchart,
    read_csv,
    run_experiment,
)
from .ga import run_ga
from .problems import generate_random_3sat, write_dimacs

# flag -> ExperimentConfig field
_FLAG_FIELDS = {
    "problem": "problem", "n": "n", "pop": "pop", "gens": "gens", "mut_rate": "mut_rate",
    "xover_rate": "xover_rate", "tournament": "tournament", "elites": "elites", "seed": "seed",
    "repeats": "repeats", "train": "train", "cnf": "cnf", "cnf_seed": "cnf_seed",
    "gen_cnf_clauses": "gen_cnf_clauses", "alternate_period": "alternate_period",
    "probe_seed": "probe_seed", "out": "out",
}


def _add_experiment_flags(p: argparse.ArgumentParser, with_train: bool) -> None:
    # Defaults are None so that values from --config survive unless overridden.
    p.add_argument("--config", type=Path, help="JSON experiment config; flags override its values")
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--n", type=int, help="genome length (default 100)")
    p.add_argument("--pop", type=int, help="population size (default 100)")
    p.add_argument("--gens", type=int, help="generations including the initial one (default 100)")
    p.add_argument("--mut-rate", type=float, help="per-bit mutation probability (default 0.01)")
    p.add_argument("--xover-rate", type=float, help="per-pair crossover probability (default 0.95)")
    p.add_argument("--tournament", type=int, help="tournament size (default 5)")
    p.add_argument("--elites", type=int, help="elite count (default 1)")
    p.add_argument("--seed", type=int, help="base seed; run r uses seed+r (default 0)")
    p.add_argument("--repeats", type=int, help="independent GA runs (default 1)")
    p.add_argument("--cnf", help="DIMACS CNF file for --problem maxsat")
    p.add_argument("--cnf-seed", type=int, help="seed of the generated 3-CNF when --cnf is absent")
    p.add_argument("--gen-cnf-clauses", type=int, help="clauses of the generated 3-CNF (default 427)")
    p.add_argument("--alternate-period", type=int,
                   help="alternate true/surrogate evaluation, true every PERIOD generations")
    p.add_argument("--out", help="output directory (default ./results)")
    if with_train:
        p.add_argument("--train", action="append", metavar="{first,all,LO..HI}",
                       help="training generations; repeat to compare several (default all)")
        p.add_argument("--probe-seed", choices=("range_best", "best_ever"),
                       help="solution to probe (default range_best)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaxplain",
        description="Explain GA solutions by probing an SVR surrogate trained on the GA's populations.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the GA only and report best fitness")
    _add_experiment_flags(p, with_train=False)

    p = sub.add_parser("explain", help="GA + surrogate + probe; writes CSV reports and SVG charts")
    _add_experiment_flags(p, with_train=True)

    p = sub.add_parser("plot", help="render a probe or mean-importance CSV as an SVG bar chart")
    p.add_argument("csv", type=Path)
    p.add_argument("--out", type=Path, help="SVG path (default: CSV path with .svg suffix)")
    p.add_argument("--title", help="chart title (default: CSV file name)")

    p = sub.add_parser("gen-cnf", help="write a seeded uniform random 3-CNF in DIMACS format")
    p.add_argument("--vars", type=int, default=100)
    p.add_argument("--clauses", type=int, default=427)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="output file (default stdout)")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base = ExperimentConfig()
    if args.config is not None:
        base = ExperimentConfig.from_json(args.config.read_text())
    updates = {}
    for flag, name in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            updates[name] = tuple(value) if name == "train" else value
    for k, v in updates.items():
        setattr(base, k, v)
    return base


def _read_importance(path: Path):
    with open(path) as fh:
        header = fh.readline().strip()
    if header == "variable_index,mean_importance":
        import numpy as np

        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return data[:, 1]
    return read_csv(path).importance


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "gen-cnf":
        try:
            formula = generate_random_3sat(RngStream(args.seed), args.vars, args.clauses)
        except ValueError as exc:
            parser.error(str(exc))
        text = write_dimacs(formula, [f"uniform random 3-CNF, seed {args.seed}"])
        if args.out is None:
            sys.stdout.write(text)
        else:
            args.out.write_text(text)
        return 0

    if args.command == "plot":
        try:
            values = _read_importance(args.csv)
            out = args.out or args.csv.with_suffix(".svg")
            emit_svg_barchart(values, args.title or args.csv.stem, out)
        except (OSError, ValueError) as exc:
            print(f"gaxplain plot: {exc}", file=sys.stderr)
            return 1
        print(out)
        return 0

    try:
        config = config_from_args(args)
        problem = config.validate()
    except (ValueError, OSError, TypeError) as exc:
        parser.error(str(exc))

    if args.command == "run":
        for r in range(config.repeats):
            result = run_ga(problem, config.ga_config(config.seed + r))
            bits = "".join(map(str, result.best.genome))
            print(f"run {r} seed {config.seed + r}: best {result.best.fitness:g} "
                  f"archive {len(result.archive)} genome {bits}")
        return 0

    try:
        output = run_experiment(config)
    except ExperimentError as exc:
        print(f"gaxplain explain: {exc}", file=sys.stderr)
        return 1
    for row in output.summary:
        print(f"run {row.run} seed {row.seed} train {row.train}: best {row.best_fitness:g}, "
              f"{row.train_rows} training rows, {row.n_support} support vectors"
              + ("" if row.svr_converged else " (SVR not converged)"))
    for p in output.files:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
