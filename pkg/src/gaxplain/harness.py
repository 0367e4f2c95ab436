"""Experiment runner: GA -> archive -> SVR surrogate -> probe, plus CSV/SVG output."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .core import RngStream
from .explain import (
    ImportanceVector,
    ProbeReport,
    ProbeRow,
    mean_importance,
    probe_solution,
)
from .ga import EvalSchedule, GaConfig, GaResult, run_ga
from .problems import (
    ProblemSpec,
    checkerboard_1d,
    checkerboard_2d,
    generate_random_3sat,
    maxsat,
    parse_dimacs,
    trap,
)
from .surrogate import SvrModel, SvrParams, save_model, train_svr

log = logging.getLogger(__name__)

__all__ = [
    "CSV_HEADER",
    "ExperimentConfig",
    "ExperimentError",
    "ExperimentOutput",
    "TrainRange",
    "build_problem",
    "emit_csv",
    "emit_svg_barchart",
    "read_csv",
    "run_experiment",
]

PROBLEMS = ("checkerboard1d", "checkerboard2d", "trap5", "maxsat")
CSV_HEADER = ("variable_index", "seed_bit", "baseline", "flipped_prediction", "importance")


class ExperimentError(RuntimeError):
    def __init__(self, run_index: int, cause: BaseException):
        self.run_index = run_index
        where = f"run {run_index}" if run_index >= 0 else "aggregation"
        super().__init__(f"{where} failed: {cause}")


@dataclass(frozen=True)
class TrainRange:
    """Inclusive generation range used to build a surrogate's training set."""

    label: str
    lo: int
    hi: int

    @classmethod
    def parse(cls, text: str, max_generations: int) -> "TrainRange":
        last = max_generations - 1
        if text == "first":
            return cls("first", 0, 0)
        if text == "all":
            return cls("all", 0, last)
        lo_s, sep, hi_s = text.partition("..")
        if not sep:
            raise ValueError(f"training range must be 'first', 'all' or 'LO..HI', got {text!r}")
        try:
            lo, hi = int(lo_s), int(hi_s)
        except ValueError:
            raise ValueError(f"training range bounds must be integers, got {text!r}") from None
        if not 0 <= lo <= hi <= last:
            raise ValueError(f"training range {text!r} must satisfy 0 <= LO <= HI <= {last}")
        return cls(f"gens{lo}-{hi}", lo, hi)


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce an experiment.

    ``train`` lists the training ranges to compare; the GA runs once per
    repeat and each range gets its own surrogate from the same archive.
    ``probe_seed`` picks the solution to probe: ``"range_best"`` is the best
    truly evaluated genome inside the training range, ``"best_ever"`` the best
    of the whole run.
    """

    problem: str = "checkerboard1d"
    n: int = 100
    pop: int = 100
    gens: int = 100
    mut_rate: float = 0.01
    xover_rate: float = 0.95
    tournament: int = 5
    elites: int = 1
    seed: int = 0
    repeats: int = 1
    train: tuple[str, ...] = ("all",)
    cnf: str | None = None
    cnf_seed: int = 0
    gen_cnf_clauses: int = 427
    alternate_period: int | None = None
    probe_seed: str = "range_best"
    out: str = "results"
    svr: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "train" in data:
            t = data["train"]
            data["train"] = (t,) if isinstance(t, str) else tuple(t)
        return cls(**data)

    def to_json(self) -> str:
        d = dataclasses.asdict(self)
        d["train"] = list(self.train)
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    def ga_config(self, seed: int) -> GaConfig:
        schedule = (
            EvalSchedule.alternate(self.alternate_period)
            if self.alternate_period is not None
            else EvalSchedule()
        )
        return GaConfig(
            pop_size=self.pop,
            genome_length=self.n,
            max_generations=self.gens,
            mutation_rate=self.mut_rate,
            crossover_rate=self.xover_rate,
            tournament_size=self.tournament,
            elite_count=self.elites,
            seed=seed,
            eval_schedule=schedule,
        )

    def train_ranges(self) -> list[TrainRange]:
        if not self.train:
            raise ValueError("at least one training range is required")
        ranges = [TrainRange.parse(t, self.gens) for t in self.train]
        labels = [r.label for r in ranges]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate training ranges: {labels}")
        return ranges

    def svr_params(self) -> SvrParams:
        return SvrParams(**self.svr)

    def validate(self) -> ProblemSpec:
        """Check every parameter up front and return the problem instance."""
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}; choose from {', '.join(PROBLEMS)}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.probe_seed not in ("range_best", "best_ever"):
            raise ValueError(f"probe_seed must be 'range_best' or 'best_ever', got {self.probe_seed!r}")
        if not 0 <= self.seed or self.seed + self.repeats - 1 >= 2**64:
            raise ValueError("run seeds must be 64-bit unsigned integers")
        if self.alternate_period is not None and self.alternate_period < 1:
            raise ValueError(f"alternate period must be >= 1, got {self.alternate_period}")
        problem = build_problem(self)
        if problem.n != self.n:
            raise ValueError(f"--n {self.n} does not match the CNF variable count {problem.n}")
        self.ga_config(self.seed).validate()
        self.svr_params()
        schedule = self.ga_config(self.seed).eval_schedule
        for r in self.train_ranges():
            if not any(schedule.uses_true_fitness(g) for g in range(r.lo, r.hi + 1)):
                raise ValueError(f"training range {r.label} contains no truly evaluated generation")
        return problem


def build_problem(config: ExperimentConfig) -> ProblemSpec:
    if config.problem == "checkerboard1d":
        return checkerboard_1d(config.n)
    if config.problem == "checkerboard2d":
        return checkerboard_2d(config.n)
    if config.problem == "trap5":
        return trap(config.n, 5, 5.0, 4.0)
    if config.problem == "maxsat":
        if config.cnf is not None:
            with open(config.cnf) as fh:
                formula = parse_dimacs(fh)
        else:
            formula = generate_random_3sat(RngStream(config.cnf_seed), config.n, config.gen_cnf_clauses)
        return maxsat(formula)
    raise ValueError(f"unknown problem {config.problem!r}")


@dataclass
class RunSummary:
    run: int
    seed: int
    train: str
    best_fitness: float
    archive_size: int
    train_rows: int
    probe_seed_fitness: float
    svr_converged: bool
    svr_iterations: int
    n_support: int


@dataclass
class ExperimentOutput:
    out_dir: Path
    reports: dict[tuple[int, str], ProbeReport]
    report_paths: dict[tuple[int, str], Path]
    mean_importance: dict[str, np.ndarray]
    summary: list[RunSummary]
    files: list[Path]
    ga_results: list[GaResult] = field(repr=False, default_factory=list)


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_csv(report: ProbeReport, path) -> Path:
    """Write a probe report; reals use 17 significant digits so parsing is exact."""
    if len(report) == 0:
        raise ValueError("refusing to write an empty probe report")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sorted(report.rows, key=lambda r: r.variable_index):
        w.writerow([r.variable_index, r.seed_bit, _fmt(r.baseline), _fmt(r.flipped_prediction), _fmt(r.importance)])
    path = Path(path)
    try:
        _atomic_write(path, buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write probe report to {path}: {exc}") from exc
    return path


def read_csv(path) -> ProbeReport:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(CSV_HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields, got {len(rec)}")
            rows.append(ProbeRow(int(rec[0]), int(rec[1]), float(rec[2]), float(rec[3]), float(rec[4])))
    if not rows:
        raise ValueError(f"{path}: probe report has no rows")
    return ProbeReport(rows)


def _write_mean_csv(values: np.ndarray, path: Path) -> None:
    lines = ["variable_index,mean_importance"]
    lines += [f"{i},{_fmt(v)}" for i, v in enumerate(values)]
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_summary_csv(rows: Sequence[RunSummary], path: Path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = [f.name for f in dataclasses.fields(RunSummary)]
    w.writerow(names)
    for r in rows:
        vals = [getattr(r, k) for k in names]
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in vals])
    _atomic_write(path, buf.getvalue())


def emit_svg_barchart(importance, title: str, path, width: int = 960, height: int = 420) -> Path:
    """Signed bar chart: one bar per variable, positives above the zero axis."""
    values = np.asarray(importance, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("cannot plot an empty importance vector")
    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom
    zero_y = top + ph / 2
    vmax = float(np.max(np.abs(values)))
    scale = (ph / 2) / vmax if vmax > 0 else 0.0
    slot = pw / values.size
    bw = slot * 0.8

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<title>{escape(title)}</title>',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
        f'<text x="{width / 2:.2f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{escape(title)}</text>',
        '<g class="bars">',
    ]
    for i, v in enumerate(values):
        h = abs(v) * scale
        x = left + i * slot + (slot - bw) / 2
        y = zero_y - h if v > 0 else zero_y
        cls, color = ("pos", "#1f77b4") if v > 0 else (("neg", "#d62728") if v < 0 else ("zero", "#7f7f7f"))
        out.append(
            f'<rect class="bar {cls}" data-index="{i}" x="{x:.3f}" y="{y:.3f}" '
            f'width="{bw:.3f}" height="{h:.3f}" fill="{color}"/>'
        )
    out.append("</g>")
    out += [
        f'<line class="axis zero" x1="{left}" y1="{zero_y:.2f}" x2="{left + pw}" y2="{zero_y:.2f}" '
        'stroke="black" stroke-width="1"/>',
        f'<line class="axis y" x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black" stroke-width="1"/>',
        f'<text x="{left - 6}" y="{top + 4}" text-anchor="end" font-family="sans-serif" font-size="11">'
        f'{vmax:.4g}</text>',
        f'<text x="{left - 6}" y="{zero_y + 4:.2f}" text-anchor="end" font-family="sans-serif" font-size="11">0</text>',
        f'<text x="{left - 6}" y="{top + ph + 4}" text-anchor="end" font-family="sans-serif" font-size="11">'
        f'{-vmax:.4g}</text>',
    ]
    step = max(1, int(np.ceil(values.size / 10)))
    for i in range(0, values.size, step):
        cx = left + (i + 0.5) * slot
        out.append(
            f'<text x="{cx:.2f}" y="{top + ph + 16}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="10">{i}</text>'
        )
    out += [
        f'<text class="label x" x="{left + pw / 2:.2f}" y="{height - 10}" text-anchor="middle" '
        'font-family="sans-serif" font-size="12">variable index</text>',
        f'<text class="label y" x="16" y="{zero_y:.2f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 16 {zero_y:.2f})">contribution to surrogate fitness</text>',
        "</svg>",
    ]
    path = Path(path)
    _atomic_write(path, "\n".join(out) + "\n")
    return path


def _probe_seed(result: GaResult, rng: TrainRange, policy: str):
    if policy == "best_ever":
        return result.best.genome.copy(), float(result.best.fitness)
    genome, fit, _ = result.archive.best(rng.lo, rng.hi)
    return genome, float(fit)


def run_experiment(config: ExperimentConfig) -> ExperimentOutput:
    """Run ``config.repeats`` GA runs and probe one surrogate per training range.

    Run ``r`` uses GA seed ``config.seed + r``. Files written to ``config.out``:
    ``{problem}_{train}_run{r}.csv`` probe reports, matching ``.svr`` models,
    ``mean_importance_{train}.csv``/``.svg``, ``summary.csv`` and ``config.json``.
    On failure every file written by this call is removed.
    """
    problem = config.validate()
    ranges = config.train_ranges()
    params = config.svr_params()
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    trainer = None
    if config.alternate_period is not None:
        trainer = lambda X, y: train_svr(X, y, params)

    written: list[Path] = []
    reports: dict[tuple[int, str], ProbeReport] = {}
    paths: dict[tuple[int, str], Path] = {}
    vectors: dict[str, list[ImportanceVector]] = {r.label: [] for r in ranges}
    summary: list[RunSummary] = []
    ga_results: list[GaResult] = []
    run = 0
    try:
        for run in range(config.repeats):
            seed = config.seed + run
            result = run_ga(problem, config.ga_config(seed), trainer)
            ga_results.append(result)
            log.info("run %d seed %d: best fitness %g", run, seed, result.best.fitness)
            for tr in ranges:
                X, y = result.archive.training_view(tr.lo, tr.hi)
                model = train_svr(X, y, params)
                genome, seed_fit = _probe_seed(result, tr, config.probe_seed)
                vec = probe_solution(genome, model.predict)
                vectors[tr.label].append(vec)
                report = ProbeReport.from_importance(
                    vec, problem=problem.name, train=tr.label, train_range=(tr.lo, tr.hi), seed=seed, run=run
                )
                stem = f"{problem.name}_{tr.label}_run{run:03d}"
                p = emit_csv(report, out_dir / f"{stem}.csv")
                written.append(p)
                mp = out_dir / f"{stem}.svr"
                buf = io.StringIO()
                save_model(model, buf)
                _atomic_write(mp, buf.getvalue())
                written.append(mp)
                reports[(run, tr.label)] = report
                paths[(run, tr.label)] = p
                summary.append(
                    RunSummary(
                        run, seed, tr.label, float(result.best.fitness), len(result.archive),
                        int(y.size), seed_fit, model.converged, model.n_iter, model.n_support,
                    )
                )
        run = -1
        means: dict[str, np.ndarray] = {}
        for tr in ranges:
            m = mean_importance(vectors[tr.label])
            means[tr.label] = m
            p = out_dir / f"mean_importance_{tr.label}.csv"
            _write_mean_csv(m, p)
            written.append(p)
            title = f"{problem.name}: mean contribution per variable ({tr.label}, {config.repeats} run(s))"
            written.append(emit_svg_barchart(m, title, out_dir / f"mean_importance_{tr.label}.svg"))
        p = out_dir / "summary.csv"
        _write_summary_csv(summary, p)
        written.append(p)
        p = out_dir / "config.json"
        _atomic_write(p, config.to_json())
        written.append(p)
    except Exception as exc:
        for p in written:
            try:
                p.unlink()
            except FileNotFoundError:
                pass
        raise ExperimentError(run, exc) from exc

    return ExperimentOutput(out_dir, reports, paths, means, summary, written, ga_results)
