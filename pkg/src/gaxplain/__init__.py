"""Surrogate-based explanations of genetic algorithm solutions.

A binary GA is run on a benchmark problem, an epsilon-SVR surrogate is fitted
to the populations it evaluated, and the surrogate is probed one bit at a time
around the GA's best solution to obtain signed per-variable importances.
"""
from .core import EvaluationArchive, Individual, Population, RngStream, random_bitstring
from .explain import (
    ImportanceVector,
    ProbeReport,
    mean_importance,
    probe_solution,
    rank_variables,
)
from .ga import EvalSchedule, GaConfig, GaResult, run_ga
from .harness import ExperimentConfig, emit_csv, emit_svg_barchart, read_csv, run_experiment
from .problems import (
    CnfFormula,
    ProblemSpec,
    checkerboard_1d,
    checkerboard_2d,
    generate_random_3sat,
    maxsat,
    parse_dimacs,
    trap5,
    write_dimacs,
)
from .surrogate import SvrModel, SvrParams, load_model, save_model, train_svr

__version__ = "0.1.0"
