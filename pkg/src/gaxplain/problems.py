"""Benchmark fitness functions on bitstrings and MAXSAT instance handling.

All fitness functions are maximised and return Python floats.
"""
from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import Bitstring, RngStream, as_bitstring

__all__ = [
    "CnfFormula",
    "DimacsError",
    "ProblemKind",
    "ProblemSpec",
    "checkerboard_1d",
    "checkerboard_2d",
    "eval_checkerboard_1d",
    "eval_checkerboard_2d",
    "eval_maxsat",
    "eval_trap_k",
    "generate_random_3sat",
    "maxsat",
    "parse_dimacs",
    "trap",
    "trap5",
    "write_dimacs",
]


# -- fitness functions -------------------------------------------------------

def eval_checkerboard_1d(x) -> float:
    """Number of adjacent positions holding different bits."""
    x = as_bitstring(x)
    if x.size < 2:
        raise ValueError("1D checkerboard needs at least 2 bits")
    return float(np.count_nonzero(x[1:] != x[:-1]))


def eval_checkerboard_2d(x, s: int) -> float:
    """2D checkerboard on an ``s`` x ``s`` grid stored row-major.

    Each interior cell loses one point for every one of its four neighbours
    holding the same bit, starting from the maximum ``4 (s-2)^2``. Border
    cells are scored only as neighbours.
    """
    x = as_bitstring(x)
    if s < 3:
        raise ValueError(f"2D checkerboard side must be >= 3, got {s}")
    if x.size != s * s:
        raise ValueError(f"2D checkerboard needs {s * s} bits for side {s}, got {x.size}")
    g = x.reshape(s, s)
    c = g[1:-1, 1:-1]
    same = (
        (c == g[:-2, 1:-1]).sum()
        + (c == g[2:, 1:-1]).sum()
        + (c == g[1:-1, :-2]).sum()
        + (c == g[1:-1, 2:]).sum()
    )
    return float(4 * (s - 2) ** 2 - int(same))


def trap_block(u: int, k: int, f_high: float, f_low: float) -> float:
    if u == k:
        return float(f_high)
    return f_low - u * f_low / (k - 1)


def eval_trap_k(x, k: int = 5, f_high: float = 5.0, f_low: float = 4.0) -> float:
    """Sum of deceptive trap scores over consecutive blocks of ``k`` bits."""
    x = as_bitstring(x)
    if k < 2:
        raise ValueError(f"trap block size must be >= 2, got {k}")
    if x.size % k:
        raise ValueError(f"trap block size {k} does not divide genome length {x.size}")
    u = x.reshape(-1, k).sum(axis=1).astype(np.float64)
    scores = np.where(u == k, float(f_high), f_low - u * f_low / (k - 1))
    return float(scores.sum())


class DimacsError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class CnfFormula:
    """CNF formula over variables ``1..num_vars``.

    Literals use the DIMACS convention: ``+v`` is variable ``v``, ``-v`` its
    negation.
    """

    num_vars: int
    clauses: tuple[tuple[int, ...], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.num_vars < 1:
            raise ValueError("num_vars must be positive")
        clauses = tuple(tuple(int(l) for l in c) for c in self.clauses)
        for ci, clause in enumerate(clauses):
            if not clause:
                raise ValueError(f"clause {ci} is empty")
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} in clause {ci} out of range 1..{self.num_vars}")
        object.__setattr__(self, "clauses", clauses)

    def __len__(self) -> int:
        return len(self.clauses)

    def literals(self, clause_index: int) -> list[tuple[int, bool]]:
        """Clause as ``(var_index, negated)`` pairs."""
        return [(abs(l), l < 0) for l in self.clauses[clause_index]]

    @cached_property
    def _padded(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        # Ragged clauses padded to equal width; `valid` masks the padding.
        width = max((len(c) for c in self.clauses), default=1)
        m = len(self.clauses)
        var = np.zeros((m, width), dtype=np.intp)
        neg = np.zeros((m, width), dtype=bool)
        valid = np.zeros((m, width), dtype=bool)
        for ci, clause in enumerate(self.clauses):
            for li, lit in enumerate(clause):
                var[ci, li] = abs(lit) - 1
                neg[ci, li] = lit < 0
                valid[ci, li] = True
        return var, neg, valid

    def satisfied(self, x) -> np.ndarray:
        """Boolean mask of satisfied clauses under assignment ``x``."""
        x = as_bitstring(x)
        if x.size != self.num_vars:
            raise ValueError(f"assignment has {x.size} bits, formula has {self.num_vars} variables")
        if not self.clauses:
            return np.zeros(0, dtype=bool)
        var, neg, valid = self._padded
        lit_true = (x[var] == 1) != neg
        return np.any(lit_true & valid, axis=1)


def eval_maxsat(x, formula: CnfFormula) -> float:
    """Number of clauses satisfied by assignment ``x`` (bit ``i-1`` sets variable ``i``)."""
    return float(np.count_nonzero(formula.satisfied(x)))


# -- DIMACS ------------------------------------------------------------------

def parse_dimacs(source) -> CnfFormula:
    """Parse DIMACS CNF from a string, a text stream or an iterable of lines.

    Clauses may span lines and must be terminated by ``0``. A trailing clause
    without terminator is accepted at end of input.
    """
    if isinstance(source, str):
        lines: Iterable[str] = io.StringIO(source)
    else:
        lines = source

    num_vars = num_clauses = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    lineno = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            # Some benchmark archives end with "%\n0"; nothing follows it.
            break
        if line.startswith("p"):
            if num_vars is not None:
                raise DimacsError("duplicate problem header", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"malformed header {line!r}", lineno)
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"malformed header {line!r}", lineno) from None
            if num_vars < 1 or num_clauses < 0:
                raise DimacsError(f"invalid header counts {line!r}", lineno)
            continue
        if num_vars is None:
            raise DimacsError("clause data before problem header", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"invalid literal {tok!r}", lineno) from None
            if lit == 0:
                if not current:
                    raise DimacsError("zero-length clause", lineno)
                clauses.append(tuple(current))
                current = []
            elif abs(lit) > num_vars:
                raise DimacsError(f"literal {lit} out of range 1..{num_vars}", lineno)
            else:
                current.append(lit)
    if num_vars is None:
        raise DimacsError("missing problem header", lineno or None)
    if current:
        clauses.append(tuple(current))
    if len(clauses) != num_clauses:
        raise DimacsError(f"header declares {num_clauses} clauses, found {len(clauses)}", lineno)
    return CnfFormula(num_vars, tuple(clauses))


def write_dimacs(formula: CnfFormula, comments: Sequence[str] = ()) -> str:
    out = [f"c {c}" for c in comments]
    out.append(f"p cnf {formula.num_vars} {len(formula.clauses)}")
    out.extend(" ".join(str(l) for l in clause) + " 0" for clause in formula.clauses)
    return "\n".join(out) + "\n"


def generate_random_3sat(rng: RngStream, num_vars: int, num_clauses: int) -> CnfFormula:
    """Uniform random 3-CNF: three distinct variables per clause, each negated with p=0.5."""
    if num_vars < 3:
        raise ValueError(f"random 3-SAT needs at least 3 variables, got {num_vars}")
    if num_clauses < 0:
        raise ValueError("num_clauses must be non-negative")
    clauses = []
    for _ in range(num_clauses):
        vs = rng.choice(num_vars, size=3, replace=False) + 1
        signs = np.where(rng.random(3) < 0.5, -1, 1)
        clauses.append(tuple(int(v * s) for v, s in zip(vs, signs)))
    return CnfFormula(num_vars, tuple(clauses))


# -- problem specs -----------------------------------------------------------

class ProblemKind(enum.Enum):
    CHECKERBOARD_1D = "checkerboard1d"
    CHECKERBOARD_2D = "checkerboard2d"
    TRAP_K = "trap5"
    MAXSAT = "maxsat"


@dataclass(frozen=True)
class ProblemSpec:
    """A benchmark instance: kind, genome length and kind-specific parameters."""

    kind: ProblemKind
    n: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        k, n, p = self.kind, self.n, self.params
        if n < 1:
            raise ValueError("genome length must be positive")
        if k is ProblemKind.CHECKERBOARD_1D:
            if n < 2:
                raise ValueError("1D checkerboard needs n >= 2")
        elif k is ProblemKind.CHECKERBOARD_2D:
            s = p.get("s")
            if s is None or s < 3 or s * s != n:
                raise ValueError(f"2D checkerboard needs n = s*s with s >= 3, got n={n}, s={s}")
        elif k is ProblemKind.TRAP_K:
            bk, hi, lo = p.get("k"), p.get("f_high"), p.get("f_low")
            if bk is None or bk < 2 or n % bk:
                raise ValueError(f"trap needs block size k >= 2 dividing n={n}, got k={bk}")
            if not (hi > lo >= 0):
                raise ValueError(f"trap needs f_high > f_low >= 0, got {hi}, {lo}")
        elif k is ProblemKind.MAXSAT:
            f = p.get("formula")
            if not isinstance(f, CnfFormula) or f.num_vars != n:
                raise ValueError("MAXSAT needs a CnfFormula whose variable count equals n")

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def max_fitness(self) -> float | None:
        """Known global optimum, or None where it is instance-dependent (MAXSAT)."""
        k, n, p = self.kind, self.n, self.params
        if k is ProblemKind.CHECKERBOARD_1D:
            return float(n - 1)
        if k is ProblemKind.CHECKERBOARD_2D:
            return float(4 * (p["s"] - 2) ** 2)
        if k is ProblemKind.TRAP_K:
            return n // p["k"] * float(p["f_high"])
        return None

    def fitness_function(self) -> Callable[[Bitstring], float]:
        k, p = self.kind, self.params
        if k is ProblemKind.CHECKERBOARD_1D:
            return eval_checkerboard_1d
        if k is ProblemKind.CHECKERBOARD_2D:
            s = p["s"]
            return lambda x: eval_checkerboard_2d(x, s)
        if k is ProblemKind.TRAP_K:
            bk, hi, lo = p["k"], p["f_high"], p["f_low"]
            return lambda x: eval_trap_k(x, bk, hi, lo)
        formula = p["formula"]
        return lambda x: eval_maxsat(x, formula)

    def evaluate(self, x) -> float:
        x = as_bitstring(x)
        if x.size != self.n:
            raise ValueError(f"{self.name} expects {self.n} bits, got {x.size}")
        return self.fitness_function()(x)


def checkerboard_1d(n: int = 100) -> ProblemSpec:
    return ProblemSpec(ProblemKind.CHECKERBOARD_1D, n)


def checkerboard_2d(n: int = 100) -> ProblemSpec:
    s = math.isqrt(n)
    if s * s != n:
        raise ValueError(f"2D checkerboard genome length must be a perfect square, got {n}")
    return ProblemSpec(ProblemKind.CHECKERBOARD_2D, n, {"s": s})


def trap(n: int = 100, k: int = 5, f_high: float = 5.0, f_low: float = 4.0) -> ProblemSpec:
    return ProblemSpec(ProblemKind.TRAP_K, n, {"k": k, "f_high": f_high, "f_low": f_low})


def trap5(n: int = 100) -> ProblemSpec:
    return trap(n, 5, 5.0, 4.0)


def maxsat(formula: CnfFormula) -> ProblemSpec:
    return ProblemSpec(ProblemKind.MAXSAT, formula.num_vars, {"formula": formula})
