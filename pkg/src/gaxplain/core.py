"""Bitstrings, individuals, populations, the seeded RNG and the archive of
true fitness evaluations used to train surrogates.

Genomes are plain ``numpy`` arrays of dtype ``uint8`` holding 0/1 values.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Bitstring",
    "EmptyTrainingSetError",
    "EvaluationArchive",
    "FitnessSource",
    "Individual",
    "Population",
    "RngStream",
    "archive_append",
    "as_bitstring",
    "random_bitstring",
    "training_view",
]

Bitstring = np.ndarray

_MAX_SEED = 2**64


class EmptyTrainingSetError(ValueError):
    """Raised when a training view selects no archive records."""


class RngStream:
    """Seeded random stream backed by the PCG64 generator (PCG-XSL-RR 128/64).

    PCG64 is specified bit-for-bit by numpy and produces the same sequence on
    every platform for a given seed. One "draw" is one 64-bit output of the
    underlying bit generator; ``random`` consumes exactly one draw per value.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < _MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.bit_generator = np.random.PCG64(seed)
        self.generator = np.random.Generator(self.bit_generator)

    def random(self, size=None):
        return self.generator.random(size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size=size)

    def choice(self, a, size=None, replace=True):
        return self.generator.choice(a, size=size, replace=replace)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed})"


def as_bitstring(x) -> Bitstring:
    """Return ``x`` as a 1-D ``uint8`` array, checking that it is binary."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError(f"bitstring must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("bitstring must have at least one bit")
    if arr.dtype != np.uint8:
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("bitstring entries must be 0 or 1")
        arr = arr.astype(np.uint8)
    elif arr.max() > 1:
        raise ValueError("bitstring entries must be 0 or 1")
    return arr


def random_bitstring(rng: RngStream, n: int) -> Bitstring:
    """Uniform random bitstring of length ``n``; consumes exactly ``n`` draws."""
    if n < 1:
        raise ValueError(f"bitstring length must be positive, got {n}")
    return (rng.random(n) < 0.5).astype(np.uint8)


class FitnessSource(enum.Enum):
    TRUE = "true"
    SURROGATE = "surrogate"
    UNSET = "unset"


@dataclass(eq=False)
class Individual:
    genome: Bitstring
    fitness: float | None = None
    fitness_source: FitnessSource = FitnessSource.UNSET

    def __post_init__(self):
        if (self.fitness is None) != (self.fitness_source is FitnessSource.UNSET):
            raise ValueError("fitness_source must be UNSET exactly when fitness is unset")

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None

    def set_fitness(self, value: float, source: FitnessSource) -> None:
        if source is FitnessSource.UNSET:
            raise ValueError("cannot assign a fitness with source UNSET")
        self.fitness = float(value)
        self.fitness_source = source

    def copy(self) -> "Individual":
        return Individual(self.genome.copy(), self.fitness, self.fitness_source)


@dataclass
class Population:
    members: list[Individual]
    generation_index: int = 0

    def __post_init__(self):
        if self.generation_index < 0:
            raise ValueError("generation_index must be non-negative")
        lengths = {len(m.genome) for m in self.members}
        if len(lengths) > 1:
            raise ValueError(f"members have differing genome lengths: {sorted(lengths)}")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i) -> Individual:
        return self.members[i]

    def fitness_array(self) -> np.ndarray:
        if any(m.fitness is None for m in self.members):
            raise ValueError("population contains unevaluated members")
        return np.array([m.fitness for m in self.members], dtype=np.float64)


@dataclass
class EvaluationArchive:
    """Append-only log of true fitness evaluations.

    Duplicated genomes are kept as separate rows. Only values returned by the
    true fitness function belong here; surrogate estimates are never archived.
    """

    genomes: list[Bitstring] = field(default_factory=list)
    fitness: list[float] = field(default_factory=list)
    generations: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.fitness)

    def append(self, genome, fitness: float, generation: int) -> "EvaluationArchive":
        generation = int(generation)
        if self.generations and generation < self.generations[-1]:
            raise ValueError(
                f"generation {generation} precedes last archived generation {self.generations[-1]}"
            )
        self.genomes.append(np.array(genome, dtype=np.uint8, copy=True))
        self.fitness.append(float(fitness))
        self.generations.append(generation)
        return self

    def records(self):
        """Iterate ``(genome, fitness, generation)`` in insertion order."""
        return zip(self.genomes, self.fitness, self.generations)

    def select(self, gen_lo: int, gen_hi: int) -> np.ndarray:
        """Indices of records with ``gen_lo <= generation <= gen_hi``."""
        if gen_lo > gen_hi:
            raise ValueError(f"empty generation range [{gen_lo}, {gen_hi}]")
        gens = np.asarray(self.generations, dtype=np.int64)
        return np.flatnonzero((gens >= gen_lo) & (gens <= gen_hi))

    def training_view(self, gen_lo: int, gen_hi: int) -> tuple[np.ndarray, np.ndarray]:
        """Training matrix ``X`` (float64 bits) and targets ``y`` for a generation range."""
        idx = self.select(gen_lo, gen_hi)
        if idx.size == 0:
            raise EmptyTrainingSetError(
                f"no archived evaluations in generations [{gen_lo}, {gen_hi}]"
            )
        X = np.stack([self.genomes[i] for i in idx]).astype(np.float64)
        y = np.asarray(self.fitness, dtype=np.float64)[idx]
        return X, y

    def best(self, gen_lo: int | None = None, gen_hi: int | None = None) -> tuple[Bitstring, float, int]:
        """First record with maximal fitness inside the (optional) generation range."""
        if gen_lo is None and gen_hi is None:
            idx = np.arange(len(self))
        else:
            lo = 0 if gen_lo is None else gen_lo
            hi = max(self.generations, default=0) if gen_hi is None else gen_hi
            idx = self.select(lo, hi)
        if idx.size == 0:
            raise EmptyTrainingSetError("archive selection is empty")
        fit = np.asarray(self.fitness, dtype=np.float64)[idx]
        k = int(idx[int(np.argmax(fit))])
        return self.genomes[k].copy(), self.fitness[k], self.generations[k]


def archive_append(archive: EvaluationArchive, genome, fitness: float, generation: int) -> EvaluationArchive:
    return archive.append(genome, fitness, generation)


def training_view(archive: EvaluationArchive, gen_lo: int, gen_hi: int):
    return archive.training_view(gen_lo, gen_hi)
