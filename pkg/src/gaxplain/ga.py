"""Generational binary GA with tournament selection, uniform crossover,
bit-flip mutation and elitism.

Evaluation can optionally alternate between the true fitness function and a
surrogate retrained on every true evaluation made so far.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    Bitstring,
    EvaluationArchive,
    FitnessSource,
    Individual,
    Population,
    RngStream,
    as_bitstring,
    random_bitstring,
)
from .problems import ProblemSpec

__all__ = [
    "EvalMode",
    "EvalSchedule",
    "GaConfig",
    "GaResult",
    "bitflip_mutate",
    "run_ga",
    "tournament_select",
    "uniform_crossover",
]

# (X, y) -> predictor mapping a bitstring to an estimated fitness.
SurrogateTrainer = Callable[[np.ndarray, np.ndarray], Callable[[Bitstring], float]]


class EvalMode(enum.Enum):
    TRUE_ONLY = "true_only"
    ALTERNATE = "alternate"


@dataclass(frozen=True)
class EvalSchedule:
    """Which generations use the true fitness function.

    In ``ALTERNATE`` mode generation ``t`` is truly evaluated when
    ``t % period == 0``; the others are scored by the current surrogate.
    Generation 0 is always truly evaluated.
    """

    mode: EvalMode = EvalMode.TRUE_ONLY
    period: int = 2

    def __post_init__(self):
        if self.mode is EvalMode.ALTERNATE and self.period < 1:
            raise ValueError(f"alternation period must be >= 1, got {self.period}")

    @classmethod
    def alternate(cls, period: int) -> "EvalSchedule":
        return cls(EvalMode.ALTERNATE, period)

    def uses_true_fitness(self, generation: int) -> bool:
        if generation == 0 or self.mode is EvalMode.TRUE_ONLY:
            return True
        return generation % self.period == 0


@dataclass(frozen=True)
class GaConfig:
    pop_size: int = 100
    genome_length: int = 100
    max_generations: int = 100
    mutation_rate: float = 0.01
    crossover_rate: float = 0.95
    tournament_size: int = 5
    elite_count: int = 1
    seed: int = 0
    eval_schedule: EvalSchedule = field(default_factory=EvalSchedule)

    def validate(self) -> None:
        if self.pop_size < 2:
            raise ValueError(f"pop_size must be >= 2, got {self.pop_size}")
        if self.genome_length < 1:
            raise ValueError(f"genome_length must be positive, got {self.genome_length}")
        if self.max_generations < 1:
            raise ValueError(f"max_generations must be >= 1, got {self.max_generations}")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError(f"mutation_rate must lie in [0, 1], got {self.mutation_rate}")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError(f"crossover_rate must lie in [0, 1], got {self.crossover_rate}")
        if not 2 <= self.tournament_size <= self.pop_size:
            raise ValueError(
                f"tournament_size must lie in [2, pop_size={self.pop_size}], got {self.tournament_size}"
            )
        if not 0 <= self.elite_count < self.pop_size:
            raise ValueError(f"elite_count must lie in [0, pop_size), got {self.elite_count}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass
class GaResult:
    best: Individual
    archive: EvaluationArchive
    best_fitness_history: list[float]
    final_population: Population
    surrogate_generations: list[int] = field(default_factory=list)


def tournament_select(pop: Population, size: int, rng: RngStream) -> Individual:
    """Best of ``size`` members drawn uniformly with replacement.

    Ties for the best drawn fitness are broken uniformly at random.
    """
    fitness = pop.fitness_array()
    if not 2 <= size <= len(pop):
        raise ValueError(f"tournament size must lie in [2, {len(pop)}], got {size}")
    return pop[_tournament_index(fitness, size, rng)]


def _tournament_index(fitness: np.ndarray, size: int, rng: RngStream) -> int:
    drawn = rng.integers(0, len(fitness), size=size)
    vals = fitness[drawn]
    tied = drawn[vals == vals.max()]
    if len(tied) == 1:
        return int(tied[0])
    return int(tied[rng.integers(0, len(tied))])


def uniform_crossover(a, b, crossover_rate: float, rng: RngStream) -> tuple[Bitstring, Bitstring]:
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError(f"parents differ in length: {a.size} vs {b.size}")
    if rng.random() >= crossover_rate:
        return a.copy(), b.copy()
    take_a = rng.random(a.size) < 0.5
    return np.where(take_a, a, b), np.where(take_a, b, a)


def bitflip_mutate(x, rate: float, rng: RngStream) -> Bitstring:
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"mutation rate must lie in [0, 1], got {rate}")
    x = np.asarray(x, dtype=np.uint8)
    flips = rng.random(x.size) < rate
    return x ^ flips.astype(np.uint8)


def _elite_indices(fitness: np.ndarray, count: int) -> np.ndarray:
    # stable: among equal fitness, earlier members win
    return np.argsort(-fitness, kind="stable")[:count]


def run_ga(
    problem: ProblemSpec,
    config: GaConfig,
    surrogate_trainer: Optional[SurrogateTrainer] = None,
    initial_population: Optional[Sequence[Bitstring]] = None,
    on_generation: Optional[Callable[[Population], None]] = None,
) -> GaResult:
    """Run the GA for ``config.max_generations`` generations (generation 0 included).

    Elites are copied with their cached fitness and are not re-evaluated, so
    after the initial population each truly evaluated generation adds
    ``pop_size - elite_count`` archive rows.

    ``initial_population`` replaces the random generation 0 (the RNG is then
    not used for it). ``on_generation`` is called with every evaluated
    population, generation 0 first.
    """
    config.validate()
    if problem.n != config.genome_length:
        raise ValueError(
            f"problem genome length {problem.n} != config genome_length {config.genome_length}"
        )
    schedule = config.eval_schedule
    if schedule.mode is EvalMode.ALTERNATE and surrogate_trainer is None:
        raise ValueError("ALTERNATE evaluation schedule needs a surrogate_trainer")

    f = problem.fitness_function()
    rng = RngStream(config.seed)
    archive = EvaluationArchive()
    P, e = config.pop_size, config.elite_count

    best: Individual | None = None
    history: list[float] = []
    surrogate_gens: list[int] = []
    predictor = None

    def evaluate(members: list[Individual], gen: int) -> None:
        nonlocal best
        if schedule.uses_true_fitness(gen):
            for ind in members:
                ind.set_fitness(f(ind.genome), FitnessSource.TRUE)
                archive.append(ind.genome, ind.fitness, gen)
                if best is None or ind.fitness > best.fitness:
                    best = ind.copy()
        else:
            for ind in members:
                ind.set_fitness(predictor(ind.genome), FitnessSource.SURROGATE)

    def record_history(pop: Population) -> None:
        true_vals = [m.fitness for m in pop if m.fitness_source is FitnessSource.TRUE]
        if true_vals:
            history.append(max(true_vals))
        else:
            history.append(history[-1])

    if initial_population is None:
        members = [Individual(random_bitstring(rng, config.genome_length)) for _ in range(P)]
    else:
        if len(initial_population) != P:
            raise ValueError(f"initial population has {len(initial_population)} members, expected {P}")
        members = [Individual(as_bitstring(g).copy()) for g in initial_population]
        if any(m.genome.size != config.genome_length for m in members):
            raise ValueError("initial population genome length does not match config")
    pop = Population(members, 0)
    evaluate(pop.members, 0)
    record_history(pop)
    if on_generation is not None:
        on_generation(pop)
    if schedule.mode is EvalMode.ALTERNATE:
        predictor = surrogate_trainer(*archive.training_view(0, 0))

    for gen in range(1, config.max_generations):
        fitness = pop.fitness_array()
        next_members = [pop[int(i)].copy() for i in _elite_indices(fitness, e)]
        offspring: list[Individual] = []
        while len(offspring) < P - e:
            pa = pop[_tournament_index(fitness, config.tournament_size, rng)]
            pb = pop[_tournament_index(fitness, config.tournament_size, rng)]
            c1, c2 = uniform_crossover(pa.genome, pb.genome, config.crossover_rate, rng)
            offspring.append(Individual(bitflip_mutate(c1, config.mutation_rate, rng)))
            if len(offspring) < P - e:
                offspring.append(Individual(bitflip_mutate(c2, config.mutation_rate, rng)))
        evaluate(offspring, gen)
        if not schedule.uses_true_fitness(gen):
            surrogate_gens.append(gen)
        pop = Population(next_members + offspring, gen)
        record_history(pop)
        if on_generation is not None:
            on_generation(pop)
        if schedule.mode is EvalMode.ALTERNATE and schedule.uses_true_fitness(gen):
            predictor = surrogate_trainer(*archive.training_view(0, gen))

    return GaResult(best, archive, history, pop, surrogate_gens)
