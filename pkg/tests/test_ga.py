import numpy as np
import pytest

from gaxplain.core import FitnessSource, Individual, Population, RngStream
from gaxplain.ga import (
    EvalMode,
    EvalSchedule,
    GaConfig,
    bitflip_mutate,
    run_ga,
    tournament_select,
    uniform_crossover,
)
from gaxplain.problems import checkerboard_1d, trap5


class ScriptedRng:
    """Stands in for RngStream, replaying fixed integer draws."""

    def __init__(self, integer_draws):
        self.draws = list(integer_draws)

    def integers(self, low, high=None, size=None):
        if size is None:
            return self.draws.pop(0)
        out = np.array(self.draws[:size])
        del self.draws[:size]
        return out


def make_pop(fitness, n=3):
    members = []
    for i, f in enumerate(fitness):
        ind = Individual(np.full(n, i % 2, dtype=np.uint8))
        ind.set_fitness(f, FitnessSource.TRUE)
        members.append(ind)
    return Population(members)


# -- tournament


def test_tournament_unique_max_of_drawn():
    pop = make_pop([5, 1, 3])
    assert tournament_select(pop, 2, ScriptedRng([0, 1])) is pop[0]
    assert tournament_select(pop, 2, ScriptedRng([1, 2])) is pop[2]


def test_tournament_tie_break_uses_rng():
    pop = make_pop([4, 4, 1])
    # drawn {0, 1, 2}: tied best are members 0 and 1; tie-break draw 1 -> member 1
    assert tournament_select(pop, 3, ScriptedRng([0, 1, 2, 1])) is pop[1]


def test_tournament_full_size_hits_best_at_exact_rate():
    # with replacement, argmax is returned iff it is drawn at least once
    P, trials = 5, 20_000
    pop = make_pop([1, 2, 3, 4, 5])
    rng = RngStream(3)
    hits = sum(tournament_select(pop, P, rng) is pop[4] for _ in range(trials))
    p = 1 - (1 - 1 / P) ** P
    sd = np.sqrt(p * (1 - p) / trials)
    assert abs(hits / trials - p) < 4 * sd


def test_tournament_equal_fitness_uniform_chi_square():
    pop = make_pop([2.0] * 5)
    rng = RngStream(17)
    counts = np.zeros(5)
    for _ in range(10_000):
        counts[pop.members.index(tournament_select(pop, 3, rng))] += 1
    expected = 10_000 / 5
    chi2 = ((counts - expected) ** 2 / expected).sum()
    assert chi2 < 18.47  # df=4, p=0.001


def test_tournament_needs_fitness_and_valid_size():
    pop = Population([Individual(np.zeros(2, np.uint8)) for _ in range(3)])
    with pytest.raises(ValueError):
        tournament_select(pop, 2, RngStream(0))
    with pytest.raises(ValueError):
        tournament_select(make_pop([1, 2, 3]), 4, RngStream(0))


# -- crossover


def test_crossover_rate_zero_copies():
    a, b = np.array([0, 1, 0, 1], np.uint8), np.array([1, 1, 0, 0], np.uint8)
    c1, c2 = uniform_crossover(a, b, 0.0, RngStream(1))
    assert c1.tolist() == a.tolist() and c2.tolist() == b.tolist()


def test_crossover_identical_parents():
    a = np.array([1, 0, 1, 1, 0], np.uint8)
    rng = RngStream(2)
    for _ in range(20):
        c1, c2 = uniform_crossover(a, a, 1.0, rng)
        assert c1.tolist() == a.tolist() == c2.tolist()


def test_crossover_mask_statistics():
    a, b = np.zeros(4, np.uint8), np.ones(4, np.uint8)
    rng = RngStream(4)
    ones = []
    for _ in range(10_000):
        c1, c2 = uniform_crossover(a, b, 1.0, rng)
        assert np.all(c1 + c2 == 1)
        ones.append(c1.sum())
    assert 1.9 <= np.mean(ones) <= 2.1


def test_crossover_length_mismatch():
    with pytest.raises(ValueError):
        uniform_crossover(np.zeros(3, np.uint8), np.zeros(4, np.uint8), 1.0, RngStream(0))


# -- mutation


def test_mutation_extremes():
    x = np.array([1, 0, 0, 1, 1], np.uint8)
    assert bitflip_mutate(x, 0.0, RngStream(0)).tolist() == x.tolist()
    assert bitflip_mutate(x, 1.0, RngStream(0)).tolist() == (1 - x).tolist()


def test_mutation_rate_statistics():
    rng = RngStream(6)
    x = np.zeros(100, np.uint8)
    flips = [bitflip_mutate(x, 0.01, rng).sum() for _ in range(10_000)]
    assert 0.9 <= np.mean(flips) <= 1.1


def test_mutation_rejects_bad_rate():
    with pytest.raises(ValueError):
        bitflip_mutate(np.zeros(3, np.uint8), 1.5, RngStream(0))


# -- config


@pytest.mark.parametrize(
    "kw",
    [
        {"mutation_rate": -0.1},
        {"crossover_rate": 1.1},
        {"tournament_size": 1},
        {"tournament_size": 101},
        {"elite_count": 100},
        {"elite_count": -1},
        {"pop_size": 1, "tournament_size": 1},
        {"max_generations": 0},
    ],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        GaConfig(**kw).validate()


def test_genome_length_mismatch():
    with pytest.raises(ValueError):
        run_ga(checkerboard_1d(50), GaConfig())


# -- run_ga


def small_config(**kw):
    base = dict(pop_size=20, genome_length=20, max_generations=15, seed=3)
    base.update(kw)
    return GaConfig(**base)


def test_history_non_decreasing_with_elitism():
    for seed in range(3):
        r = run_ga(trap5(20), small_config(seed=seed))
        h = r.best_fitness_history
        assert len(h) == 15
        assert all(b >= a for a, b in zip(h, h[1:]))


def test_archive_size_with_elite_caching():
    r = run_ga(checkerboard_1d(20), small_config())
    assert len(r.archive) == 20 + 14 * 19
    X, y = r.archive.training_view(0, 0)
    assert X.shape == (20, 20)


def test_table1_archive_size():
    r = run_ga(checkerboard_1d(100), GaConfig(seed=0))
    assert len(r.archive) == 100 + 99 * 99 == 9901


def test_same_seed_same_result():
    a = run_ga(checkerboard_1d(20), small_config())
    b = run_ga(checkerboard_1d(20), small_config())
    assert a.best.genome.tolist() == b.best.genome.tolist()
    assert a.best_fitness_history == b.best_fitness_history
    assert all(np.array_equal(x, y) for x, y in zip(a.archive.genomes, b.archive.genomes))
    assert a.archive.fitness == b.archive.fitness


def test_different_seed_different_result():
    a = run_ga(checkerboard_1d(20), small_config(seed=1))
    b = run_ga(checkerboard_1d(20), small_config(seed=2))
    assert a.archive.fitness != b.archive.fitness


def test_best_is_best_archived_true_evaluation():
    r = run_ga(trap5(20), small_config())
    assert r.best.fitness == max(r.archive.fitness)
    assert r.best.fitness_source is FitnessSource.TRUE
    assert r.best.genome.tolist() == r.archive.best()[0].tolist()


def test_population_fixed_point_without_variation():
    genome = np.array([1, 0] * 5, np.uint8)
    pops = []
    run_ga(
        checkerboard_1d(10),
        small_config(genome_length=10, pop_size=8, mutation_rate=0.0, crossover_rate=0.0),
        initial_population=[genome] * 8,
        on_generation=pops.append,
    )
    for pop in pops:
        assert len(pop) == 8
        assert all(m.genome.tolist() == genome.tolist() for m in pop)


def test_elites_carried_unchanged():
    pops = []
    run_ga(trap5(20), small_config(elite_count=3), on_generation=pops.append)
    for prev, nxt in zip(pops, pops[1:]):
        f = prev.fitness_array()
        order = np.argsort(-f, kind="stable")[:3]
        for k, idx in enumerate(order):
            assert nxt[k].genome.tolist() == prev[int(idx)].genome.tolist()
            assert nxt[k].fitness == prev[int(idx)].fitness


def test_odd_offspring_count_keeps_population_size():
    pops = []
    r = run_ga(checkerboard_1d(12), small_config(genome_length=12, pop_size=10, elite_count=2), on_generation=pops.append)
    assert all(len(p) == 10 for p in pops)
    assert len(r.archive) == 10 + 14 * 8


def test_no_elitism_archives_whole_population():
    r = run_ga(checkerboard_1d(20), small_config(elite_count=0))
    assert len(r.archive) == 20 * 15


def test_initial_population_validation():
    with pytest.raises(ValueError):
        run_ga(checkerboard_1d(20), small_config(), initial_population=[np.zeros(20, np.uint8)] * 3)


def test_alternate_schedule():
    calls = []

    def trainer(X, y):
        calls.append(len(y))
        mean = float(y.mean())
        return lambda x: mean

    sched = EvalSchedule.alternate(3)
    r = run_ga(checkerboard_1d(20), small_config(eval_schedule=sched), surrogate_trainer=trainer)
    true_gens = [g for g in range(15) if g % 3 == 0]
    assert sorted(set(r.archive.generations)) == true_gens
    assert r.surrogate_generations == [g for g in range(15) if g % 3]
    # retrained after gen 0 and after every later true generation, on the full archive
    assert calls == [20 + 19 * k for k in range(len(true_gens))]
    assert r.best.fitness_source is FitnessSource.TRUE


def test_alternate_needs_trainer():
    with pytest.raises(ValueError):
        run_ga(checkerboard_1d(20), small_config(eval_schedule=EvalSchedule.alternate(2)))


def test_schedule_flags():
    assert EvalSchedule().uses_true_fitness(7)
    s = EvalSchedule(EvalMode.ALTERNATE, 4)
    assert [s.uses_true_fitness(g) for g in range(6)] == [True, False, False, False, True, False]
    with pytest.raises(ValueError):
        EvalSchedule(EvalMode.ALTERNATE, 0)


@pytest.mark.parametrize("seed", range(5))
def test_checkerboard_1d_table1_reaches_85(seed):
    r = run_ga(checkerboard_1d(100), GaConfig(seed=seed))
    assert r.best.fitness >= 85
