import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaxplain.core import RngStream
from gaxplain.explain import (
    ImportanceVector,
    ProbeError,
    ProbeReport,
    block_sign_agreement,
    mean_importance,
    probe_solution,
    rank_variables,
    sign_alternation_rate,
)
from gaxplain.problems import (
    eval_checkerboard_1d,
    eval_checkerboard_2d,
    eval_maxsat,
    eval_trap_k,
    generate_random_3sat,
)


class Recorder:
    def __init__(self, fn):
        self.fn = fn
        self.calls = []

    def __call__(self, x):
        self.calls.append(np.array(x))
        return self.fn(x)


def test_constant_predictor():
    v = probe_solution([1, 0, 1, 1], lambda x: 3.0)
    assert v.values.tolist() == [0, 0, 0, 0]
    assert v.baseline == 3.0


def test_sum_predictor_signs():
    v = probe_solution([1, 0, 1, 0], lambda x: float(np.sum(x)))
    assert v.values.tolist() == [-1, 1, -1, 1]
    assert v.flipped.tolist() == [1, 3, 1, 3]


def test_checkerboard_alternating_seed():
    seed = np.array([i % 2 for i in range(10)], np.uint8)
    v = probe_solution(seed, eval_checkerboard_1d)
    mags = np.abs(v.values)
    assert mags[0] == 1 and mags[9] == 1
    assert np.all(mags[1:9] == 2)
    assert np.all((v.values < 0) == (seed == 1))


def test_exactly_n_plus_one_calls_in_order():
    seed = np.array([0, 1, 1, 0, 1], np.uint8)
    rec = Recorder(lambda x: float(x @ np.arange(5)))
    probe_solution(seed, rec)
    assert len(rec.calls) == 6
    assert rec.calls[0].tolist() == seed.tolist()
    for i, call in enumerate(rec.calls[1:]):
        expected = seed.copy()
        expected[i] ^= 1
        assert call.tolist() == expected.tolist()


def test_probe_is_local():
    # c_i must depend only on predictor values at the seed and its i-th flip
    seed = np.array([1, 0, 0, 1, 1, 0], np.uint8)
    rng = np.random.default_rng(0)
    table = {}

    def lookup(x):
        k = tuple(int(b) for b in x)
        if k not in table:
            table[k] = float(rng.normal())
        return table[k]

    v = probe_solution(seed, lookup)
    base = table[tuple(seed)]
    for i in range(6):
        f = seed.copy()
        f[i] ^= 1
        assert abs(v.values[i]) == abs(base - table[tuple(f)])


def test_probe_does_not_mutate_seed():
    seed = np.array([1, 0, 1], np.uint8)
    probe_solution(seed, lambda x: float(x.sum()))
    assert seed.tolist() == [1, 0, 1]


def test_predictor_failure_reports_index():
    def bad(x):
        if x[2] == 0:
            raise RuntimeError("boom")
        return 0.0

    with pytest.raises(ProbeError) as ei:
        probe_solution([1, 1, 1, 1], bad)
    assert ei.value.index == 2


def test_seed_failure_reports_no_index():
    with pytest.raises(ProbeError) as ei:
        probe_solution([1, 0], lambda x: 1 / 0)
    assert ei.value.index is None


def _problems(n, rng):
    s = int(np.sqrt(n))
    yield "cb1d", eval_checkerboard_1d
    if s * s == n and s >= 3:
        yield "cb2d", lambda x: eval_checkerboard_2d(x, s)
    if n % 5 == 0:
        yield "trap5", eval_trap_k
    f = generate_random_3sat(RngStream(int(rng.integers(1 << 30))), n, 4 * n)
    yield "maxsat", lambda x: eval_maxsat(x, f)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([9, 10, 16, 20]), st.integers(0, 2**32 - 1))
def test_true_fitness_probe_matches_recomputation(n, s):
    rng = np.random.default_rng(s)
    seed = rng.integers(0, 2, n).astype(np.uint8)
    for _, f in _problems(n, rng):
        v = probe_solution(seed, f)
        for i in range(n):
            flip = seed.copy()
            flip[i] ^= 1
            assert abs(v.values[i]) == abs(f(seed) - f(flip))
            if v.values[i] != 0:
                assert (v.values[i] > 0) == (seed[i] == 0)


def test_importance_vector_invariants():
    with pytest.raises(ValueError):
        ImportanceVector(np.zeros(3), np.zeros(4, np.uint8), 0.0)


def test_mean_importance():
    a = ImportanceVector(np.array([1.0, -2.0]), np.array([0, 1], np.uint8), 0.0)
    assert mean_importance([a]).tolist() == [1.0, -2.0]
    neg = ImportanceVector(-a.values, a.seed, 0.0)
    assert mean_importance([a, neg]).tolist() == [0.0, 0.0]
    vs = [ImportanceVector(np.array([float(k), 0.0]), a.seed, 0.0) for k in (1, 2, 3)]
    assert mean_importance(vs)[0] == 2.0


def test_mean_importance_errors():
    a = ImportanceVector(np.zeros(2), np.zeros(2, np.uint8), 0.0)
    b = ImportanceVector(np.zeros(3), np.zeros(3, np.uint8), 0.0)
    with pytest.raises(ValueError):
        mean_importance([])
    with pytest.raises(ValueError):
        mean_importance([a, b])


def test_rank_variables():
    assert rank_variables([0.5, -2.0, 0.5]) == [(1, 2.0), (0, 0.5), (2, 0.5)]
    assert [i for i, _ in rank_variables([0.0] * 4)] == [0, 1, 2, 3]


def test_rank_after_probe_weighted_predictor():
    v = probe_solution([1, 0], lambda x: 3.0 * x[0] + x[1])
    assert rank_variables(v.values)[0] == (0, 3.0)


def test_alternation_and_block_metrics():
    assert sign_alternation_rate([1, -1, 1, -1]) == 1.0
    assert sign_alternation_rate([1, 1, -1, 0]) == pytest.approx(1 / 3)
    assert block_sign_agreement([1, 1, -1, -1, 2, 0], 2) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        block_sign_agreement([1, 1, 1], 2)


def test_probe_report_rows():
    v = probe_solution([1, 0, 1], lambda x: float(x.sum()))
    rep = ProbeReport.from_importance(v, problem="x")
    assert len(rep) == 3
    assert [r.variable_index for r in rep.rows] == [0, 1, 2]
    assert rep.rows[1].seed_bit == 0 and rep.rows[1].flipped_prediction == 3.0
    assert rep.importance.tolist() == v.values.tolist()
    assert rep.seed.tolist() == [1, 0, 1]
    assert rep.metadata == {"problem": "x"}
