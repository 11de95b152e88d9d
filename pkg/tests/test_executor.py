import math
from collections import Counter

import numpy as np
import pytest

import dpplan.executor as executor_module
from dpplan.core import BudgetExceeded, SafetyViolation
from dpplan.executor import evaluate, execute, observed_error, sample_laplace, unwrap
from dpplan.plan import Dataset, bind, dp_avg, dp_count, dp_group_by, dp_max, dp_sum, pure, sequence
from dpplan.workloads import cdf_parallel, cdf_sequential, color_histogram, color_histogram_leaky, default_bins


@pytest.fixture(scope="module")
def draws():
    rng = np.random.default_rng(2024)
    return np.array([sample_laplace(1.0, rng) for _ in range(100_000)])


def test_sampler_moments(draws):
    assert abs(draws.mean()) <= 0.05
    assert 1.8 <= draws.var() <= 2.2


def test_sampler_tail_matches_bound(draws):
    assert np.mean(np.abs(draws) > math.log(20)) == pytest.approx(0.05, abs=0.01)


def test_sampler_is_seeded():
    a = sample_laplace(2.0, np.random.default_rng(9))
    assert a == sample_laplace(2.0, np.random.default_rng(9))


def test_sampler_scale_must_be_positive():
    with pytest.raises(ValueError):
        sample_laplace(0, np.random.default_rng(0))


def test_count_with_vanishing_noise():
    assert evaluate(lambda d: dp_count(1e9, d), list(range(100)), cap=1e9, seed=0) == pytest.approx(100, abs=1e-3)


def test_sum_and_avg_clip_to_unit_interval():
    rows = [5, -3, 0.5]
    assert evaluate(lambda d: dp_sum(1e9, float, d), rows, cap=1e9, seed=0) == pytest.approx(0.5, abs=1e-6)
    assert evaluate(lambda d: dp_avg(1e9, float, d), rows, cap=1e9, seed=0) == pytest.approx(0.5 / 3, abs=1e-6)


def test_group_by_then_count_counts_groups():
    q = lambda d: bind(dp_group_by(lambda r: r % 3, d), lambda g: dp_count(1e9, g))  # noqa: E731
    assert evaluate(q, list(range(10)), cap=1e9, seed=0) == pytest.approx(3, abs=1e-3)


def test_over_budget_is_refused_before_sampling(monkeypatch, packets):
    calls = []
    monkeypatch.setattr(executor_module, "sample_laplace", lambda *a: calls.append(a) or 0.0)
    with pytest.raises(BudgetExceeded) as info:
        evaluate(lambda d: cdf_sequential(default_bins(10), 1, d, naive=True), packets, cap=1, seed=0)
    assert info.value.required == 10 and info.value.cap == 1
    assert calls == []


def test_leaky_partition_is_refused_before_sampling(monkeypatch, colors):
    calls = []
    monkeypatch.setattr(executor_module, "sample_laplace", lambda *a: calls.append(a) or 0.0)
    with pytest.raises(SafetyViolation):
        evaluate(lambda d: color_histogram_leaky(1, d), colors, cap=100, seed=0)
    assert calls == []


def test_budget_at_cap_runs(packets):
    out = evaluate(lambda d: cdf_sequential(default_bins(10), 1, d), packets, cap=1, seed=0)
    assert len(out) == 10


def test_fixed_seed_is_deterministic(packets):
    q = lambda d: cdf_parallel(default_bins(10), 1, d)  # noqa: E731
    assert evaluate(q, packets, 1, seed=11) == evaluate(q, packets, 1, seed=11)
    assert evaluate(q, packets, 1, seed=11) != evaluate(q, packets, 1, seed=12)


def test_distinct_aggregations_draw_distinct_noise():
    d = Dataset(1, rows=[])
    a, b = unwrap(execute(sequence([dp_count(1, d), dp_count(1, d)]), seed=3))
    assert a != b


def test_noisy_max_single_row():
    for seed in range(5):
        assert evaluate(lambda d: dp_max(1, float, d), [42.0], cap=1, seed=seed) == 0


def test_noisy_max_picks_clear_winner():
    picks = Counter(evaluate(lambda d: dp_max(100, float, d), [10.0, 0.0, 0.0], cap=100, seed=s) for s in range(1000))
    assert picks[0] >= 990


def test_noisy_max_on_empty_data():
    with pytest.raises(ValueError):
        evaluate(lambda d: dp_max(1, float, d), [], cap=1, seed=0)


def test_execution_needs_rows():
    with pytest.raises(ValueError):
        execute(dp_count(1, Dataset.symbolic()))


def test_histogram_noiseless(colors):
    got = evaluate(lambda d: color_histogram(1e6, d), colors, cap=1e6, seed=0)
    want = Counter(r.color for r in colors)
    for c, v in got.items():
        assert v == pytest.approx(want[c], abs=1e-2)


def test_observed_error_norms():
    assert observed_error(3.0, 1.0) == 2
    assert observed_error([1, 5], [0, 1]) == 4
    assert observed_error([1, 5], [0, 1], norm="1") == 5
    assert observed_error([3, 4], [0, 0], norm="2") == 5
    assert observed_error([3, 4], [0, 0], norm="rmsd") == pytest.approx(math.sqrt(12.5))
    with pytest.raises(ValueError):
        observed_error([1, 2], [1])


def test_executed_values_carry_bounds():
    v = execute(bind(dp_count(2, Dataset(1, rows=[1, 2])), pure), seed=0)
    assert v.scale == 0.5 and v.icdf(0.05) == pytest.approx(0.5 * math.log(20))
