import math

import pytest
from hypothesis import given, strategies as st

from dpplan.core import SafetyViolation
from dpplan.plan import Dataset, bind, dp_count, dp_part, dp_sum, pure, sequence
from dpplan.privacy import budget, check_partition_safety
from dpplan.workloads import cdf_parallel, cdf_sequential, color_histogram, color_histogram_leaky, default_bins

BINS10 = default_bins(10)


def test_sequential_cdf_spends_total_epsilon():
    assert budget(cdf_sequential(BINS10, 1, Dataset.symbolic())).total == 1


def test_naive_sequential_cdf_spends_per_bin():
    assert budget(cdf_sequential(BINS10, 1, Dataset.symbolic(), naive=True)).total == 10


def test_parallel_cdf_spends_epsilon_once():
    assert budget(cdf_parallel(BINS10, 1, Dataset.symbolic())).total == 1


def test_two_sequenced_counts_add_up():
    d = Dataset.symbolic()
    plan = bind(dp_count(0.3, d), lambda _: dp_count(0.25, d))
    assert budget(plan).total == pytest.approx(0.55)


def test_breakdown_names_each_contribution():
    d = Dataset.symbolic()
    report = budget(sequence([dp_count(0.5, d), color_histogram(0.2, d)]))
    assert [eps for _, eps in report.breakdown] == [0.5, 0.2]
    assert report.breakdown[1][0].startswith("/sequence#0/part")
    assert float(report) == pytest.approx(0.7)


eps_st = st.floats(0.001, 5)


@given(st.lists(eps_st, max_size=6), st.lists(eps_st, max_size=6))
def test_sequential_composition(first, second):
    d = Dataset.symbolic()
    p = sequence([dp_count(e, d) for e in first])
    q = sequence([dp_count(e, d) for e in second])
    total = budget(bind(p, lambda _: q)).total
    assert total == pytest.approx(math.fsum(first) + math.fsum(second))
    assert total == pytest.approx(budget(p).total + budget(q).total)


@given(st.lists(st.lists(eps_st, max_size=4), min_size=1, max_size=6))
def test_parallel_composition_takes_the_costliest_branch(branch_eps):
    branches = {
        k: (lambda es: lambda ds: sequence([dp_count(e, ds) for e in es]))(es)
        for k, es in enumerate(branch_eps)
    }
    plan = dp_part(lambda r: r, Dataset.symbolic(), branches)
    assert budget(plan).total == pytest.approx(max(math.fsum(es) for es in branch_eps))


def test_nested_partitions():
    d = Dataset.symbolic()
    inner = lambda ds: dp_part(lambda r: r, ds, {0: lambda x: dp_count(0.5, x), 1: lambda x: dp_sum(0.7, abs, x)})  # noqa: E731
    plan = bind(dp_part(lambda r: r, d, {"a": inner, "b": lambda ds: dp_count(0.1, ds)}),
                lambda _: dp_count(0.2, d))
    assert budget(plan).total == pytest.approx(0.9)


def test_budget_never_reads_rows():
    d = Dataset.symbolic()
    plan = bind(cdf_parallel(BINS10, 1, d), lambda v: pure(v))
    assert d._rows is None
    assert budget(plan).total == 1


def test_leaky_histogram_is_a_safety_violation():
    violation = check_partition_safety(color_histogram_leaky(1, Dataset.symbolic()))
    assert isinstance(violation, SafetyViolation)
    assert "count" in violation.path
    assert violation.expected is not violation.region
    with pytest.raises(SafetyViolation):
        budget(color_histogram_leaky(1, Dataset.symbolic()))


def test_correct_histogram_is_safe_and_costs_epsilon():
    plan = color_histogram(0.7, Dataset.symbolic())
    assert check_partition_safety(plan) is None
    assert budget(plan).total == 0.7


def test_plan_without_partitions_is_safe():
    assert check_partition_safety(dp_count(1, Dataset.symbolic())) is None


def test_branch_handle_cannot_leak_into_sibling():
    stash = {}

    def first(ds):
        stash["ds"] = ds
        return dp_count(1, ds)

    def second(ds):
        return dp_count(1, stash["ds"])

    with pytest.raises(SafetyViolation):
        budget(dp_part(lambda r: r, Dataset.symbolic(), {0: first, 1: second}))
