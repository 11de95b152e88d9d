"""Query plans: dataset handles, plan nodes, builder functions and the plan walker.

Plans are immutable descriptions. Transformations and aggregations never run
when they are built; one of the interpreters (budget, accuracy, executor)
walks the tree and feeds dataset handles and noisy values into the
continuations supplied to :func:`bind`.
"""
from __future__ import annotations

import functools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Iterable, Mapping

from .core import (
    AVG_SENSITIVITY,
    COUNT_SENSITIVITY,
    MAX_SENSITIVITY,
    ROOT,
    SUM_SENSITIVITY,
    Region,
    SafetyViolation,
    StabilityError,
)


class Dataset:
    """Handle on a sensitive table.

    Only metadata is public: the accumulated ``stability`` and the provenance
    ``region``. Rows are held privately and only interpreters that execute
    plans look at them.
    """

    __slots__ = ("stability", "region", "name", "_rows")

    def __init__(self, stability: int = 1, region: Region = ROOT, rows=None, name: str = "data"):
        if int(stability) != stability or stability < 1:
            raise StabilityError(f"stability must be a positive integer, got {stability!r}")
        self.stability = int(stability)
        self.region = region
        self.name = name
        self._rows = None if rows is None else list(rows)

    @classmethod
    def symbolic(cls, stability: int = 1, name: str = "data") -> "Dataset":
        return cls(stability, ROOT, None, name)

    @property
    def materialized(self) -> bool:
        return self._rows is not None

    def __repr__(self):
        return f"Dataset(name={self.name!r}, stability={self.stability}, region={self.region.name!r})"


class Plan:
    """Base class of plan nodes."""

    __slots__ = ()

    def bind(self, cont: Callable[[Any], "Plan"]) -> "Plan":
        return Bind(self, cont)


@dataclass(frozen=True, eq=False)
class Pure(Plan):
    value: Any


@dataclass(frozen=True, eq=False)
class Bind(Plan):
    plan: Plan
    cont: Callable[[Any], Plan]


@dataclass(frozen=True, eq=False)
class Sequence_(Plan):
    plans: tuple


@dataclass(frozen=True, eq=False)
class Where(Plan):
    pred: Callable[[Any], bool]
    data: Dataset


@dataclass(frozen=True, eq=False)
class Select(Plan):
    fn: Callable[[Any], Any]
    data: Dataset


@dataclass(frozen=True, eq=False)
class GroupBy(Plan):
    key: Callable[[Any], Hashable]
    data: Dataset


@dataclass(frozen=True, eq=False)
class Intersect(Plan):
    left: Dataset
    right: Dataset


@dataclass(frozen=True, eq=False)
class UnionData(Plan):
    left: Dataset
    right: Dataset


@dataclass(frozen=True, eq=False)
class Part(Plan):
    key: Callable[[Any], Hashable]
    data: Dataset
    branches: Mapping[Hashable, Callable[[Dataset], Plan]]


@dataclass(frozen=True, eq=False)
class Aggregation(Plan):
    eps: float
    data: Dataset

    sensitivity = 1.0

    @property
    def scale(self) -> float:
        return self.data.stability * self.sensitivity / self.eps


@dataclass(frozen=True, eq=False)
class Count(Aggregation):
    sensitivity = COUNT_SENSITIVITY


@dataclass(frozen=True, eq=False)
class Sum(Aggregation):
    clip: Callable[[Any], float] = None
    sensitivity = SUM_SENSITIVITY


@dataclass(frozen=True, eq=False)
class Avg(Aggregation):
    clip: Callable[[Any], float] = None
    sensitivity = AVG_SENSITIVITY


@dataclass(frozen=True, eq=False)
class NoisyMax(Aggregation):
    score: Callable[[Any], float] = None
    sensitivity = MAX_SENSITIVITY


# -- builders ---------------------------------------------------------------

def _check_eps(eps) -> float:
    eps = float(eps)
    if not eps > 0 or math.isnan(eps):
        raise ValueError(f"epsilon must be positive, got {eps!r}")
    return eps


def pure(value) -> Plan:
    return Pure(value)


def bind(plan: Plan, cont: Callable[[Any], Plan]) -> Plan:
    return Bind(plan, cont)


def sequence(plans: Iterable[Plan]) -> Plan:
    """Run plans left to right and collect their results in a list."""
    return Sequence_(tuple(plans))


def dp_where(pred, data: Dataset) -> Plan:
    return Where(pred, data)


def dp_select(fn, data: Dataset) -> Plan:
    return Select(fn, data)


def dp_group_by(key, data: Dataset) -> Plan:
    return GroupBy(key, data)


def dp_intersect(left: Dataset, right: Dataset) -> Plan:
    return Intersect(left, right)


def dp_union(left: Dataset, right: Dataset) -> Plan:
    return UnionData(left, right)


def dp_part(key, data: Dataset, branches: Mapping[Hashable, Callable[[Dataset], Plan]]) -> Plan:
    return Part(key, data, dict(branches))


def dp_part_repeat(query: Callable[[Dataset], Plan], keys: Iterable[Hashable], key, data: Dataset) -> Plan:
    return Part(key, data, {k: query for k in keys})


def dp_count(eps, data: Dataset) -> Plan:
    return Count(_check_eps(eps), data)


def dp_sum(eps, clip, data: Dataset) -> Plan:
    return Sum(_check_eps(eps), data, clip)


def dp_avg(eps, clip, data: Dataset) -> Plan:
    return Avg(_check_eps(eps), data, clip)


def dp_max(eps, score, data: Dataset) -> Plan:
    """Report-noisy-max: the index of the row with the highest noisy score."""
    if data.stability != 1:
        raise StabilityError(f"noisy max requires stability 1, got {data.stability}")
    return NoisyMax(_check_eps(eps), data, score)


def query(genfunc):
    """Build plans from generator functions, yielding a plan per step.

    ::

        @query
        def two_counts(data):
            a = yield dp_count(0.3, data)
            b = yield dp_count(0.25, data)
            return add([a, b])

    Each yielded plan is bound to the rest of the generator; the return value
    becomes the result of the whole plan. The generator is replayed for every
    step, so it must be deterministic and free of side effects.
    """

    @functools.wraps(genfunc)
    def build(*args, **kwargs):
        return _resume(genfunc, args, kwargs, ())

    return build


def _resume(genfunc, args, kwargs, history):
    gen = genfunc(*args, **kwargs)
    try:
        step = next(gen)
        for sent in history:
            step = gen.send(sent)
    except StopIteration as stop:
        return Pure(stop.value)
    if not isinstance(step, Plan):
        raise TypeError(f"query generators must yield plans, got {type(step).__name__}")
    return Bind(step, lambda v: _resume(genfunc, args, kwargs, history + (v,)))


# -- the walker shared by all interpreters -----------------------------------

def sorted_keys(keys):
    try:
        return sorted(keys)
    except TypeError:
        return sorted(keys, key=repr)


class Interpreter:
    """Walks a plan, threading dataset handles and values into continuations.

    Subclasses decide what aggregations produce (``aggregate``) and whether
    dataset rows are materialised (``materialize``). Every access to a dataset
    is checked against the region of the partition branch being walked.
    """

    materialize = False

    def __init__(self):
        self._region = ROOT
        self._path: list = []
        self._step = 0

    def run(self, plan: Plan):
        while True:
            if isinstance(plan, Bind):
                result = self.run(plan.plan)
                plan = plan.cont(result)
                if not isinstance(plan, Plan):
                    raise TypeError(
                        f"continuations must return plans, got {type(plan).__name__}; wrap values in pure()"
                    )
                continue
            return self._visit(plan)

    def where(self) -> str:
        return "/" + "/".join(self._path)

    def _visit(self, plan: Plan):
        name = type(plan).__name__.rstrip("_").lower()
        self._path.append(f"{name}#{self._step}")
        self._step += 1
        try:
            return self._dispatch(plan)
        finally:
            self._path.pop()

    def _dispatch(self, plan: Plan):
        if isinstance(plan, Pure):
            return plan.value
        if isinstance(plan, Sequence_):
            return [self.run(p) for p in plan.plans]
        if isinstance(plan, Aggregation):
            self.check(plan.data)
            return self.aggregate(plan)
        if isinstance(plan, Part):
            self.check(plan.data)
            return self.part(plan)
        if isinstance(plan, (Where, Select, GroupBy)):
            self.check(plan.data)
            return self.transform(plan)
        if isinstance(plan, (Intersect, UnionData)):
            self.check(plan.left)
            self.check(plan.right)
            if plan.left.region is not plan.right.region:
                raise SafetyViolation(self.where(), plan.right.region, plan.left.region)
            return self.combine(plan)
        raise TypeError(f"not a plan node: {plan!r}")

    def check(self, data: Dataset):
        if not isinstance(data, Dataset):
            raise TypeError(f"expected a Dataset handle, got {type(data).__name__}")
        if not data.region.within(self._region):
            raise SafetyViolation(self.where(), data.region, self._region)

    # transformations -------------------------------------------------------

    def _rows(self, data: Dataset):
        if not self.materialize:
            return None
        if data._rows is None:
            raise ValueError(f"dataset {data.name!r} has no rows to execute on")
        return data._rows

    def transform(self, plan):
        data = plan.data
        rows = self._rows(data)
        if isinstance(plan, Where):
            out = None if rows is None else [r for r in rows if plan.pred(r)]
            return Dataset(data.stability, data.region, out, data.name)
        if isinstance(plan, Select):
            out = None if rows is None else [plan.fn(r) for r in rows]
            return Dataset(data.stability, data.region, out, data.name)
        out = None
        if rows is not None:
            groups: dict = {}
            for r in rows:
                groups.setdefault(plan.key(r), []).append(r)
            out = list(groups.items())
        return Dataset(2 * data.stability, data.region, out, data.name)

    def combine(self, plan):
        left, right = plan.left, plan.right
        stability = left.stability + right.stability
        lrows, rrows = self._rows(left), self._rows(right)
        out = None
        if lrows is not None:
            if isinstance(plan, UnionData):
                out = lrows + rrows
            else:
                remaining = Counter(rrows)
                out = []
                for r in lrows:
                    if remaining[r] > 0:
                        remaining[r] -= 1
                        out.append(r)
        return Dataset(stability, left.region, out, left.name)

    # partitions ------------------------------------------------------------

    def part(self, plan: Part):
        keys = sorted_keys(plan.branches)
        routed = self._route(plan, keys)
        results = {}
        for key in keys:
            results[key] = self.run_branch(plan, key, routed.get(key))
        return results

    def _route(self, plan: Part, keys):
        rows = self._rows(plan.data)
        if rows is None:
            return {}
        routed = {k: [] for k in keys}
        for r in rows:
            bucket = routed.get(plan.key(r))
            if bucket is not None:
                bucket.append(r)
        return routed

    def run_branch(self, plan: Part, key, rows):
        region = plan.data.region.child(f"{plan.data.region.name}[{key!r}]")
        handle = Dataset(plan.data.stability, region, rows, plan.data.name)
        saved_region, saved_step = self._region, self._step
        self._region, self._step = region, 0
        self._path.append(f"[{key!r}]")
        try:
            branch = plan.branches[key](handle)
            if not isinstance(branch, Plan):
                raise TypeError(f"partition branch for key {key!r} did not return a plan")
            return self.run(branch)
        finally:
            self._path.pop()
            self._region, self._step = saved_region, saved_step

    def aggregate(self, plan: Aggregation):
        raise NotImplementedError

