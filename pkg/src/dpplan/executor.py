"""Concrete execution of plans on materialised rows with Laplace noise."""
from __future__ import annotations

import math
from typing import Callable, Iterator, Optional, Union

import numpy as np

from .core import ROOT, BudgetExceeded, ConstantICdf, LaplaceICdf, NoisyValue
from .plan import Aggregation, Avg, Count, Dataset, Interpreter, NoisyMax, Part, Plan, Sum
from .privacy import budget

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def sample_laplace(b: float, rng: np.random.Generator) -> float:
    """One draw from Laplace(0, b) by inverting the CDF."""
    if not b > 0:
        raise ValueError(f"Laplace scale must be positive, got {b!r}")
    while True:
        u = rng.random() - 0.5
        t = 1.0 - 2.0 * abs(u)
        if t > 0.0:  # u = -0.5 would give log(0)
            return -b * math.copysign(1.0, u) * math.log(t)


def clamp(x: float) -> float:
    return min(1.0, max(-1.0, float(x)))


def as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(0, 2**63)))
    return np.random.SeedSequence(seed)


class ExecInterpreter(Interpreter):
    """Runs a plan on real rows.

    Every aggregation draws from its own substream spawned from the current
    seed sequence; partition branches get child sequences spawned in key
    order, so a fixed seed gives identical output.
    """

    materialize = True

    def __init__(self, seed: SeedLike = None):
        super().__init__()
        self._seq = as_seed_sequence(seed)
        self._labels = 0
        self.aggregations_run = 0

    def _fresh_label(self) -> int:
        mask = 1 << self._labels
        self._labels += 1
        return mask

    def _stream(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self._seq.spawn(1)[0]))

    def aggregate(self, plan: Aggregation):
        rows = self._rows(plan.data)
        rng = self._stream()
        self.aggregations_run += 1
        if isinstance(plan, NoisyMax):
            if not rows:
                raise ValueError("noisy max over an empty dataset")
            noisy = [float(plan.score(r)) + sample_laplace(plan.scale, rng) for r in rows]
            index = max(range(len(noisy)), key=noisy.__getitem__)
            return NoisyValue(ConstantICdf(math.inf), None, self._fresh_label(), None, index)
        exact = exact_statistic(plan, rows)
        scale = plan.scale
        noisy = exact + sample_laplace(scale, rng)
        return NoisyValue(LaplaceICdf(scale), scale, self._fresh_label(), None, noisy)

    def run_branch(self, plan: Part, key, rows):
        saved = self._seq
        self._seq = saved.spawn(1)[0]
        try:
            return super().run_branch(plan, key, rows)
        finally:
            self._seq = saved


def exact_statistic(plan: Aggregation, rows) -> float:
    """The noiseless answer of a count, sum or average."""
    if isinstance(plan, Count):
        return float(len(rows))
    if isinstance(plan, Sum):
        return math.fsum(clamp(plan.clip(r)) for r in rows)
    if isinstance(plan, Avg):
        if not rows:
            return 0.0
        return math.fsum(clamp(plan.clip(r)) for r in rows) / len(rows)
    raise TypeError(f"no exact statistic for {type(plan).__name__}")


def unwrap(result):
    """Replace noisy values by their numbers inside lists, tuples and dicts."""
    if isinstance(result, NoisyValue):
        return result._value
    if isinstance(result, dict):
        return {k: unwrap(v) for k, v in result.items()}
    if isinstance(result, (list, tuple)):
        return type(result)(unwrap(v) for v in result)
    return result


def execute(plan: Plan, seed: SeedLike = None, cap: Optional[float] = None):
    """Run ``plan`` on the rows of its datasets; results keep their noisy-value wrappers.

    With ``cap`` set, the plan is first budgeted and refused with
    :class:`BudgetExceeded` before any noise is drawn if it needs more.
    """
    if cap is not None:
        required = budget(plan).total
        if required > cap:
            raise BudgetExceeded(required, cap)
    return ExecInterpreter(seed).run(plan)


def evaluate(query: Callable[[Dataset], Plan], rows, cap: float, seed: SeedLike = None):
    """Apply ``query`` to a fresh stability-1 dataset over ``rows`` and return plain numbers.

    Refuses (``BudgetExceeded``) when the query's budget exceeds ``cap`` and
    raises ``SafetyViolation`` for unsafe partitions, in both cases without
    sampling.
    """
    plan = query(Dataset(1, ROOT, rows))
    return unwrap(execute(plan, seed, cap))


def execute_trials(plan: Plan, trials: int, seed: SeedLike = 0) -> Iterator:
    """Independent executions of ``plan``, each on its own spawned seed."""
    for child in as_seed_sequence(seed).spawn(trials):
        yield ExecInterpreter(child).run(plan)


def _as_vector(x):
    if isinstance(x, NoisyValue):
        x = x._value
    if isinstance(x, dict):
        x = [x[k] for k in sorted(x)]
    if isinstance(x, (list, tuple, np.ndarray)):
        return [float(unwrap(e)) for e in x]
    return None


def observed_error(result, truth, norm: Optional[str] = None) -> float:
    """Distance between an executed result and the exact answer.

    The norm defaults to the one the result was built with (``inf``, ``1``,
    ``2`` or ``rmsd``); scalars use the absolute difference.
    """
    if norm is None and isinstance(result, NoisyValue):
        norm = result.norm
    got, want = _as_vector(result), _as_vector(truth)
    if got is None:
        return abs(float(unwrap(result)) - float(truth))
    if want is None or len(got) != len(want):
        raise ValueError("result and truth have different shapes")
    diffs = [abs(a - b) for a, b in zip(got, want)]
    if norm in (None, "inf"):
        return max(diffs, default=0.0)
    if norm == "1":
        return math.fsum(diffs)
    if norm == "2":
        return math.sqrt(math.fsum(d * d for d in diffs))
    if norm == "rmsd":
        return math.sqrt(math.fsum(d * d for d in diffs) / len(diffs))
    raise ValueError(f"unknown norm {norm!r}")
