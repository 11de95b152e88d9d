"""Static privacy analysis: an upper bound on the epsilon a plan spends."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .core import NoisyValue, SafetyViolation
from .plan import Aggregation, Interpreter, Part, Plan, sorted_keys


@dataclass(frozen=True)
class BudgetReport:
    """Total epsilon plus one ``(path, epsilon)`` entry per sequential contribution.

    Aggregations contribute their own epsilon; a partition contributes the
    maximum over its branches.
    """

    total: float
    breakdown: tuple = ()

    def __float__(self):
        return self.total


class BudgetInterpreter(Interpreter):
    """Sums epsilons of sequential aggregations; partitions cost their costliest branch."""

    def __init__(self):
        super().__init__()
        self._spent: list = []

    def aggregate(self, plan: Aggregation):
        self._spent.append((self.where(), plan.eps))
        return NoisyValue.symbolic()

    def part(self, plan: Part):
        outer, path = self._spent, self.where()
        results, costs = {}, []
        for key in sorted_keys(plan.branches):
            self._spent = []
            results[key] = self.run_branch(plan, key, None)
            costs.append(math.fsum(eps for _, eps in self._spent))
        self._spent = outer
        self._spent.append((path, max(costs, default=0.0)))
        return results

    def report(self) -> BudgetReport:
        return BudgetReport(math.fsum(eps for _, eps in self._spent), tuple(self._spent))


def budget(plan: Plan) -> BudgetReport:
    """Upper bound on the epsilon spent by ``plan``; never reads rows or samples noise.

    Raises :class:`SafetyViolation` if a partition branch reaches outside its
    partition.
    """
    interp = BudgetInterpreter()
    interp.run(plan)
    return interp.report()


def check_partition_safety(plan: Plan) -> Optional[SafetyViolation]:
    """Return the first partition-safety violation in ``plan``, or ``None``."""
    try:
        budget(plan)
    except SafetyViolation as violation:
        return violation
    return None

