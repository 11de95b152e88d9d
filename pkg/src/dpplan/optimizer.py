"""Brute-force search for the smallest epsilon that meets an error tolerance."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, List, Sequence

from .accuracy import accuracy
from .plan import Plan

EpsProgram = Callable[[float], Plan]


@dataclass(frozen=True)
class OptimizerInput:
    """Search grid ``min_eps, min_eps + delta, ...`` capped at ``bud_total``."""

    bud_total: float
    beta: float
    error_tol: float = float("inf")
    min_eps: float = 0.01
    delta: float = 0.05
    iterations: int = 1000

    def __post_init__(self):
        if not self.min_eps > 0:
            raise ValueError("min_eps must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.bud_total < self.min_eps:
            raise ValueError("bud_total must be at least min_eps")


class Status(enum.Enum):
    SUCCESS = "Success"
    MAX_ITERATION = "MaxIteration"
    MAX_BUDGET = "MaxBudget"


@dataclass(frozen=True)
class OptimizerOutcome:
    status: Status
    epsilon: float
    alpha: float

    @property
    def ok(self) -> bool:
        return self.status is Status.SUCCESS


def _exact(x: float) -> Fraction:
    # Work on the decimal the caller wrote so that 0.01 + 0.05 lands on 0.06.
    return Fraction(repr(float(x)))


def iterate_error(prog: EpsProgram, inp: OptimizerInput) -> OptimizerOutcome:
    """Probe epsilons on the grid until the error tolerance holds.

    The last probe is exactly ``bud_total`` when the grid would overshoot it.
    """
    eps, step, cap = _exact(inp.min_eps), _exact(inp.delta), _exact(inp.bud_total)
    remaining = inp.iterations
    while True:
        alpha = accuracy(prog(float(eps)), inp.beta).alpha
        if alpha <= inp.error_tol:
            return OptimizerOutcome(Status.SUCCESS, float(eps), alpha)
        if remaining <= 0:
            return OptimizerOutcome(Status.MAX_ITERATION, float(eps), alpha)
        if eps + step <= cap:
            eps += step
        elif eps < cap:
            eps = cap
        else:
            return OptimizerOutcome(Status.MAX_BUDGET, float(eps), alpha)
        remaining -= 1


def choose_eps(analyses: Sequence[EpsProgram], inp: OptimizerInput,
               tolerances: Sequence[float]) -> List[OptimizerOutcome]:
    """Split ``bud_total`` evenly across the analyses and optimise each against its tolerance."""
    if len(analyses) != len(tolerances):
        raise ValueError(f"{len(analyses)} analyses but {len(tolerances)} tolerances")
    if not analyses:
        return []
    local = replace(inp, bud_total=inp.bud_total / len(analyses))
    return [iterate_error(prog, replace(local, error_tol=tol)) for prog, tol in zip(analyses, tolerances)]
