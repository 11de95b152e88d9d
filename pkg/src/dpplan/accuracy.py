"""Static accuracy analysis: the iCDF algebra, value combinators and the accuracy interpreter.

Every aggregation yields an *untainted* value: it carries its Laplace scale and a
single fresh label. Combining values (``add``, norms) taints the result; only
untainted operands with pairwise disjoint labels are statistically independent
and therefore eligible for the Chernoff bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .core import (
    BoundChoice,
    BoundKind,
    ConstantICdf,
    ICdf,
    LaplaceICdf,
    NoisyValue,
    check_beta,
)
from .executor import execute_trials, observed_error
from .plan import Aggregation, Interpreter, NoisyMax, Plan

# Additive slack in the Chernoff bound.
CHERNOFF_SLACK = 0.00001

NORM_KINDS = ("inf", "1", "2", "rmsd")


# -- iCDFs ------------------------------------------------------------------

class UnionICdf(ICdf):
    """``beta -> sum_j icdf_j(beta / n)``.

    Laplace operands are folded into a single scale sum so that sums over
    many unit counts stay cheap to evaluate.
    """

    __slots__ = ("n", "laplace_sum", "others")

    def __init__(self, n: int, laplace_sum: float = 0.0, others: Sequence[ICdf] = ()):
        self.n = n
        self.laplace_sum = laplace_sum
        self.others = tuple(others)

    @classmethod
    def of(cls, icdfs: Iterable[ICdf]) -> "UnionICdf":
        icdfs = list(icdfs)
        total, others = 0.0, []
        for f in icdfs:
            if isinstance(f, LaplaceICdf):
                total += f.scale
            else:
                others.append(f)
        return cls(len(icdfs), total, others)

    def _eval(self, beta, trace):
        share = beta / self.n
        alpha = math.log(1.0 / share) * self.laplace_sum if self.laplace_sum else 0.0
        for f in self.others:
            alpha += f._eval(share, trace)
        return alpha


class ChernoffICdf(ICdf):
    """Tail bound for a sum of independent Laplace draws.

    ``nu = max(sqrt(sum b_j^2), b_max * sqrt(ln(2/beta)))`` and
    ``alpha = (nu + slack) * sqrt(8 ln(2/beta))``.
    """

    __slots__ = ("n", "square_sum", "max_scale")

    def __init__(self, n: int, square_sum: float, max_scale: float):
        self.n = n
        self.square_sum = square_sum
        self.max_scale = max_scale

    @classmethod
    def of(cls, scales: Iterable[float]) -> "ChernoffICdf":
        scales = [float(b) for b in scales]
        return cls(len(scales), math.fsum(b * b for b in scales), max(scales))

    def _eval(self, beta, trace):
        log_term = math.log(2.0 / beta)
        nu = max(math.sqrt(self.square_sum), self.max_scale * math.sqrt(log_term))
        return (nu + CHERNOFF_SLACK) * math.sqrt(8.0 * log_term)


class AddICdf(ICdf):
    """iCDF of ``add``: the tighter of union and Chernoff when Chernoff applies."""

    __slots__ = ("union", "chernoff")

    def __init__(self, union: UnionICdf, chernoff: Optional[ChernoffICdf] = None):
        self.union = union
        self.chernoff = chernoff

    def _eval(self, beta, trace):
        union = self.union._eval(beta, trace)
        if self.chernoff is None:
            if trace is not None:
                trace.append(BoundChoice(BoundKind.UNION, self.union.n, beta, union, union_alpha=union))
            return union
        chernoff = self.chernoff._eval(beta, None)
        alpha = min(union, chernoff)
        if trace is not None:
            kind = BoundKind.CHERNOFF if chernoff < union else BoundKind.UNION
            trace.append(BoundChoice(
                kind, self.union.n, beta, alpha,
                union_alpha=union, chernoff_alpha=chernoff,
                scale_norm=math.sqrt(self.chernoff.square_sum), max_scale=self.chernoff.max_scale,
            ))
        return alpha


class NormICdf(ICdf):
    """Norm of the per-entry bounds ``alpha_j = icdf_j(beta / n)``."""

    __slots__ = ("kind", "icdfs")

    def __init__(self, kind: str, icdfs: Sequence[ICdf]):
        if kind not in NORM_KINDS:
            raise ValueError(f"unknown norm {kind!r}")
        self.kind = kind
        self.icdfs = tuple(icdfs)

    def _eval(self, beta, trace):
        n = len(self.icdfs)
        alphas = [f._eval(beta / n, trace) for f in self.icdfs]
        if self.kind == "inf":
            alpha = max(alphas)
        elif self.kind == "1":
            alpha = math.fsum(alphas)
        elif self.kind == "2":
            alpha = math.sqrt(math.fsum(a * a for a in alphas))
        else:
            alpha = math.sqrt(math.fsum(a * a for a in alphas) / n)
        if trace is not None:
            trace.append(BoundChoice(BoundKind.NORM, n, beta, alpha))
        return alpha


class ScaledICdf(ICdf):
    """``beta -> factor * inner(beta)``; the bound of a value multiplied by a constant."""

    __slots__ = ("factor", "inner")

    def __init__(self, factor: float, inner: ICdf):
        self.factor = factor
        self.inner = inner

    def _eval(self, beta, trace):
        return self.factor * self.inner._eval(beta, trace)


def union_bound(icdfs: Sequence[ICdf]) -> ICdf:
    icdfs = list(icdfs)
    if len(icdfs) < 2:
        raise ValueError(f"the union bound needs at least two operands, got {len(icdfs)}")
    return UnionICdf.of(icdfs)


def chernoff_bound(scales: Sequence[float]) -> ICdf:
    scales = list(scales)
    if len(scales) < 2:
        raise ValueError(f"the Chernoff bound needs at least two scales, got {len(scales)}")
    if not all(b > 0 for b in scales):
        raise ValueError("Chernoff scales must be positive")
    return ChernoffICdf.of(scales)


# -- combinators --------------------------------------------------------------

def _concrete(values) -> bool:
    return all(v._value is not None for v in values)


def add(values: Iterable[NoisyValue]) -> NoisyValue:
    """Sum noisy values, bounding the error with union or Chernoff.

    Chernoff is considered only when every operand is untainted and no two
    operands share a label; the result is always tainted.
    """
    values = list(values)
    if not values:
        raise ValueError("nothing to add")
    if len(values) == 1:
        return values[0]
    mask, independent = 0, True
    laplace_sum, square_sum, max_scale, others = 0.0, 0.0, 0.0, []
    for v in values:
        if v.scale is None or mask & v.label_mask:
            independent = False
        else:
            square_sum += v.scale * v.scale
            max_scale = max(max_scale, v.scale)
        mask |= v.label_mask
        if isinstance(v.icdf, LaplaceICdf):
            laplace_sum += v.icdf.scale
        else:
            others.append(v.icdf)
    n = len(values)
    chernoff = ChernoffICdf(n, square_sum, max_scale) if independent else None
    value = math.fsum(v._value for v in values) if _concrete(values) else None
    return NoisyValue(AddICdf(UnionICdf(n, laplace_sum, others), chernoff), None, mask, None, value)


def add_independent_laplace(count: int, scale_sum: float, square_sum: float, max_scale: float,
                            label_mask: int, value=None) -> NoisyValue:
    """``add`` over ``count`` untainted operands with disjoint labels, given only their scale statistics.

    Lets callers that already know the statistics (prefix sums over unit
    counts, say) skip materialising the operand list.
    """
    if count < 2:
        raise ValueError("use the operand itself for fewer than two values")
    union = UnionICdf(count, scale_sum)
    return NoisyValue(AddICdf(union, ChernoffICdf(count, square_sum, max_scale)), None, label_mask, None, value)


def _negate(x):
    if x is None:
        return None
    if isinstance(x, tuple):
        return tuple(-e for e in x)
    return -x


def neg(v: NoisyValue) -> NoisyValue:
    """Negate a value. Laplace noise is symmetric, so bound, scale and labels carry over."""
    return NoisyValue(v.icdf, v.scale, v.label_mask, v.norm, _negate(v._value))


def mul(c: float, v: NoisyValue) -> NoisyValue:
    """Multiply a scalar noisy value by a non-zero constant.

    An untainted value stays untainted with scale ``|c| * b``, since a scaled
    Laplace draw is again a Laplace draw.
    """
    c = float(c)
    if c == 0 or not math.isfinite(c):
        raise ValueError(f"multiplier must be finite and non-zero, got {c!r}")
    value = None if v._value is None else c * v._value
    if v.scale is not None:
        scale = abs(c) * v.scale
        return NoisyValue(LaplaceICdf(scale), scale, v.label_mask, None, value)
    return NoisyValue(ScaledICdf(abs(c), v.icdf), None, v.label_mask, None, value)


def _norm(kind: str, values: Iterable[NoisyValue]) -> NoisyValue:
    values = list(values)
    if not values:
        raise ValueError(f"norm_{kind} of an empty list")
    mask = 0
    for v in values:
        mask |= v.label_mask
    value = tuple(v._value for v in values) if _concrete(values) else None
    return NoisyValue(NormICdf(kind, [v.icdf for v in values]), None, mask, kind, value)


def norm_inf(values: Iterable[NoisyValue]) -> NoisyValue:
    """Vector of values whose error is measured as the largest entry error."""
    return _norm("inf", values)


def norm_1(values: Iterable[NoisyValue]) -> NoisyValue:
    return _norm("1", values)


def norm_2(values: Iterable[NoisyValue]) -> NoisyValue:
    return _norm("2", values)


def rmsd(values: Iterable[NoisyValue]) -> NoisyValue:
    """Vector of values whose error is the root-mean-square of the entry errors."""
    return _norm("rmsd", values)


# -- the interpreter ------------------------------------------------------------

@dataclass(frozen=True)
class AccuracyReport:
    """``alpha`` such that the plan's result is off by more than alpha with probability at most ``beta``."""

    alpha: float
    beta: float
    trace: tuple = ()


class AccuracyInterpreter(Interpreter):
    """Feeds symbolic noisy values, each with a fresh label, into the plan."""

    def __init__(self):
        super().__init__()
        self.labels_issued = 0

    def fresh_label(self) -> int:
        mask = 1 << self.labels_issued
        self.labels_issued += 1
        return mask

    def aggregate(self, plan: Aggregation):
        if isinstance(plan, NoisyMax):
            return NoisyValue(ConstantICdf(math.inf), None, self.fresh_label())
        scale = plan.scale
        return NoisyValue(LaplaceICdf(scale), scale, self.fresh_label())


def interpret_accuracy(plan: Plan):
    """Run the plan symbolically and return its (symbolic) result."""
    return AccuracyInterpreter().run(plan)


def report_for(value: NoisyValue, beta: float) -> AccuracyReport:
    beta = check_beta(beta)
    trace: list = []
    alpha = value.icdf.evaluate(beta, trace)
    if not trace and isinstance(value.icdf, LaplaceICdf):
        trace.append(BoundChoice(BoundKind.LAPLACE, 1, beta, alpha))
    return AccuracyReport(alpha, beta, tuple(trace))


def accuracy(plan: Plan, beta: float) -> AccuracyReport:
    """Error bound of ``plan``'s result at failure probability ``beta``.

    Never reads rows or samples noise. Raises :class:`SafetyViolation` for
    unsafe partitions and :class:`DomainError` for beta outside (0, 1).
    """
    beta = check_beta(beta)
    result = interpret_accuracy(plan)
    if not isinstance(result, NoisyValue):
        raise TypeError(f"accuracy needs a plan that yields a noisy value, got {type(result).__name__}")
    return report_for(result, beta)


def empirical_icdf_check(plan: Plan, truth, beta: float, trials: int, seed: int = 0) -> float:
    """Fraction of executions whose observed error exceeds the static bound at ``beta``.

    ``plan`` must be built over a dataset with rows; ``truth`` is the
    noiseless answer (a number, or a sequence for vector results).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    alpha = accuracy(plan, beta).alpha
    exceed = 0
    for result in execute_trials(plan, trials, seed):
        if observed_error(result, truth) > alpha:
            exceed += 1
    return exceed / trials
