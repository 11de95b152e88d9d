"""Shared domain types: regions, errors, the iCDF abstraction and noisy values.

An iCDF maps a failure probability ``beta`` in (0, 1) to an error magnitude
``alpha`` such that ``Pr[|noisy - exact| > alpha] <= beta``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

# Global sensitivities of the aggregations (sum/avg assume inputs clipped to [-1, 1]).
COUNT_SENSITIVITY = 1.0
SUM_SENSITIVITY = 1.0
AVG_SENSITIVITY = 2.0
MAX_SENSITIVITY = 1.0


class DomainError(ValueError):
    """Raised when a failure probability lies outside the open interval (0, 1)."""


class StabilityError(ValueError):
    """Raised when an aggregation is applied to a dataset of unsupported stability."""


class SafetyViolation(Exception):
    """A partition branch touched a dataset outside its own partition.

    Attributes:
        path: location of the offending node inside the plan.
        region: region of the dataset that was accessed.
        expected: region the branch was confined to.
    """

    def __init__(self, path: str, region: "Region", expected: "Region"):
        self.path = path
        self.region = region
        self.expected = expected
        super().__init__(
            f"partition safety violation at {path}: dataset from region "
            f"{region.name!r} used inside region {expected.name!r}"
        )


class BudgetExceeded(Exception):
    """Raised by the executor when a plan needs more epsilon than the cap allows."""

    def __init__(self, required: float, cap: float):
        self.required = required
        self.cap = cap
        super().__init__(f"plan requires epsilon {required:g} but the cap is {cap:g}")


def check_beta(beta: float) -> float:
    beta = float(beta)
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta!r}")
    return beta


_region_ids = itertools.count()


class Region:
    """Provenance tag for datasets. Partition branches get fresh child regions."""

    __slots__ = ("parent", "name", "_id")

    def __init__(self, parent: Optional["Region"] = None, name: str = ""):
        self.parent = parent
        self._id = next(_region_ids)
        self.name = name or f"region-{self._id}"

    def child(self, name: str = "") -> "Region":
        return Region(self, name or f"{self.name}/{next(_region_ids)}")

    def within(self, other: "Region") -> bool:
        """True if ``self`` is ``other`` or one of its descendants."""
        region: Optional[Region] = self
        while region is not None:
            if region is other:
                return True
            region = region.parent
        return False

    def __repr__(self) -> str:
        return f"Region({self.name!r})"


ROOT = Region(None, "root")


class BoundKind(Enum):
    LAPLACE = "laplace"
    UNION = "union"
    CHERNOFF = "chernoff"
    NORM = "norm"


@dataclass(frozen=True)
class BoundChoice:
    """Which error bound a combinator node used for one evaluation.

    ``scale_norm`` and ``max_scale`` summarise the operand Laplace scales
    (sqrt of the sum of squares, and the maximum) when the operands were
    Chernoff-eligible; they are ``None`` otherwise.
    """

    kind: BoundKind
    operands: int
    beta: float
    alpha: float
    union_alpha: Optional[float] = None
    chernoff_alpha: Optional[float] = None
    scale_norm: Optional[float] = None
    max_scale: Optional[float] = None


class ICdf:
    """Inverse cumulative error function ``beta -> alpha``.

    Subclasses implement ``_eval``; calling the object validates ``beta``.
    ``_eval`` receives an optional list that combinator nodes append their
    :class:`BoundChoice` to.
    """

    __slots__ = ()

    def __call__(self, beta: float) -> float:
        return self._eval(check_beta(beta), None)

    def evaluate(self, beta: float, trace: Optional[list] = None) -> float:
        return self._eval(check_beta(beta), trace)

    def _eval(self, beta: float, trace: Optional[list]) -> float:
        raise NotImplementedError


def icdf_eval(icdf: ICdf, beta: float) -> float:
    return icdf(beta)


class LaplaceICdf(ICdf):
    """``beta -> ln(1/beta) * scale`` for a single Laplace draw of the given scale."""

    __slots__ = ("scale",)

    def __init__(self, scale: float):
        if not scale > 0:
            raise ValueError(f"Laplace scale must be positive, got {scale!r}")
        self.scale = float(scale)

    def _eval(self, beta, trace):
        return math.log(1.0 / beta) * self.scale

    def __repr__(self):
        return f"LaplaceICdf({self.scale!r})"


class ConstantICdf(ICdf):
    """An error bound that does not depend on beta (0 for exact values, inf for unbounded)."""

    __slots__ = ("alpha",)

    def __init__(self, alpha: float):
        if math.isnan(alpha) or alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {alpha!r}")
        self.alpha = float(alpha)

    def _eval(self, beta, trace):
        return self.alpha

    def __repr__(self):
        return f"ConstantICdf({self.alpha!r})"


class UnavailableICdf(ICdf):
    """Placeholder carried by values produced during budget analysis."""

    __slots__ = ()

    def _eval(self, beta, trace):
        raise RuntimeError(
            "this value was produced by the budget interpreter and carries no accuracy information"
        )


UNAVAILABLE = UnavailableICdf()


def laplace_icdf(scale: float) -> LaplaceICdf:
    return LaplaceICdf(scale)


@dataclass(frozen=True, slots=True, eq=False)
class NoisyValue:
    """Result of an aggregation or of a combinator over such results.

    ``scale`` is present only for untainted values (a single independent
    Laplace draw); ``label_mask`` is a bitmask of noise-source labels.
    The concrete number lives in ``_value`` and is only set by the executor.
    """

    icdf: ICdf
    scale: Optional[float] = None
    label_mask: int = 0
    norm: Optional[str] = None
    _value: Any = field(default=None, repr=False)

    def __post_init__(self):
        if self.scale is not None:
            mask = self.label_mask
            if mask == 0 or mask & (mask - 1):
                raise ValueError("an untainted value must carry exactly one label")

    @property
    def labels(self) -> frozenset:
        mask, out, i = self.label_mask, [], 0
        while mask:
            if mask & 1:
                out.append(i)
            mask >>= 1
            i += 1
        return frozenset(out)

    @property
    def tainted(self) -> bool:
        return self.scale is None

    @classmethod
    def symbolic(cls) -> "NoisyValue":
        return cls(UNAVAILABLE)
