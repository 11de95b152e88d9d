"""Ready-made analyses: packet-length CDFs, Adult histograms and range-query workloads."""
from __future__ import annotations

import bisect
import itertools
from collections import namedtuple
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .accuracy import AccuracyReport, add, add_independent_laplace, interpret_accuracy, mul, neg, norm_inf, report_for
from .core import NoisyValue, check_beta
from .executor import execute
from .plan import (
    Dataset,
    Plan,
    bind,
    dp_count,
    dp_part,
    dp_part_repeat,
    dp_select,
    dp_where,
    pure,
    query,
    sequence,
)

# -- packet CDFs ----------------------------------------------------------------

PACKET_SCHEMA = {
    "id": int,
    "timestamp": float,
    "src": str,
    "dest": str,
    "protocol": str,
    "length": int,
    "payload": str,
}
Packet = namedtuple("Packet", list(PACKET_SCHEMA))


def packet_length(row) -> int:
    return row.length


def default_bins(count: int, top: int = 1500) -> List[int]:
    """``count`` evenly spaced upper bin edges ending at ``top``."""
    if count < 1:
        raise ValueError("need at least one bin")
    return [round(top * (i + 1) / count) for i in range(count)]


def _check_bins(bins) -> List:
    bins = list(bins)
    if not bins:
        raise ValueError("bins must not be empty")
    if any(a >= b for a, b in zip(bins, bins[1:])):
        raise ValueError("bins must be strictly ascending")
    return bins


@query
def cdf_sequential(bins, eps, data: Dataset, naive: bool = False, length=packet_length):
    """CDF by one count per bin, each spending ``eps / len(bins)``.

    ``naive=True`` spends the full ``eps`` on every count, which costs
    ``len(bins) * eps`` overall.
    """
    bins = _check_bins(bins)
    local_eps = eps if naive else eps / len(bins)
    sizes = yield dp_select(length, data)
    counts = yield sequence(
        dp_where(lambda x, b=b: x <= b, sizes).bind(lambda elems: dp_count(local_eps, elems))
        for b in bins
    )
    return norm_inf(counts)


def assign_bin(bins: Sequence) -> Callable:
    """Map a value to the smallest bin edge not below it."""

    def bin_of(x):
        return bins[bisect.bisect_left(bins, x)]

    return bin_of


@query
def cdf_parallel(bins, eps, data: Dataset, length=packet_length):
    """CDF from a histogram counted at full ``eps`` in disjoint partitions, then prefix sums."""
    bins = _check_bins(bins)
    top, bin_of = bins[-1], assign_bin(bins)
    sizes = yield dp_where(lambda r: length(r) <= top, data)
    parts = yield dp_part_repeat(lambda d: dp_count(eps, d), bins, lambda r: bin_of(length(r)), sizes)
    counts = [parts[b] for b in bins]
    return norm_inf([add(counts[:i]) for i in range(1, len(counts) + 1)])


def true_cdf(bins, values) -> List[int]:
    values = sorted(values)
    return [bisect.bisect_right(values, b) for b in bins]


# -- Adult histograms ------------------------------------------------------------

ADULT_SCHEMA = {"age": int, "gender": str, "nationality": str}
Person = namedtuple("Person", list(ADULT_SCHEMA))

GENDERS = ("Female", "Male")
AGE_GROUPS = ("17-24", "25-34", "35-44", "45-54", "55-64", "65-74", "75-84", "85+")
_AGE_EDGES = (25, 35, 45, 55, 65, 75, 85)
NATIONALITIES = (
    "Cambodia", "Canada", "China", "Columbia", "Cuba", "Dominican-Republic", "Ecuador",
    "El-Salvador", "England", "France", "Germany", "Greece", "Guatemala", "Haiti", "Honduras",
    "Hong", "Hungary", "India", "Iran", "Ireland", "Italy", "Jamaica", "Japan", "Laos",
    "Mexico", "Nicaragua", "Peru", "Philippines", "Poland", "Portugal", "Puerto-Rico",
    "Scotland", "South", "Taiwan", "Thailand", "Trinadad&Tobago", "United-States", "Vietnam",
    "Yugoslavia",
)

GEN_KEYS = list(GENDERS)
GEN_AGE_KEYS = list(itertools.product(GENDERS, AGE_GROUPS))
GEN_AGE_NAT_KEYS = list(itertools.product(GENDERS, AGE_GROUPS, NATIONALITIES))


def age_group(age: int) -> str:
    return AGE_GROUPS[bisect.bisect_right(_AGE_EDGES, age)]


def gen_key(row):
    return row.gender


def gen_age_key(row):
    return (row.gender, age_group(row.age))


def gen_age_nat_key(row):
    return (row.gender, age_group(row.age), row.nationality)


def _histogram(keys, key_of):
    def build(eps, data: Dataset) -> Plan:
        return dp_part_repeat(lambda d: dp_count(eps, d), keys, key_of, data)

    return build


by_gen = _histogram(GEN_KEYS, gen_key)
by_gen.__doc__ = "Noisy count per gender."
by_gen_age = _histogram(GEN_AGE_KEYS, gen_age_key)
by_gen_age.__doc__ = "Noisy count per (gender, age group)."
by_gen_age_nat = _histogram(GEN_AGE_NAT_KEYS, gen_age_nat_key)
by_gen_age_nat.__doc__ = "Noisy count per (gender, age group, nationality)."

HISTOGRAMS = {"byGen": by_gen, "byGenAge": by_gen_age, "byGenAgeNat": by_gen_age_nat}


def histogram_error(hist: Dict) -> NoisyValue:
    return norm_inf([hist[k] for k in sorted(hist)])


def histogram_program(builder, data: Optional[Dataset] = None) -> Callable[[float], Plan]:
    """``eps -> plan`` measuring a histogram's error in the max norm; the optimizer's input."""
    data = data if data is not None else Dataset.symbolic()
    return lambda eps: bind(builder(eps, data), lambda h: pure(histogram_error(h)))


def hierarchical_split(e1, e2, e3, data: Dataset) -> Plan:
    """Three independent histograms, one per level, each with its own epsilon."""

    @query
    def build():
        h1 = yield by_gen(e1, data)
        h2 = yield by_gen_age(e2, data)
        h3 = yield by_gen_age_nat(e3, data)
        return (h1, h2, h3)

    return build()


def hierarchical_bottom_up(e, data: Dataset) -> Plan:
    """Only the finest histogram is counted; coarser levels are sums of its cells."""

    def derive(h3):
        h2 = {(g, a): add([h3[(g, a, n)] for n in NATIONALITIES]) for g, a in GEN_AGE_KEYS}
        h1 = {g: add([h3[(g, a, n)] for a in AGE_GROUPS for n in NATIONALITIES]) for g in GENDERS}
        return pure((h1, h2, h3))

    return bind(by_gen_age_nat(e, data), derive)


def level_error(plan: Plan, level: int) -> Plan:
    """Plan yielding the max-norm error of one level (1, 2 or 3) of a hierarchical plan."""
    if level not in (1, 2, 3):
        raise ValueError("level must be 1, 2 or 3")
    return bind(plan, lambda levels: pure(histogram_error(levels[level - 1])))


# -- colour histogram --------------------------------------------------------------

COLOR_SCHEMA = {"color": str}
ColorRow = namedtuple("ColorRow", list(COLOR_SCHEMA))
COLORS = ("blue", "green", "red", "yellow")


def color_of(row):
    return row.color


def color_histogram(eps, data: Dataset, colors=COLORS) -> Plan:
    return dp_part(color_of, data, {c: (lambda ds: dp_count(eps, ds)) for c in colors})


def color_histogram_leaky(eps, data: Dataset, colors=COLORS) -> Plan:
    """The classic mistake: every branch counts the whole dataset instead of its partition."""
    return dp_part(color_of, data, {c: (lambda ds: dp_count(eps, data)) for c in colors})


# -- range-query workloads ---------------------------------------------------------

_STRATEGY_NAMES = {
    "identity": "Identity", "i": "Identity",
    "hierarchical": "Hierarchical", "h": "Hierarchical",
    "wavelet": "Wavelet", "y": "Wavelet",
}


@dataclass(frozen=True)
class StrategyMatrix:
    name: str
    rows: Tuple[Tuple[int, ...], ...]

    @property
    def shape(self) -> Tuple[int, int]:
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def to_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=int)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def _blocks(n: int):
    """Dyadic blocks ``(start, size)`` level by level, coarsest first."""
    size = n
    while size >= 1:
        for start in range(0, n, size):
            yield start, size
        size //= 2


def build_strategy(name: str, n: int) -> StrategyMatrix:
    """Identity, binary hierarchy of sums, or Haar wavelet strategy over ``n`` unit ranges."""
    canonical = _STRATEGY_NAMES.get(name.lower())
    if canonical is None:
        raise ValueError(f"unknown strategy {name!r}")
    if n < 1:
        raise ValueError("n must be positive")
    if canonical == "Identity":
        rows = [tuple(int(i == j) for j in range(n)) for i in range(n)]
        return StrategyMatrix(canonical, tuple(rows))
    if not _is_power_of_two(n):
        raise ValueError(f"{canonical} strategy needs a power of two, got {n}")
    if canonical == "Hierarchical":
        rows = [tuple(int(start <= j < start + size) for j in range(n)) for start, size in _blocks(n)]
    else:
        rows = [(1,) * n]
        for start, size in _blocks(n):
            if size == 1:
                break
            half = size // 2
            rows.append(tuple(
                1 if start <= j < start + half else -1 if start + half <= j < start + size else 0
                for j in range(n)
            ))
    return StrategyMatrix(canonical, tuple(rows))


def range_queries(n: int) -> List[Tuple[int, int]]:
    """All contiguous ranges ``(i, j)``, 0-based and inclusive, ordered by i then j."""
    return [(i, j) for i in range(n) for j in range(i, n)]


def _dyadic_cover(i: int, j: int, n: int) -> List[int]:
    # Row index of block (start, size) is (n // size - 1) + start // size.
    out, start = [], i
    while start <= j:
        size = start & -start if start else n
        while start + size - 1 > j:
            size //= 2
        out.append(n // size - 1 + start // size)
        start += size
    return out


def range_decomposition(strategy: StrategyMatrix, i: int, j: int) -> List[Tuple[int, Fraction]]:
    """Coefficients ``c_k`` with ``sum_k c_k * row_k`` equal to the indicator of ``[i, j]``."""
    n = strategy.shape[1]
    if not 0 <= i <= j < n:
        raise ValueError(f"bad range [{i}, {j}] for n = {n}")
    if strategy.name == "Identity":
        return [(k, Fraction(1)) for k in range(i, j + 1)]
    if strategy.name == "Hierarchical":
        return [(k, Fraction(1)) for k in _dyadic_cover(i, j, n)]
    # Haar rows are mutually orthogonal, so c_k = <w, y_k> / |y_k|^2.
    out = []
    for k, row in enumerate(strategy.rows):
        dot = sum(row[i:j + 1])
        if dot:
            out.append((k, Fraction(dot, sum(e * e for e in row))))
    return out


def _weighted(weight: Fraction, v: NoisyValue) -> NoisyValue:
    if weight == 1:
        return v
    if weight == -1:
        return neg(v)
    return mul(float(weight), v)


def strategy_constituents(strategy: StrategyMatrix, x: Sequence[NoisyValue], i: int, j: int) -> List[NoisyValue]:
    """Unit counts (with weights) that the strategy uses to answer range ``[i, j]``.

    Strategy rows are kept as lists of unit counts rather than summed, so
    the final ``add`` sees every noise source.
    """
    out = []
    for k, c in range_decomposition(strategy, i, j):
        for col, entry in enumerate(strategy.rows[k]):
            if entry:
                out.append(_weighted(c * entry, x[col]))
    return out


def _identity_answers(x: Sequence[NoisyValue]) -> Optional[List[NoisyValue]]:
    """Answer every range over unit counts via prefix sums, or None if they are not uniform and independent."""
    scale = x[0].scale
    if scale is None or any(v.scale != scale for v in x):
        return None
    masks = [0]
    for v in x:
        if masks[-1] & v.label_mask:
            return None
        masks.append(masks[-1] | v.label_mask)
    values = None
    if all(v._value is not None for v in x):
        values = np.concatenate([[0.0], np.cumsum([v._value for v in x])])
    out = []
    for i, j in range_queries(len(x)):
        if i == j:
            out.append(x[i])
            continue
        count = j - i + 1
        value = None if values is None else float(values[j + 1] - values[i])
        out.append(add_independent_laplace(
            count, count * scale, count * scale * scale, scale, masks[j + 1] ^ masks[i], value,
        ))
    return out


def answer_ranges(strategy: StrategyMatrix, x: Sequence[NoisyValue]) -> List[NoisyValue]:
    """Noisy answers to every range query from unit counts ``x``, in :func:`range_queries` order."""
    if strategy.name == "Identity":
        fast = _identity_answers(x)
        if fast is not None:
            return fast
    return [add(strategy_constituents(strategy, x, i, j)) for i, j in range_queries(len(x))]


def range_workload_plan(strategy: StrategyMatrix, eps, data: Dataset, bucket: Callable) -> Plan:
    """Count each of the ``n`` unit ranges in its own partition, then answer all ranges.

    ``bucket`` maps a row to its unit range in ``0 .. n-1``.
    """
    n = strategy.shape[1]

    def answer(parts):
        return pure(answer_ranges(strategy, [parts[k] for k in range(n)]))

    return bind(dp_part_repeat(lambda d: dp_count(eps, d), range(n), bucket, data), answer)


def answer_range_workload(strategy: StrategyMatrix, n: int, eps, data: Dataset, beta: float,
                          bucket: Callable = lambda r: r, seed=None):
    """Answers and per-query error reports for all ``n(n+1)/2`` ranges.

    ``beta`` is split evenly over the queries. With a materialised dataset
    the answers are executed; otherwise they are symbolic.
    """
    if strategy.shape[1] != n:
        raise ValueError(f"strategy is over {strategy.shape[1]} ranges, not {n}")
    beta = check_beta(beta)
    plan = range_workload_plan(strategy, eps, data, bucket)
    values = execute(plan, seed) if data.materialized else interpret_accuracy(plan)
    share = beta / len(values)
    reports: List[AccuracyReport] = [report_for(v, share) for v in values]
    return values, reports


# -- synthetic fixtures ---------------------------------------------------------------

_PROTOCOLS = ("TCP", "UDP", "ICMP")


def synthetic_packets(count: int, seed: int = 0) -> List[Packet]:
    """Packets whose lengths mix small control frames with near-MTU payloads."""
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(count):
        length = int(rng.integers(40, 120)) if rng.random() < 0.4 else int(rng.integers(120, 1501))
        rows.append(Packet(
            k, round(1.5e9 + k * 0.01 + float(rng.random()), 3),
            f"10.0.0.{int(rng.integers(1, 255))}", f"10.0.1.{int(rng.integers(1, 255))}",
            _PROTOCOLS[int(rng.integers(0, 3))], length, f"{int(rng.integers(0, 2**32)):08x}",
        ))
    return rows


def synthetic_adult(count: int, seed: int = 0) -> List[Person]:
    rng = np.random.default_rng(seed)
    weights = np.full(len(NATIONALITIES), 0.2 / (len(NATIONALITIES) - 1))
    weights[NATIONALITIES.index("United-States")] = 0.8
    rows = []
    for _ in range(count):
        age = int(min(90, max(17, round(rng.normal(38, 13)))))
        rows.append(Person(age, GENDERS[int(rng.random() < 0.67)],
                           NATIONALITIES[int(rng.choice(len(NATIONALITIES), p=weights))]))
    return rows


def synthetic_colors(count: int, seed: int = 0) -> List[ColorRow]:
    rng = np.random.default_rng(seed)
    return [ColorRow(COLORS[int(rng.integers(0, len(COLORS)))]) for _ in range(count)]
