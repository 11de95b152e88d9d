"""Command-line interface: budget, accuracy, run, simulate, compare-bounds and optimize."""
from __future__ import annotations

import argparse
import contextlib
import math
import sys
from dataclasses import dataclass
from importlib import resources
from typing import Callable, List, Optional, Sequence

from .accuracy import accuracy, chernoff_bound, union_bound
from .core import ROOT, BudgetExceeded, ConstantICdf, DomainError, LaplaceICdf, NoisyValue, SafetyViolation
from .csvio import CsvError, format_number, load_csv, write_csv
from .executor import evaluate, execute_trials, observed_error
from .optimizer import OptimizerInput, Status, choose_eps
from .plan import Dataset, Plan, bind, pure
from .privacy import budget
from .workloads import (
    ADULT_SCHEMA,
    COLOR_SCHEMA,
    COLORS,
    GEN_AGE_KEYS,
    GEN_AGE_NAT_KEYS,
    GEN_KEYS,
    HISTOGRAMS,
    PACKET_SCHEMA,
    cdf_parallel,
    cdf_sequential,
    color_histogram,
    color_histogram_leaky,
    default_bins,
    gen_age_key,
    gen_age_nat_key,
    gen_key,
    histogram_error,
    histogram_program,
    true_cdf,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_SAFETY = 4
EXIT_PARSE = 5


@dataclass(frozen=True)
class Workload:
    """A named analysis: how to build its plan, which CSV it reads and what the exact answer is."""

    schema: dict
    fixture: str
    build: Callable[[argparse.Namespace, Dataset], Plan]
    keys: Callable[[argparse.Namespace], list]
    truth: Callable[[argparse.Namespace, list], object]


def _bins(args) -> List[int]:
    return default_bins(args.bins)


def _cdf(builder) -> Workload:
    return Workload(
        PACKET_SCHEMA, "packets.csv",
        lambda a, d: builder(_bins(a), a.eps, d),
        _bins,
        lambda a, rows: true_cdf(_bins(a), [r.length for r in rows]),
    )


def _keyed(histogram_plan, keys, key_of, schema, fixture) -> Workload:
    def build(a, d):
        return bind(histogram_plan(a.eps, d), lambda h: pure(histogram_error(h)))

    def truth(a, rows):
        counts = dict.fromkeys(keys, 0)
        for r in rows:
            k = key_of(r)
            if k in counts:
                counts[k] += 1
        return [counts[k] for k in sorted(keys)]

    return Workload(schema, fixture, build, lambda a: sorted(keys), truth)


def _adult(name) -> Workload:
    keys, key_of = {
        "byGen": (GEN_KEYS, gen_key),
        "byGenAge": (GEN_AGE_KEYS, gen_age_key),
        "byGenAgeNat": (GEN_AGE_NAT_KEYS, gen_age_nat_key),
    }[name]
    return _keyed(HISTOGRAMS[name], keys, key_of, ADULT_SCHEMA, "adult.csv")


WORKLOADS = {
    "pure": Workload(
        PACKET_SCHEMA, "packets.csv",
        lambda a, d: pure(NoisyValue(ConstantICdf(0.0), _value=0.0)),
        lambda a: ["value"],
        lambda a, rows: 0.0,
    ),
    "cdf1": _cdf(cdf_sequential),
    "cdf1-naive": _cdf(lambda bins, eps, d: cdf_sequential(bins, eps, d, naive=True)),
    "cdf2": _cdf(cdf_parallel),
    "byGen": _adult("byGen"),
    "byGenAge": _adult("byGenAge"),
    "byGenAgeNat": _adult("byGenAgeNat"),
    "histogram-good": _keyed(color_histogram, COLORS, lambda r: r.color, COLOR_SCHEMA, "colors.csv"),
    "histogram-bad": _keyed(color_histogram_leaky, COLORS, lambda r: r.color, COLOR_SCHEMA, "colors.csv"),
}


def fixture_path(name: str) -> str:
    return str(resources.files("dpplan") / "data" / name)


def load_workload_rows(workload: Workload, path: Optional[str]):
    return load_csv(path or fixture_path(workload.fixture), workload.schema)


def _key_text(key) -> str:
    return "/".join(map(str, key)) if isinstance(key, tuple) else str(key)


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


# -- commands ------------------------------------------------------------------------

def cmd_budget(args) -> int:
    report = budget(WORKLOADS[args.workload].build(args, Dataset.symbolic()))
    print(f"epsilon = {report.total:.15g}")
    if args.verbose:
        for path, eps in report.breakdown:
            print(f"  {path}: {eps:.15g}")
    return EXIT_OK


def _alpha_text(alpha: float, exact: bool) -> str:
    if exact or math.isinf(alpha):
        return repr(alpha)
    return str(math.ceil(alpha))


def cmd_accuracy(args) -> int:
    report = accuracy(WORKLOADS[args.workload].build(args, Dataset.symbolic()), args.beta)
    print(f"alpha = {_alpha_text(report.alpha, args.exact)}")
    if args.verbose:
        for choice in report.trace:
            print(f"  {choice.kind.value}: n={choice.operands} beta={choice.beta:.6g} alpha={choice.alpha:.6g}")
    return EXIT_OK


def cmd_run(args) -> int:
    workload = WORKLOADS[args.workload]
    rows = load_workload_rows(workload, args.csv)
    result = evaluate(lambda d: workload.build(args, d), rows, args.cap, args.seed)
    with _output(args.out) as out:
        write_csv(out, ["key", "value"], zip(map(_key_text, workload.keys(args)), _as_list(result)))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.trials < 1:
        raise DomainError("trials must be at least 1")
    workload = WORKLOADS[args.workload]
    rows = load_workload_rows(workload, args.csv)
    plan = workload.build(args, Dataset(1, ROOT, rows))
    alpha = accuracy(plan, args.beta).alpha
    truth = workload.truth(args, rows)
    errors = [observed_error(r, truth) for r in execute_trials(plan, args.trials, args.seed)]
    exceed = sum(e > alpha for e in errors)
    with _output(args.out) as out:
        write_csv(out, ["trial", "observed_error"], enumerate(errors, 1))
    print(f"# alpha = {alpha!r} at beta = {args.beta:g}; exceed fraction = {exceed / len(errors):.6g} "
          f"({exceed}/{len(errors)})")
    return EXIT_OK


def cmd_compare_bounds(args) -> int:
    rows = []
    for n in range(args.n_min, args.n_max + 1):
        rows.append((n, union_bound([LaplaceICdf(args.scale)] * n)(args.beta),
                     chernoff_bound([args.scale] * n)(args.beta)))
    with _output(args.out) as out:
        write_csv(out, ["n", "union_alpha", "chernoff_alpha"], rows)
    return EXIT_OK


_STATUS_TEXT = {Status.SUCCESS: "✓", Status.MAX_BUDGET: "× MaxBud", Status.MAX_ITERATION: "× MaxIter"}


def _two_decimals(x: float) -> str:
    # Truncate, not round: 96.138 shows as 96.13.
    if math.isinf(x):
        return "inf"
    return f"{math.floor(x * 100 + 1e-9) / 100:.2f}"


def cmd_optimize(args) -> int:
    names = args.analyses.split(",")
    for name in names:
        if name not in HISTOGRAMS:
            raise DomainError(f"unknown analysis {name!r}; choose from {', '.join(HISTOGRAMS)}")
    tolerances = [float(t) for t in args.tolerances.split(",")]
    if len(tolerances) != len(names):
        raise DomainError(f"{len(names)} analyses but {len(tolerances)} tolerances")
    inp = OptimizerInput(args.total, args.beta, min_eps=args.min_eps, delta=args.delta, iterations=args.iterations)
    outcomes = choose_eps([histogram_program(HISTOGRAMS[n]) for n in names], inp, tolerances)
    fmt = "{:<12} {:>9} {:<9} {:>6} {:>8}"
    print(fmt.format("Histogram", "Tolerance", "Status", "eps", "alpha"))
    for name, tol, o in zip(names, tolerances, outcomes):
        alpha = repr(o.alpha) if args.exact else _two_decimals(o.alpha)
        print(fmt.format(name, format_number(tol), _STATUS_TEXT[o.status], format_number(o.epsilon), alpha))
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------

def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpplan", description="Differentially private query plans.")
    sub = parser.add_subparsers(dest="command", required=True)

    def workload_command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("workload", choices=sorted(WORKLOADS))
        p.add_argument("--bins", type=_positive_int, default=10, help="number of CDF bins (default 10)")
        p.add_argument("--eps", type=_positive_float, default=1.0, help="epsilon (default 1)")
        p.add_argument("--verbose", action="store_true")
        return p

    p = workload_command("budget", "print the epsilon a workload spends")
    p.set_defaults(func=cmd_budget)

    p = workload_command("accuracy", "print the error bound of a workload")
    p.add_argument("--beta", type=float, default=0.05)
    p.add_argument("--exact", action="store_true", help="print alpha without rounding up")
    p.set_defaults(func=cmd_accuracy)

    p = workload_command("run", "execute a workload on a CSV file")
    p.add_argument("csv")
    p.add_argument("--cap", type=float, required=True, help="refuse plans that spend more than this")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = workload_command("simulate", "compare observed errors against the bound")
    p.add_argument("csv", nargs="?", help="input rows (default: bundled fixture)")
    p.add_argument("--beta", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare-bounds", help="union and Chernoff bounds for n equal Laplace scales")
    p.add_argument("--scale", type=_positive_float, default=1.0)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare_bounds)

    p = sub.add_parser("optimize", help="smallest epsilon per histogram meeting error tolerances")
    p.add_argument("--analyses", default="byGen,byGenAge,byGenAgeNat")
    p.add_argument("--tolerances", default="100,100,100")
    p.add_argument("--beta", type=float, default=0.05)
    p.add_argument("--total", type=_positive_float, default=3.0, help="total epsilon, split evenly")
    p.add_argument("--min-eps", type=_positive_float, default=0.01)
    p.add_argument("--delta", type=_positive_float, default=0.05)
    p.add_argument("--iterations", type=_positive_int, default=1000)
    p.add_argument("--exact", action="store_true")
    p.set_defaults(func=cmd_optimize)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except SafetyViolation as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_SAFETY
    except CsvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DomainError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
