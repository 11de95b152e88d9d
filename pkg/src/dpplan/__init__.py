"""Differentially private query plans with static budget and accuracy analysis."""
from .accuracy import (
    AccuracyReport,
    accuracy,
    add,
    chernoff_bound,
    empirical_icdf_check,
    mul,
    neg,
    norm_1,
    norm_2,
    norm_inf,
    rmsd,
    union_bound,
)
from .core import (
    BudgetExceeded,
    DomainError,
    ICdf,
    NoisyValue,
    SafetyViolation,
    StabilityError,
    icdf_eval,
    laplace_icdf,
)
from .csvio import CsvError, load_csv
from .executor import evaluate, execute, sample_laplace
from .optimizer import OptimizerInput, OptimizerOutcome, Status, choose_eps, iterate_error
from .plan import (
    Dataset,
    bind,
    dp_avg,
    dp_count,
    dp_group_by,
    dp_intersect,
    dp_max,
    dp_part,
    dp_part_repeat,
    dp_select,
    dp_sum,
    dp_union,
    dp_where,
    pure,
    query,
    sequence,
)
from .privacy import BudgetReport, budget, check_partition_safety

__all__ = [
    "AccuracyReport",
    "accuracy",
    "add",
    "chernoff_bound",
    "empirical_icdf_check",
    "mul",
    "neg",
    "norm_1",
    "norm_2",
    "norm_inf",
    "rmsd",
    "union_bound",
    "BudgetExceeded",
    "DomainError",
    "ICdf",
    "NoisyValue",
    "SafetyViolation",
    "StabilityError",
    "icdf_eval",
    "laplace_icdf",
    "CsvError",
    "load_csv",
    "evaluate",
    "execute",
    "sample_laplace",
    "OptimizerInput",
    "OptimizerOutcome",
    "Status",
    "choose_eps",
    "iterate_error",
    "Dataset",
    "bind",
    "dp_avg",
    "dp_count",
    "dp_group_by",
    "dp_intersect",
    "dp_max",
    "dp_part",
    "dp_part_repeat",
    "dp_select",
    "dp_sum",
    "dp_union",
    "dp_where",
    "pure",
    "query",
    "sequence",
    "BudgetReport",
    "budget",
    "check_partition_safety",
]

__version__ = "0.1.0"
