"""Unsupervised feature selection via subspace-clustering similarity learning."""

__version__ = "0.1.0"

from .errors import (
    ContractViolationError,
    DivergenceError,
    InvalidInputError,
    ParseError,
    SchemaError,
    SCFSError,
    SolverError,
)
from .numerics import (
    SolverConfig,
    constraint_residual,
    frobenius_norm_sq,
    l21_norm,
    objective_value,
    penalized_objective,
)
from .solver import (
    FitResult,
    compute_M,
    fit,
    init_G,
    select_features,
    update_D,
    update_G,
    update_W,
)
from .evaluation import EvalReport, accuracy, best_map, evaluate_selection, kmeans, nmi
from .data import (
    Dataset,
    ExperimentReport,
    generate_planted,
    load_csv,
    preprocess,
    read_report,
    write_report,
)

__all__ = [
    "SCFSError", "InvalidInputError", "ContractViolationError", "ParseError",
    "SchemaError", "SolverError", "DivergenceError",
    "SolverConfig", "l21_norm", "frobenius_norm_sq", "objective_value",
    "penalized_objective", "constraint_residual",
    "FitResult", "init_G", "update_W", "update_D", "compute_M", "update_G", "fit",
    "select_features",
    "EvalReport", "kmeans", "best_map", "accuracy", "nmi", "evaluate_selection",
    "Dataset", "ExperimentReport", "load_csv", "preprocess", "generate_planted",
    "write_report", "read_report",
]
