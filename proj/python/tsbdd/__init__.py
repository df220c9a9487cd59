"""Fault posteriors for troubleshooting models by ROBDD model counting."""

from ._tsbdd import (
    Error,
    InvalidArgument,
    Kernel,
    Model,
    ParseError,
    UnknownVariable,
    ValidationError,
    VerificationError,
    bench_csv,
    cause_counts,
    compile,
    count_formula,
    oracle_posteriors,
    posteriors,
    size_bound,
)

__all__ = [
    "Error",
    "InvalidArgument",
    "Kernel",
    "Model",
    "ParseError",
    "UnknownVariable",
    "ValidationError",
    "VerificationError",
    "bench_csv",
    "cause_counts",
    "compile",
    "count_formula",
    "oracle_posteriors",
    "posteriors",
    "size_bound",
]
