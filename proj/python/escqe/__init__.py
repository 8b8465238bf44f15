"""Excited-state contracted quantum eigensolver."""

from ._core import (
    DomainError,
    Error,
    Geometry,
    ParseError,
    Problem,
    RunConfig,
    SymmetryError,
    UnsupportedError,
    dissociation_point,
    k_matched_error_mh,
    nearest_unique_error_mh,
    run_spectrum,
    validate,
    write_fcidump,
)

__all__ = [
    "DomainError",
    "Error",
    "Geometry",
    "ParseError",
    "Problem",
    "RunConfig",
    "SymmetryError",
    "UnsupportedError",
    "dissociation_point",
    "k_matched_error_mh",
    "nearest_unique_error_mh",
    "run_spectrum",
    "validate",
    "write_fcidump",
]
