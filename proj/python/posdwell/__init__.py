"""Copositive L-infinity analysis and synthesis for positive impulsive and switched systems."""

from ._posdwell import (
    Certificate,
    Controller,
    DimensionMismatch,
    Infeasible,
    Mismatch,
    NotConstant,
    NumericalFailure,
    ParseError,
    RelaxationLimit,
    System,
    analyze,
    certify_nonneg,
    cross_check,
    estimate_gain,
    lti_linf_gain,
    switched_gridded_gain,
    synthesize,
    verify,
    verify_controller,
)

__all__ = [
    "Certificate",
    "Controller",
    "DimensionMismatch",
    "Infeasible",
    "Mismatch",
    "NotConstant",
    "NumericalFailure",
    "ParseError",
    "RelaxationLimit",
    "System",
    "analyze",
    "certify_nonneg",
    "cross_check",
    "estimate_gain",
    "lti_linf_gain",
    "switched_gridded_gain",
    "synthesize",
    "verify",
    "verify_controller",
]
