"""Invariants, minimal aggregation and Krylov linearization for polynomial ODEs."""
from .poly import (
    IVP,
    DimensionError,
    LinExpr,
    Polynomial,
    Template,
    VectorField,
    evaluate,
    instantiate,
    lie_derivative,
    lie_derivative_iter,
    render,
    template_lie_derivative,
)
from .parsing import ParseError, load_model, parse_model, parse_polynomial, parse_template, render_model

__version__ = "0.1.0"
