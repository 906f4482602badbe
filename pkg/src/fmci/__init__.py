"""Distinct counting with register sketches and non-asymptotic confidence intervals."""
from .ci import halfwidth_from_tail, interval, min_log_length, plan, tail_from_halfwidth
from .errors import (
    CapacityError,
    ConfigError,
    ConvergenceError,
    DomainError,
    FormatError,
    MergeError,
)
from .sketch import QueryResult, Sketch, SketchParams

__version__ = "0.1.0"
