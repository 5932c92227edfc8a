"""Argument checks shared by the estimator and the command line."""
import numbers

from .errors import ValidationError
from .models import BUILTIN, builtin_spec
from .parser import parse_spec
from .spec import CombinatorialSpec, validate_spec


def check_spec(spec):
    """Return a validated CombinatorialSpec from a spec, a builtin name or spec text."""
    if isinstance(spec, str):
        spec = builtin_spec(spec) if spec in BUILTIN else parse_spec(spec)
    if not isinstance(spec, CombinatorialSpec):
        raise TypeError(f"expected a specification, got {type(spec).__name__}")
    report = validate_spec(spec)
    if report:
        raise ValidationError(report)
    return spec


def check_size(n):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral) or n < 1:
        raise ValueError(f"size must be a positive integer, got {n!r}")
    return int(n)
