"""Exact fixed-size samplers for weighted context-free tree classes."""
from .errors import (EmptySizeClass, InvariantBreach, NumericFailure, SizeTooSmall, SpecError,
                     ValidationError)
from .models import builtin_spec
from .parser import parse_spec, render_spec
from .randomness import BitSource
from .spec import ColoredTree, CombinatorialSpec, Subtree, validate_spec
from .validation import check_size, check_spec

__version__ = "0.1.0"

__all__ = [
    "BitSource", "BoltzmannSampler", "ColoredTree", "CombinatorialSpec", "EmptySizeClass",
    "InvariantBreach", "NumericFailure", "SizeTooSmall", "SpecError", "Subtree",
    "ValidationError", "builtin_spec", "check_size", "check_spec", "parse_spec",
    "render_spec", "validate_spec",
]


def __getattr__(name):
    # the estimator pulls in scikit-learn, which is slow to import
    if name == "BoltzmannSampler":
        from .estimator import BoltzmannSampler
        return BoltzmannSampler
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
