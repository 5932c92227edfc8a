"""Builtin specifications."""
from .parser import parse_spec

BINARY = "A = z + A^2;"

# rectangle subdivisions: R splits freely, H (V) came from a horizontal
# (vertical) split and may not be split the same way again
RHV = """
R = z + H^2 + V^2 + R^4;
H = z + V^2 + R^4;
V = z + H^2 + R^4;
"""

BUILTIN = {"binary": BINARY, "rhv": RHV}


def builtin_spec(name):
    if name not in BUILTIN:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(BUILTIN)} or toy")
    return parse_spec(BUILTIN[name])
