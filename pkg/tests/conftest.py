from functools import lru_cache

import pytest

from cfboltz.bridge import build_context
from cfboltz.critical import CriticalSolver, derived_constants
from cfboltz.models import builtin_spec
from cfboltz.spec import compute_catalog


@lru_cache(maxsize=None)
def solved(name):
    spec = builtin_spec(name)
    solver = CriticalSolver(spec)
    crit = solver.solve_characteristic()
    catalog = compute_catalog(spec)
    consts = derived_constants(solver, crit, catalog)
    return spec, solver, crit, catalog, consts


@lru_cache(maxsize=None)
def context(name, n, clamp=True, tune=True):
    spec, solver, crit, catalog, consts = solved(name)
    return build_context(spec, n, solver, crit, consts, catalog, clamp=clamp, tune=tune)


@pytest.fixture
def binary():
    return solved("binary")


@pytest.fixture
def rhv():
    return solved("rhv")
