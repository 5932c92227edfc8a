import math

import numpy as np
from hypothesis import given, settings, strategies as st

from cfboltz.critical import CriticalSolver, drift, frobenius_eigenvalue, spectral_radius
from cfboltz.parser import parse_spec

from conftest import solved

# reference values from an independent 40-digit root find of the full
# characteristic system (mpmath.findroot on Y = Phi(z, Y), det(I - K) = 0)
RHV_Z = 0.1868943725402038464
RHV_R = 0.3945155165912775490
RHV_H = 0.3028172373531086241
RHV_A0 = 0.4737313608220598565
RHV_ANEQ = 0.5262686391779401435
RHV_VBAR = 1.9287674908164219534
RHV_F_PLUS = 0.0373744478206110860
RHV_F_MINUS = -0.0359813555746761737


def test_binary_critical_point():
    spec, solver, crit, cat, d = solved("binary")
    assert abs(crit.zeta - 0.25) < 1e-12 and abs(crit.theta - 0.5) < 1e-12
    assert abs(d.A0 - 0.5) < 1e-12 and abs(d.Aneq - 0.5) < 1e-12
    assert abs(d.vbar - 0.5) < 1e-9 and abs(d.eps - math.sqrt(3)) < 1e-8
    assert abs(d.kappa - 1) < 1e-8 and abs(d.reach_prob - 1) < 1e-8


def test_rhv_critical_point():
    spec, solver, crit, cat, d = solved("rhv")
    assert abs(crit.zeta - RHV_Z) < 1e-11
    assert np.allclose(crit.tau, [RHV_R, RHV_H, RHV_H], atol=1e-11, rtol=0)
    assert abs(d.A0 - RHV_A0) < 1e-11 and abs(d.Aneq - RHV_ANEQ) < 1e-11
    assert abs(d.vbar - RHV_VBAR) < 1e-9
    assert abs(d.eps - math.sqrt(3 * RHV_ANEQ / RHV_VBAR)) < 1e-9


def test_drift():
    spec, solver, crit, cat, d = solved("binary")
    assert drift(solver, crit, d, 0.0) == 0.0
    closed = math.log((math.exp(-0.01) * (0.25 * math.exp(0.01) + 0.25 * math.exp(0.02)) / 0.5
                       - 0.5) / 0.5)
    assert abs(drift(solver, crit, d, 0.01) - closed) < 1e-12
    spec, solver, crit, cat, d = solved("rhv")
    assert abs(drift(solver, crit, d, 0.01) - RHV_F_PLUS) < 1e-11
    assert abs(drift(solver, crit, d, -0.01) - RHV_F_MINUS) < 1e-11


def test_drift_slope_is_mean_step():
    spec, solver, crit, cat, d = solved("rhv")
    h = 1e-5
    slope = (drift(solver, crit, d, h) - drift(solver, crit, d, -h)) / (2 * h)
    assert abs(slope - d.vbar / d.Aneq) < 1e-6


def test_frobenius_small():
    lam, v = frobenius_eigenvalue(np.ones((2, 2)))
    assert abs(lam - 2) < 1e-12 and np.allclose(v / v[0], [1, 1])


def test_reduced_system_matches_full():
    spec, solver, crit, cat, d = solved("rhv")
    Y, A = solver.solve_reduced(crit.zeta * 0.9, crit.theta * 0.9)
    z, u = crit.zeta * 0.9, crit.theta * 0.9
    H, V = Y
    assert abs(H - (z + V ** 2 + u ** 4)) < 1e-13 and abs(V - (z + H ** 2 + u ** 4)) < 1e-13
    assert abs(A - (z + H ** 2 + V ** 2 + u ** 4)) < 1e-13


def test_weighted_binary():
    # A = z + 2 A^2 has rho = 1/8, tau = 1/4
    spec = parse_spec("A = z + 2 A^2;")
    crit = CriticalSolver(spec).solve_characteristic()
    assert abs(crit.zeta - 0.125) < 1e-12 and abs(crit.theta - 0.25) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_frobenius_matches_eigvals(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.random((n, n)) + 0.01
    lam, v = frobenius_eigenvalue(M)
    assert abs(lam - spectral_radius(M)) < 1e-9 * max(1, lam)
    assert np.all(v > 0)
    assert np.allclose(M @ v, lam * v, atol=1e-9 * lam)
