"""One test per acceptance criterion, at the stated tolerances."""
import math
import subprocess
import sys
import time
from collections import Counter
from itertools import combinations

import mpmath
import numpy as np
import pytest
from scipy.stats import chisquare

from conftest import context, solved
from cfboltz.bridge import sample_structure
from cfboltz.certify import c_bounds, robbins_holds, robbins_log_factorial, scan_max
from cfboltz.critical import frobenius_eigenvalue
from cfboltz.models import builtin_spec
from cfboltz.oracle import class_probabilities, enumerate_structures
from cfboltz.randomness import BitSource
from cfboltz.shuffle import assemble_tree, bbhl_shuffle, cyc, decompose, is_excursion
from cfboltz.toy import ToySampler

ALPHA = 0.001


def test_1_rhv_critical_values():
    t0 = time.perf_counter()
    out = subprocess.run(["cfboltz", "critical", "--model", "rhv"], capture_output=True,
                         text=True, check=True).stdout
    elapsed = time.perf_counter() - t0
    vals = dict(line.split() for line in out.splitlines())
    assert abs(float(vals["z*"]) - 0.1868943725) < 1e-8
    assert abs(float(vals["R*"]) - 0.3945155166) < 1e-8
    assert abs(float(vals["H*"]) - 0.3028172374) < 1e-8
    assert abs(float(vals["V*"]) - 0.3028172374) < 1e-8
    assert elapsed < 1.0


@pytest.mark.parametrize("name", ["binary", "rhv"])
def test_2_characteristic_system(name):
    spec, solver, crit, catalog, consts = solved(name)
    _, A = solver.solve_reduced(crit.zeta, crit.theta)
    assert abs(A / crit.theta - 1) <= 1e-9
    lam, v = frobenius_eigenvalue(solver.ps.jacobian(crit.zeta, crit.tau))
    assert abs(lam - 1) <= 1e-8 and np.all(v > 0)


def test_3_toy_calibration():
    sampler = ToySampler(4096)
    bits = BitSource(2024)
    for _ in range(10 ** 4):
        sampler.sample(bits)
    st = sampler.stats
    assert st.accepted == 10 ** 4
    assert abs(st.tries / math.sqrt(8 / 3) - 1) <= 0.05
    assert abs(st.mean_r / math.sqrt(2 / 3) - 1) <= 0.03
    big = ToySampler(10 ** 4)
    for _ in range(4000):
        big.sample(bits)
    assert abs(big.stats.reach - 0.75) <= 0.01


CASES_4 = [("binary", 4), ("binary", 6), ("binary", 8), ("rhv", 3), ("rhv", 4), ("rhv", 5)]


@pytest.mark.parametrize("name, n", CASES_4)
def test_4_exactness(name, n):
    spec = builtin_spec(name)
    probs = class_probabilities(spec, n)
    reps = 1000 * len(probs)
    ctx = context(name, n)
    assert ctx.plan is not None          # the accelerated path, not the oracle
    bits = BitSource(1000 + n)
    freq = Counter(sample_structure(ctx, bits).nodes for _ in range(reps))
    assert set(freq) <= set(probs)
    keys = list(probs)
    _, p = chisquare([freq[k] for k in keys], [float(probs[k]) * reps for k in keys])
    assert p >= ALPHA


def test_5_certification():
    spec, solver, crit, catalog, consts = solved("binary")
    lead = math.sqrt(2 * math.pi * math.e ** 3 * consts.A0 * consts.Aneq / consts.vbar ** 3)
    for n in (10 ** 3, 10 ** 4, 10 ** 5):
        ctx = context("binary", n)
        plan = ctx.plan
        # the scanned supremum of ln r stays below zero
        assert plan.log_Kn + scan_max(n - 1, consts.A0, consts.Aneq, plan.xi,
                                      plan.log_norm) <= 0
        ratio = math.exp(plan.log_Kn) / n ** 1.5
        assert abs(ratio / (math.exp(-plan.log_C) * lead) - 1) <= 0.2
        # sampling raises InvariantBreach if any landed walk had logR + err > 0
        bits = BitSource(n)
        for _ in range(50 if n < 10 ** 5 else 10):
            sample_structure(ctx, bits)
        assert ctx.stats.accepted > 0


def test_6_linear_time():
    times, restarts = [], []
    for n, reps in ((10 ** 3, 1000), (10 ** 4, 300), (10 ** 5, 100)):
        ctx = context("rhv", n)
        bits = BitSource(6)
        sample_structure(ctx, bits)
        a0 = ctx.stats.attempts
        t0 = time.perf_counter()
        for _ in range(reps):
            sample_structure(ctx, bits)
        times.append((time.perf_counter() - t0) / reps)
        restarts.append((ctx.stats.attempts - a0) / reps)
    for a, b in zip(times, times[1:]):
        assert 7 <= b / a <= 15
    assert max(restarts) / min(restarts) < 2


def _irreducible(M):
    n = len(M)
    R = np.linalg.matrix_power(np.eye(n) + (M > 0), n - 1)
    return bool(np.all(R > 0))


def test_7_property_suites():
    rng = np.random.default_rng(7)
    # cyclic lemma: exactly one rotation is an excursion, and cyc finds it
    for _ in range(10 ** 4):
        ups = rng.integers(0, 4, size=rng.integers(0, 10))
        ords = list(ups) + [-1] * (int(ups.sum()) + 1)
        rng.shuffle(ords)
        steps = [(int(rng.integers(0, 3)), int(d)) for d in ords]
        good = [j for j in range(len(steps)) if is_excursion(steps[j:] + steps[:j])]
        assert good == [cyc(steps)]
    # assemble o decompose on every enumerated tree
    for name, top in (("binary", 6), ("rhv", 4)):
        spec = builtin_spec(name)
        for n in range(1, top + 1):
            for t, _ in enumerate_structures(spec, n):
                assert assemble_tree(spec, decompose(spec, t.nodes)).nodes == t.nodes
    # BBHL shuffle at (3, 3) against all 20 words
    bits = BitSource(33)
    reps = 20000
    freq = Counter(tuple(bbhl_shuffle(3, 3, bits).tolist()) for _ in range(reps))
    words = [tuple(1 if i in c else 0 for i in range(6)) for c in combinations(range(6), 3)]
    assert set(freq) <= set(words)
    assert chisquare([freq[w] for w in words]).pvalue >= ALPHA
    # Frobenius eigenvalue increases with the first column
    done = 0
    while done < 50:
        n = int(rng.integers(3, 7))
        M = rng.random((n, n)) * (rng.random((n, n)) < 0.7)
        if not _irreducible(M):
            continue
        x, x2 = sorted(rng.uniform(0.1, 3.0, size=2))
        lo, hi = M.copy(), M.copy()
        lo[:, 0] *= x
        hi[:, 0] *= x2
        assert frobenius_eigenvalue(hi)[0] > frobenius_eigenvalue(lo)[0]
        done += 1
    # Robbins inequality on 1..10^4, 10^5, 10^6
    grid = list(range(1, 10 ** 4 + 1)) + [10 ** 5, 10 ** 6]
    assert all(robbins_holds(n) for n in grid)
    mpmath.mp.dps = 30
    for n in grid[::97] + [10 ** 5, 10 ** 6]:
        lo, hi = robbins_log_factorial(n)
        exact = mpmath.loggamma(n + 1)
        assert lo <= exact <= hi
    # c(x) = s tanh s - ln cosh s, s = sqrt(x), between its rational bounds
    mpmath.mp.dps = 40
    for e in range(-20, 11):
        x = mpmath.mpf(2) ** e
        s = mpmath.sqrt(x)
        c = s * mpmath.tanh(s) - mpmath.log(mpmath.cosh(s))
        lo, hi = c_bounds(x)
        assert lo <= c <= hi


def test_8_reproducibility():
    argv = ["cfboltz", "sample", "--model", "rhv", "-n", "500", "-c", "20", "--seed", "99"]
    runs = [subprocess.run(argv, capture_output=True, check=True).stdout for _ in range(2)]
    assert runs[0] == runs[1] and len(runs[0].splitlines()) == 20
    toy = ["cfboltz", "sample", "--model", "toy", "-n", "300", "-c", "20", "--seed", "5"]
    runs = [subprocess.run(toy, capture_output=True, check=True).stdout for _ in range(2)]
    assert runs[0] == runs[1]
