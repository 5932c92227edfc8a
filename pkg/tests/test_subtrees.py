import math
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from conftest import context, solved
from cfboltz.errors import SizeTooSmall
from cfboltz.oracle import SubtreeGrammar
from cfboltz.randomness import BitSource
from cfboltz.spec import compute_catalog
from cfboltz.parser import parse_spec
from cfboltz.subtrees import (make_mixture, min_size, offspring_table, sample_subtree_mu0,
                              sample_subtree_neq, tune_shift)


@pytest.mark.parametrize("name, n", [("binary", 101), ("rhv", 1001), ("rhv", 10 ** 5)])
def test_mixture_balanced(name, n):
    spec, solver, crit, catalog, consts = solved(name)
    mix = make_mixture(solver, crit, consts, n)
    assert mix.xi[0] == -mix.xi[1] > 0
    assert mix.pi.sum() == pytest.approx(1, abs=1e-15)
    assert mix.pi_tilde[0] == pytest.approx(mix.pi_tilde[1], rel=1e-13)
    D = 0.5 * (math.exp(mix.f[0]) + math.exp(mix.f[1]))
    assert mix.log_norm == pytest.approx(math.log(D), abs=1e-14)
    # drift: tilting up pushes the mean jump up
    assert mix.f[0] > 0 > mix.f[1]


def test_default_shift_binary():
    spec, solver, crit, catalog, consts = solved("binary")
    assert consts.eps == pytest.approx(math.sqrt(3), rel=1e-12)
    mix = make_mixture(solver, crit, consts, 10001)
    assert mix.shift == pytest.approx(math.sqrt(3) / 100, rel=1e-12)
    assert not mix.clamped


def test_tuning_keeps_binary_default():
    spec, solver, crit, catalog, consts = solved("binary")
    for n in (1001, 10 ** 5):
        assert tune_shift(solver, crit, consts, n) == consts.eps / math.sqrt(n - 1)


def test_tuning_never_lowers_kn():
    from cfboltz.certify import scan_max
    spec, solver, crit, catalog, consts = solved("rhv")
    n = 10 ** 4
    x0 = consts.eps / math.sqrt(n - 1)
    x = tune_shift(solver, crit, consts, n)
    mixes = [make_mixture(solver, crit, consts, n, shift=s) for s in (x0, x)]
    g = [scan_max(n - 1, consts.A0, consts.Aneq, m.shift, m.log_norm) for m in mixes]
    assert g[1] <= g[0]


def test_small_sizes_clamp_or_raise():
    spec, solver, crit, catalog, consts = solved("rhv")
    n0 = min_size(solver, crit, consts)
    assert 1 < n0 < 1000
    make_mixture(solver, crit, consts, n0, clamp=False)
    with pytest.raises(SizeTooSmall):
        make_mixture(solver, crit, consts, 3, clamp=False)
    mix = make_mixture(solver, crit, consts, 3, clamp=True)
    assert mix.clamped and mix.shift < consts.eps / math.sqrt(2)


@pytest.mark.parametrize("name", ["binary", "rhv"])
def test_offspring_rows_normalize(name):
    spec, solver, crit, catalog, consts = solved(name)
    mix = make_mixture(solver, crit, consts, 500)
    table = offspring_table(spec, mix)
    for a in range(2):
        for c in range(len(spec.symbols)):
            s, e = spec.start[c], spec.start[c + 1]
            assert table.probs[a, s:e].sum() == pytest.approx(1, abs=1e-14)
            assert table.lo[a, s] == 0
            assert int(table.hi[a, e - 1]) == 2 ** 64 - 1 or table.hi[a, e - 1] == 0


def test_mu0_single_tree():
    catalog = compute_catalog(parse_spec("A = 2 z + z^2 + A^2;"))
    assert catalog.v0 == 1 and len(catalog.base_trees) == 1
    assert sample_subtree_mu0(catalog, BitSource(0)) == catalog.base_trees[0]


def test_mu0_two_trees():
    spec = parse_spec("A = 2 z + B + A^2;\nB = z + A^2;")
    catalog = compute_catalog(spec)
    assert catalog.v0 == 1 and sorted(catalog.base_weights) == [1, 2]
    bits = BitSource(3)
    freq = Counter(sample_subtree_mu0(catalog, bits).nodes for _ in range(6000))
    exp = {t.nodes: float(w / catalog.T0) * 6000
           for t, w in zip(catalog.base_trees, catalog.base_weights)}
    keys = list(exp)
    _, p = chisquare([freq[k] for k in keys], [exp[k] for k in keys])
    assert p > 0.001


@pytest.mark.parametrize("a", [0, 1])
def test_subtree_law_off_base(a):
    spec, solver, crit, catalog, consts = solved("rhv")
    ctx = context("rhv", 60)
    kern, mix = ctx.kernel, ctx.mix
    z, u, A = mix.z[a], mix.u[a], mix.A[a]
    grammar = SubtreeGrammar(spec, a_leaves=True)
    base = catalog.base_set
    probs = {}
    for s in range(1, 5):
        for t in grammar.enumerate(s):
            st = spec.make_subtree(t)
            if st.nodes in base:
                continue
            probs[st.nodes] = float(spec.weight(t)) * z ** st.v * u ** st.ell / A
    off = 1 - float(catalog.T0) * z ** catalog.v0 / A
    probs = {k: p / off for k, p in probs.items()}
    rest = 1 - sum(probs.values())
    bits = BitSource(11 + a)
    N = 40000
    freq = Counter()
    for _ in range(N):
        end, v, ell = kern.grow_one(bits, a)
        nodes = tuple(int(g) for g in kern.buf[:end])
        freq[nodes if nodes in probs else "rest"] += 1
    keys = list(probs)
    obs = [freq[k] for k in keys] + [freq["rest"]]
    exp = [probs[k] * N for k in keys] + [rest * N]
    _, p = chisquare(obs, exp)
    assert p > 0.001


def test_sample_neq_never_base():
    spec, solver, crit, catalog, consts = solved("binary")
    ctx = context("binary", 101)
    bits = BitSource(5)
    for _ in range(2000):
        st, a = sample_subtree_neq(ctx.kernel, bits)
        assert st.nodes not in catalog.base_set
        assert spec.check_tree(st.nodes, subtree=True)
        assert st.step[1] >= 1 or st.v > catalog.v0
