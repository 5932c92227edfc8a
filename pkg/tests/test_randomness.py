from collections import Counter
from fractions import Fraction

import numpy as np
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from cfboltz.randomness import BitSource, split_seed


def test_same_seed_same_stream():
    a, b = BitSource(123), BitSource(123)
    assert [a.bits(64) for _ in range(5)] == [b.bits(64) for _ in range(5)]
    assert BitSource(124).bits(64) != BitSource(123).bits(64)


def test_split_seeds_differ():
    seeds = {split_seed(7, i) for i in range(100)}
    assert len(seeds) == 100


def test_fair_coin_uses_one_bit():
    b = BitSource(1)
    for _ in range(1000):
        b.bernoulli(Fraction(1, 2))
    assert b.bits_consumed == 1000


def test_third_costs_two_bits_on_average():
    b = BitSource(2)
    hits = sum(b.bernoulli(Fraction(1, 3)) for _ in range(100000))
    assert abs(b.bits_consumed / 100000 - 2) < 0.05
    assert abs(hits / 100000 - 1 / 3) < 0.005


def test_zero_probability_never_fires():
    b = BitSource(3)
    assert not any(b.bernoulli(0) for _ in range(10000))
    assert all(b.bernoulli(1) for _ in range(100))


def test_uniform_below():
    b = BitSource(4)
    assert b.uniform_below(1) == 0 and b.bits_consumed == 0
    draws = [b.uniform_below(3) for _ in range(100000)]
    assert abs(b.bits_consumed / 100000 - 8 / 3) < 0.05
    c = Counter(draws)
    assert chisquare([c[i] for i in range(3)]).pvalue > 0.001
    two = Counter(b.uniform_below(2) for _ in range(20000))
    assert chisquare([two[0], two[1]]).pvalue > 0.001


def test_discrete_ratio_and_cost():
    b = BitSource(5)
    c = Counter(b.discrete([2, 1]) for _ in range(100000))
    assert chisquare([c[0], c[1]], [200000 / 3, 100000 / 3]).pvalue > 0.001
    b = BitSource(6)
    for _ in range(10000):
        b.discrete([1, 1])
    assert b.bits_consumed == 10000


def test_discrete_float_weights():
    b = BitSource(8)
    w = [0.5, 0.3, 0.2]
    c = Counter(b.discrete(w) for _ in range(50000))
    assert chisquare([c[i] for i in range(3)], [x * 50000 for x in w]).pvalue > 0.001


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 2 ** 40), st.integers(0, 2 ** 64 - 1))
def test_uniform_below_range(n, seed):
    b = BitSource(seed)
    for _ in range(5):
        assert 0 <= b.uniform_below(n) < n


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 64), st.integers(0, 2 ** 64 - 1))
def test_bits_width(k, seed):
    b = BitSource(seed)
    x = b.bits(k)
    assert 0 <= x < 2 ** k and b.bits_consumed == k


def test_bit_split_consistency():
    # reading 64 bits at once or one at a time gives the same word
    a, b = BitSource(9), BitSource(9)
    whole = a.bits(64)
    pieces = 0
    for _ in range(64):
        pieces = 2 * pieces + b.bits(1)
    assert whole == pieces
    assert np.uint64(whole) == np.uint64(pieces)
