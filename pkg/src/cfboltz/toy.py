"""The (1/4, 1/2, 1/4) bridge model: naive and accelerated exact samplers.

A bridge of half-length n is a word of n steps in {-1, 0, +1} summing to
zero, drawn with probability proportional to 2^(number of zero steps).

The accelerated sampler walks with steps 0 / +1 (probabilities 2/3, 1/3)
until u = steps + pluses reaches n, keeps a landing with m pluses with
probability r_n(m) = c(m) / c(m*), c(m) = 3^(n-m) binom(n, m), and then
interleaves the n - m walk steps with m down steps by a balanced shuffle.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np
from numba import njit

from .randomness import bernoulli_kernel, expansion, take
from .shuffle import bbhl_kernel

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)
LOG3 = math.log(3.0)
TWO64 = 18446744073709551616.0

OK, OVERSHOOT, UNDECIDED = 0, 1, 2


@dataclass(frozen=True)
class ToyBridge:
    n: int
    steps: tuple

    @property
    def counts(self):
        up = sum(1 for s in self.steps if s == 1)
        down = sum(1 for s in self.steps if s == -1)
        return up, len(self.steps) - up - down, down

    @property
    def weight(self):
        return 2 ** self.counts[1]

    def check(self):
        if len(self.steps) != self.n or sum(self.steps) != 0:
            raise ValueError("not a bridge")
        if any(s not in (-1, 0, 1) for s in self.steps):
            raise ValueError("steps must be -1, 0 or +1")


@dataclass
class ToyStats:
    attempts: int = 0
    landed: int = 0
    r_sum: float = 0.0
    accepted: int = 0
    escalated: int = 0

    @property
    def reach(self):
        return self.landed / self.attempts if self.attempts else float("nan")

    @property
    def mean_r(self):
        return self.r_sum / self.landed if self.landed else float("nan")

    @property
    def tries(self):
        return self.attempts / self.accepted if self.accepted else float("nan")


def m_star(n):
    """Argmax of c(m) = 3^(n-m) binom(n, m) over m >= 0."""
    return max(0, -((3 - n) // 4))


# ---------------------------------------------------------------- naive

@njit(cache=True)
def _naive_kernel(st, n, out):
    tries = 0
    while True:
        tries += 1
        s = 0
        for i in range(n):
            if take(st, 1) == np.uint64(0):
                out[i] = 0
            elif take(st, 1) == np.uint64(0):
                out[i] = 1
                s += 1
            else:
                out[i] = -1
                s -= 1
        if s == 0:
            return tries


def toy_naive(n, bits, stats=None):
    """Draw i.i.d. steps until the sum vanishes."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = np.zeros(n, dtype=np.int64)
    tries = _naive_kernel(bits.state, n, out)
    if stats is not None:
        stats.attempts += int(tries)
        stats.accepted += 1
    return ToyBridge(n, tuple(int(x) for x in out))


# ---------------------------------------------------------- accelerated

@njit(cache=True)
def _log_fact_bounds(k):
    if k < 2:
        return 0.0, 0.0
    x = float(k)
    s = HALF_LOG_2PI + (x + 0.5) * math.log(x) - x
    pad = 4e-16 * (abs(s) + 1.0)
    return s + 1.0 / (12.0 * x + 1.0) - pad, s + 1.0 / (12.0 * x) + pad


@njit(cache=True)
def log_r_bounds(n, m, ms):
    """Interval for ln r_n(m) from the Robbins bounds."""
    a_lo, a_hi = _log_fact_bounds(ms)
    b_lo, b_hi = _log_fact_bounds(n - ms)
    c_lo, c_hi = _log_fact_bounds(m)
    d_lo, d_hi = _log_fact_bounds(n - m)
    base = (ms - m) * LOG3
    pad = 4e-16 * (abs(base) + 1.0)
    lo = base + a_lo + b_lo - c_hi - d_hi - pad
    hi = base + a_hi + b_hi - c_lo - d_lo + pad
    if hi > 0.0:
        hi = 0.0
    return lo, hi


@njit(cache=True)
def _accel_kernel(st, n, ms, P, last, rem, den, walk, stats, res):
    """Walk and test until acceptance or an undecided test.

    walk[:n-m] receives the 0/+1 letters; res = (m, U prefix >> 1, U & 1).
    """
    while True:
        stats[0] += 1
        u = 0
        m = 0
        t = 0
        while u < n:
            if bernoulli_kernel(st, P, last, rem, den):
                walk[t] = 1
                u += 2
                m += 1
            else:
                walk[t] = 0
                u += 1
            t += 1
        if u != n:
            continue
        stats[1] += 1
        lo, hi = log_r_bounds(n, m, ms)
        stats[2] += math.exp(0.5 * (lo + hi))
        res[0] = m
        if m == ms:
            stats[3] += 1
            return OK
        x = take(st, 64)
        res[1] = np.int64(x >> np.uint64(1))
        res[2] = np.int64(x & np.uint64(1))
        ulo = math.log(float(x) / TWO64) if x > np.uint64(0) else -np.inf
        uhi = math.log((float(x) + 1.0) / TWO64)
        pad = 1e-15 * (1.0 + abs(uhi))
        if uhi + pad <= lo:
            stats[3] += 1
            return OK
        if not (ulo - pad >= hi):
            stats[4] += 1
            return UNDECIDED


def exact_r(n, m, ms=None):
    """r_n(m) as a Fraction, via the Pochhammer ratio between m and m*."""
    if ms is None:
        ms = m_star(n)
    r = Fraction(3) ** (ms - m)
    # m*! / m!  and  (n - m*)! / (n - m)!
    if ms >= m:
        r *= math.prod(range(m + 1, ms + 1))
        r /= math.prod(range(n - ms + 1, n - m + 1))
    else:
        r /= math.prod(range(ms + 1, m + 1))
        r *= math.prod(range(n - m + 1, n - ms + 1))
    return r


def _compare_exact(bits, prefix, r):
    """Extend the 64-bit prefix with fresh bits until U < r is decided."""
    num, j = prefix, 64
    while True:
        lo = Fraction(num, 1 << j)
        hi = Fraction(num + 1, 1 << j)
        if hi <= r:
            return True
        if lo >= r:
            return False
        num = 2 * num + bits.bits(1)
        j += 1


class ToySampler:
    """Reusable accelerated sampler for one n, with running statistics."""

    def __init__(self, n):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.ms = m_star(n)
        self.P, self.last, self.rem, self.den = expansion(Fraction(1, 3))
        self.stat_arr = np.zeros(5, dtype=np.float64)
        self.res = np.zeros(3, dtype=np.int64)
        self.out01 = np.zeros(n, dtype=np.int8)
        self.walk = np.zeros(n, dtype=np.int64)
        self.stats = ToyStats()

    def _sync(self):
        a = self.stat_arr
        s = self.stats
        s.attempts, s.landed = int(a[0]), int(a[1])
        s.r_sum, s.accepted, s.escalated = float(a[2]), int(a[3]), int(a[4])

    def sample(self, bits):
        """One bridge drawn exactly from the 2^(zeros) measure."""
        n, ms = self.n, self.ms
        while True:
            status = _accel_kernel(bits.state, n, ms, self.P, self.last, self.rem, self.den,
                                   self.walk, self.stat_arr, self.res)
            m = int(self.res[0])
            if status == OK:
                break
            prefix = (int(self.res[1]) << 1) | int(self.res[2])
            if _compare_exact(bits, prefix, exact_r(n, m, ms)):
                self.stat_arr[3] += 1
                break
        self._sync()
        bbhl_kernel(bits.state, n - m, m, self.out01)
        steps = np.where(self.out01 == 1, 0, -1).astype(np.int64)
        steps[self.out01 == 1] = self.walk[:n - m]
        return ToyBridge(n, tuple(int(x) for x in steps))


def toy_accelerated(n, bits, sampler=None):
    """One accelerated draw; pass a ToySampler to reuse tables and keep stats."""
    if sampler is None or sampler.n != n:
        sampler = ToySampler(n)
    return sampler.sample(bits)


def toy_devroye(n, bits):
    """Direct sampling of the number of up steps; not provided."""
    raise NotImplementedError("direct sampling of m is not implemented")


# -------------------------------------------------------------- oracles

def toy_probabilities(n):
    """Exact law of every bridge of half-length n, by enumeration."""
    from itertools import product

    total = comb(2 * n, n)
    out = {}
    for w in product((-1, 0, 1), repeat=n):
        if sum(w) == 0:
            out[w] = Fraction(2 ** w.count(0), total)
    return out


def reach_probability(n):
    """Probability that the 0/+1 walk hits u = n exactly."""
    return (3 + Fraction(-3) ** (-n)) / 4


def expected_r(n):
    """E(r_n(m)) given a landing, summed exactly over m."""
    ms = m_star(n)
    num = sum(comb(n - m, m) * Fraction(2 ** (n - 2 * m), 3 ** (n - m)) * exact_r(n, m, ms)
              for m in range(n // 2 + 1))
    return num / reach_probability(n)


def expected_r_closed(n):
    """Same quantity from the closed form of the numerator."""
    ms = m_star(n)
    num = Fraction(math.factorial(2 * n) * math.factorial(ms) * math.factorial(n - ms),
                   math.factorial(n) ** 3) * Fraction(3) ** (ms - n)
    return num / reach_probability(n)
