"""Seeded bit source with exact bit accounting.

The generator is xoshiro256** (Blackman and Vigna, period 2^256 - 1), with
its four state words taken from the first four outputs of splitmix64 run
from the 64-bit seed. Independent streams use ``split_seed``. This choice
is pinned: changing it changes every sampled output.

Bits are consumed most-significant first from successive 64-bit words.
Every primitive advances the stream by exactly the bits it inspected, and
``bits_consumed`` counts them. The compiled kernels below share the same
state array, so the samplers in other modules draw from the same stream.
"""
import math
from bisect import bisect_right
from fractions import Fraction

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# layout of the state array
_BUF, _NBUF, _USED, _LA, _HASLA = 4, 5, 6, 7, 8
STATE_SIZE = 9

_ONE = np.uint64(1)
_ALL = np.uint64(MASK64)


def splitmix64(x):
    """One splitmix64 step: returns (new_state, output)."""
    x = (x + GOLDEN) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return x, z ^ (z >> 31)


def split_seed(seed, index):
    """Seed of sub-stream ``index``: output index+1 of splitmix64 run from seed."""
    x = int(seed) & MASK64
    out = 0
    for _ in range(int(index) + 1):
        x, out = splitmix64(x)
    return out


@njit(cache=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True)
def next_word(st):
    s0 = st[0]
    s1 = st[1]
    s2 = st[2]
    s3 = st[3]
    result = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    st[0] = s0
    st[1] = s1
    st[2] = s2
    st[3] = s3
    return result


@njit(cache=True)
def peek64(st):
    """Next 64 bits of the stream, without consuming them."""
    nb = st[_NBUF]
    if nb == np.uint64(64):
        return st[_BUF]
    if st[_HASLA] == np.uint64(0):
        st[_LA] = next_word(st)
        st[_HASLA] = _ONE
    if nb == np.uint64(0):
        return st[_LA]
    return st[_BUF] | (st[_LA] >> nb)


@njit(cache=True)
def advance(st, j):
    """Consume j bits (0 <= j <= 64)."""
    if j <= 0:
        return
    st[_USED] += np.uint64(j)
    nb = np.int64(st[_NBUF])
    if j <= nb:
        if j == 64:
            st[_BUF] = np.uint64(0)
        else:
            st[_BUF] = st[_BUF] << np.uint64(j)
        st[_NBUF] = np.uint64(nb - j)
    else:
        if st[_HASLA] == np.uint64(0):
            st[_LA] = next_word(st)
        st[_HASLA] = np.uint64(0)
        d = j - nb
        if d == 64:
            st[_BUF] = np.uint64(0)
        else:
            st[_BUF] = st[_LA] << np.uint64(d)
        st[_NBUF] = np.uint64(64 - d)


@njit(cache=True)
def take(st, j):
    """Consume j bits (0 <= j <= 64) and return them as an integer."""
    if j <= 0:
        return np.uint64(0)
    w = peek64(st)
    advance(st, j)
    if j == 64:
        return w
    return w >> np.uint64(64 - j)


@njit(cache=True)
def clz(x):
    if x == np.uint64(0):
        return 64
    n = 0
    if x <= np.uint64(0x00000000FFFFFFFF):
        n += 32
        x = x << np.uint64(32)
    if x <= np.uint64(0x0000FFFFFFFFFFFF):
        n += 16
        x = x << np.uint64(16)
    if x <= np.uint64(0x00FFFFFFFFFFFFFF):
        n += 8
        x = x << np.uint64(8)
    if x <= np.uint64(0x0FFFFFFFFFFFFFFF):
        n += 4
        x = x << np.uint64(4)
    if x <= np.uint64(0x3FFFFFFFFFFFFFFF):
        n += 2
        x = x << np.uint64(2)
    if x <= np.uint64(0x7FFFFFFFFFFFFFFF):
        n += 1
    return n


@njit(cache=True)
def last_one(x):
    """1-based position (from the top) of the lowest set bit; 0 if x == 0."""
    if x == np.uint64(0):
        return 0
    low = x & (~x + _ONE)
    return clz(low) + 1


@njit(cache=True)
def bernoulli_kernel(st, P, last, rem, den):
    """Lazy comparison of the stream with the binary expansion of p.

    P holds the first 64 bits of p and ``last`` the position of its lowest
    set bit. If den == 0 the expansion stops after P; otherwise it goes on
    as the expansion of rem/den.
    """
    U = peek64(st)
    x = U ^ P
    if x != np.uint64(0):
        j = clz(x) + 1
        if den == 0 and last < j:
            advance(st, last)
            return False
        advance(st, j)
        return U < P
    if den == 0:
        advance(st, last)
        return False
    advance(st, 64)
    while True:
        rem *= 2
        pb = 0
        if rem >= den:
            pb = 1
            rem -= den
        ub = np.int64(take(st, 1))
        if ub != pb:
            return ub < pb
        if rem == 0:
            return False


@njit(cache=True)
def bitlen(n):
    k = 0
    while n > 0:
        k += 1
        n >>= 1
    return k


@njit(cache=True)
def uniform_kernel(st, n):
    if n <= 1:
        return 0
    k = bitlen(n - 1)
    while True:
        v = np.int64(take(st, k))
        if v < n:
            return v


@njit(cache=True)
def bins_kernel(st, lo, hi, start, stop):
    """Pick a bin in [start, stop) by lazy interval refinement.

    Bin i covers the 64-bit integers lo[i]..hi[i]; consecutive bins tile
    the whole range. Only the bits needed to pin the bin are consumed.
    """
    U = peek64(st)
    i = start
    while i < stop - 1 and U > hi[i]:
        i += 1
    L = lo[i]
    R = hi[i]
    j1 = 0
    if L != np.uint64(0):
        t = last_one(L)
        x = U ^ L
        if x == np.uint64(0):
            j1 = t
        else:
            p = clz(x) + 1
            j1 = p if p < t else t
    j2 = 0
    if R != _ALL:
        t = last_one(~R)
        x = U ^ R
        if x == np.uint64(0):
            j2 = t
        else:
            q = clz(x) + 1
            j2 = q if q < t else t
    advance(st, j1 if j1 > j2 else j2)
    return i


def expansion(p):
    """(P, last, rem, den) describing p in [0, 1) for ``bernoulli_kernel``.

    Exact for rationals with denominator below 2^62; floats are truncated
    to 64 bits (bias at most 2^-64).
    """
    if isinstance(p, (int, Fraction)):
        p = Fraction(p)
        a, b = p.numerator, p.denominator
        P, r = divmod(a << 64, b)
        if r and b >= (1 << 62):
            raise ValueError("denominator too large for the compiled path")
        rem, den = (r, b) if r else (0, 0)
    else:
        P = int(Fraction(float(p)) * (1 << 64))
        rem, den = 0, 0
    P = np.uint64(P)
    return P, int(last_one(P)), rem, den


def thresholds(weights):
    """Integer cut points tiling [0, 2^64) proportionally to float weights.

    Every positive weight gets at least one unit and the rounding residual
    goes to the largest entry, so the bins sum to 2^64 exactly.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    units = [max(1, int(round(x * 2.0 ** 64))) for x in w / w.sum()]
    units[int(np.argmax(w))] += (1 << 64) - sum(units)
    lo, hi, acc = [], [], 0
    for u in units:
        lo.append(acc)
        acc += u
        hi.append(acc - 1)
    return np.array(lo, dtype=np.uint64), np.array(hi, dtype=np.uint64)


class BitSource:
    """Deterministic random bit stream with a consumption counter."""

    def __init__(self, seed=0):
        self.seed = int(seed) & MASK64
        self.state = np.zeros(STATE_SIZE, dtype=np.uint64)
        x = self.seed
        for i in range(4):
            x, out = splitmix64(x)
            self.state[i] = out

    @property
    def bits_consumed(self):
        return int(self.state[_USED])

    def spawn(self, index):
        return BitSource(split_seed(self.seed, index))

    def bits(self, k):
        """k fresh bits as a non-negative integer."""
        out = 0
        while k > 0:
            j = min(k, 64)
            out = (out << j) | int(take(self.state, j))
            k -= j
        return out

    def bernoulli(self, p):
        if p >= 1:
            return True
        if p <= 0:
            return False
        if isinstance(p, Fraction) and p.denominator >= (1 << 62):
            return self._bernoulli_big(p)
        P, last, rem, den = expansion(p)
        return bool(bernoulli_kernel(self.state, P, last, rem, den))

    def _bernoulli_big(self, p):
        rem, den = p.numerator, p.denominator
        while True:
            rem *= 2
            pb = 1 if rem >= den else 0
            rem -= pb * den
            ub = self.bits(1)
            if ub != pb:
                return ub < pb
            if rem == 0:
                return False

    def uniform_below(self, n):
        n = int(n)
        if n < (1 << 62):
            return int(uniform_kernel(self.state, n))
        k = (n - 1).bit_length()
        while True:
            v = self.bits(k)
            if v < n:
                return v

    def discrete(self, weights):
        """Index i with probability w_i / sum(w).

        Integer and Fraction weights are sampled exactly; floats go through
        64-bit cut points.
        """
        if all(isinstance(w, (int, Fraction)) for w in weights):
            return self._discrete_exact(weights)
        lo, hi = thresholds(weights)
        return int(bins_kernel(self.state, lo, hi, 0, len(lo)))

    def _discrete_exact(self, weights):
        ws = [Fraction(w) for w in weights]
        if any(w < 0 for w in ws) or sum(ws) <= 0:
            raise ValueError("weights must be nonnegative with positive sum")
        den = math.lcm(*(w.denominator for w in ws))
        ints = [int(w * den) for w in ws]
        cum = [0]
        for w in ints:
            cum.append(cum[-1] + w)
        total = cum[-1]
        x, j = 0, 0
        while True:
            x = 2 * x + self.bits(1)
            j += 1
            # dyadic interval [x, x+1) / 2^j, scaled by total
            lo = Fraction(x * total, 1 << j)
            i = bisect_right(cum, lo) - 1
            if i < len(ints) and cum[i + 1] << j >= (x + 1) * total:
                return i
