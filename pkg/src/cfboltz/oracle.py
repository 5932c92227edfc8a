"""Exact counting, recursive-method sampling and brute-force enumeration.

Everything here uses exact integers or Fractions. This is the ground
truth the accelerated sampler is checked against.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

from .errors import CapExceeded, EmptySizeClass
from .spec import ColoredTree


class Grammar:
    """Counting engine over a family of node types.

    Each node type is a monomial id with a size contribution and a tuple
    of expanded child colors. Series coefficients are computed by size
    induction; within a size the (nilpotent) linear dependencies are
    resolved by a bounded number of sweeps.
    """

    def __init__(self, spec, allowed, children, sizes, unweighted=False):
        self.spec = spec
        self.ncolors = len(spec.symbols)
        self.ids = [[g for g in spec.monomial_ids(c) if allowed[g]] for c in range(self.ncolors)]
        self.children = children
        self.sizes = sizes
        if unweighted:
            self.coef = [1] * spec.n_monomials
        elif all(c.denominator == 1 for c in spec.coef):
            self.coef = [int(c) for c in spec.coef]
        else:
            self.coef = list(spec.coef)
        self.Y = [[0] for _ in range(self.ncolors)]
        # S[g][i][n]: coefficient of the product of the series of children i.. of g
        self.S = {g: [[0] for _ in children[g]] for c in range(self.ncolors) for g in self.ids[c]}
        self.N = 0

    def extend(self, N):
        Y, S = self.Y, self.S
        for n in range(self.N + 1, N + 1):
            for g, rows in S.items():
                ch = self.children[g]
                r = len(ch)
                for i in range(r - 1):
                    ya, nxt = Y[ch[i]], rows[i + 1]
                    rows[i].append(sum(ya[a] * nxt[n - a] for a in range(1, n)))
                if r:
                    rows[r - 1].append(0)
            nonlinear = [0] * self.ncolors
            linear = []
            for c in range(self.ncolors):
                for g in self.ids[c]:
                    t = n - self.sizes[g]
                    ch = self.children[g]
                    if t < 0:
                        continue
                    if not ch:
                        if t == 0:
                            nonlinear[c] += self.coef[g]
                    elif t == n and len(ch) == 1:
                        linear.append((c, ch[0], self.coef[g]))
                    else:
                        nonlinear[c] += self.coef[g] * S[g][0][t]
            cur = list(nonlinear)
            for _ in range(self.ncolors + 1):
                nxt = list(nonlinear)
                for c, b, w in linear:
                    nxt[c] += w * cur[b]
                cur = nxt
            for c in range(self.ncolors):
                Y[c].append(cur[c])
            for g, rows in S.items():
                ch = self.children[g]
                if ch:
                    rows[-1][n] = Y[ch[-1]][n]
        self.N = max(self.N, N)
        return self

    def count(self, n, color=0):
        self.extend(n)
        return self.Y[color][n]

    def _product(self, g, t):
        if t < 0:
            return 0
        if not self.children[g]:
            return 1 if t == 0 else 0
        return self.S[g][0][t]

    def sample(self, n, bits, color=0):
        """Node tuple drawn with probability weight / count, exactly."""
        self.extend(n)
        if self.Y[color][n] == 0:
            raise EmptySizeClass(f"no structure of size {n}")
        out = []
        stack = [(color, n)]
        while stack:
            c, s = stack.pop()
            gs = self.ids[c]
            w = [self.coef[g] * self._product(g, s - self.sizes[g]) for g in gs]
            g = gs[bits.discrete(w)]
            out.append(g)
            ch = self.children[g]
            rest = s - self.sizes[g]
            parts = []
            for i in range(len(ch) - 1):
                yi, nxt = self.Y[ch[i]], self.S[g][i + 1]
                a = 1 + bits.discrete([yi[a] * nxt[rest - a] for a in range(1, rest)])
                parts.append(a)
                rest -= a
            if ch:
                parts.append(rest)
            for item in reversed(list(zip(ch, parts))):
                stack.append(item)
        return tuple(out)

    def enumerate(self, n, color=0):
        """All node tuples of the given size, each exactly once."""
        self.extend(n)

        @lru_cache(maxsize=None)
        def trees(c, s):
            res = []
            for g in self.ids[c]:
                t = s - self.sizes[g]
                if self._product(g, t) == 0 or (t and not self.children[g]):
                    continue
                for tail in forest(g, 0, t):
                    res.append((g,) + tail)
            return tuple(res)

        @lru_cache(maxsize=None)
        def forest(g, i, s):
            ch = self.children[g]
            if i == len(ch):
                return ((),) if s == 0 else ()
            if i == len(ch) - 1:
                return trees(ch[i], s) if s >= 1 else ()
            res = []
            for a in range(1, s):
                if self.Y[ch[i]][a] == 0 or self.S[g][i + 1][s - a] == 0:
                    continue
                for head in trees(ch[i], a):
                    for tail in forest(g, i + 1, s - a):
                        res.append(head + tail)
            return tuple(res)

        return list(trees(color, n))


def FullGrammar(spec, unweighted=False):
    n = spec.n_monomials
    return Grammar(spec, [True] * n, spec.children, [int(x) for x in spec.h], unweighted)


def SubtreeGrammar(spec, a_leaves=True, unweighted=False):
    """Subtrees rooted at color 0 where color-0 children are leaves.

    With ``a_leaves`` False, monomials using color 0 are excluded (this is
    the class of subtrees with no A-leaf); otherwise A-leaves count one
    unit of size each, like z-leaves.
    """
    n = spec.n_monomials
    if a_leaves:
        allowed = [True] * n
        sizes = [int(spec.h[g] + spec.k0[g]) for g in range(n)]
    else:
        allowed = [int(spec.k0[g]) == 0 for g in range(n)]
        sizes = [int(x) for x in spec.h]
    return Grammar(spec, allowed, spec.sub_children, sizes, unweighted)


@dataclass
class CountTables:
    Y: list
    N: int

    @property
    def A(self):
        return self.Y[0]


@lru_cache(maxsize=16)
def _grammar(spec, unweighted=False):
    return FullGrammar(spec, unweighted)


def count_coefficients(spec, N):
    g = _grammar(spec).extend(N)
    return CountTables([list(row[:N + 1]) for row in g.Y], N)


def oracle_sample(spec, n, bits):
    nodes = _grammar(spec).sample(n, bits)
    return ColoredTree(nodes, n)


def enumerate_structures(spec, n, cap=10 ** 6):
    total = _grammar(spec, True).count(n)
    if total > cap:
        raise CapExceeded(f"{total} structures of size {n} exceed the cap {cap}")
    out = []
    for nodes in _grammar(spec).enumerate(n):
        out.append((ColoredTree(nodes, n), spec.weight(nodes)))
    return out


def class_probabilities(spec, n, cap=10 ** 6):
    """Exact W(T)/A_n for every structure of size n, keyed by node tuple."""
    items = enumerate_structures(spec, n, cap)
    total = sum((w for _, w in items), Fraction(0))
    if total == 0:
        raise EmptySizeClass(f"no structure of size {n}")
    return {t.nodes: w / total for t, w in items}


def size_class_nonempty(spec, n, exact_upto=256):
    """True iff some structure of size n exists.

    Exact from the counting series for n <= ``exact_upto``. Beyond that
    the support is taken to be periodic, with the period and residues read
    off the upper half of the exact range.
    """
    N = min(n, exact_upto)
    A = count_coefficients(spec, N).A
    if n <= N:
        return A[n] != 0
    tail = [s for s in range(N // 2, N + 1) if A[s] != 0]
    if not tail:
        return False
    d = 0
    for s in tail[1:]:
        d = gcd(d, s - tail[0])
    if d == 0:
        return False
    return (n - tail[0]) % d == 0
