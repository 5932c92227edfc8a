"""Polynomial specifications, validation, and the subtree catalog.

A specification is a system Y_a = sum phi * z^h * prod_b Y_b^{k_b} over
symbols 0..m, symbol 0 being the target class. Trees are stored as tuples
of global monomial ids in depth-first preorder. The children of a node
are, in order: h z-leaves, k_0 children of color 0, k_1 of color 1, and
so on. Leaves are implicit, so a node list determines the whole tree.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import NoExcursion


class Monomial(NamedTuple):
    coef: Fraction
    h: int
    k: tuple


class Subtree(NamedTuple):
    """A piece of the decomposition: root of color 0, A-leaves not expanded."""
    nodes: tuple
    v: int
    ell: int
    log_weight: float

    @property
    def step(self):
        return (self.v, self.ell - 1)


class ColoredTree(NamedTuple):
    nodes: tuple
    size: int


def _canonical(monos, width):
    merged = {}
    for mo in monos:
        k = tuple(int(x) for x in mo.k) + (0,) * (width - len(mo.k))
        key = (int(mo.h), k)
        merged[key] = merged.get(key, Fraction(0)) + Fraction(mo.coef)
    out = [Monomial(c, h, k) for (h, k), c in merged.items()]
    out.sort(key=lambda mo: (mo.h,) + mo.k, reverse=True)
    return tuple(out)


class CombinatorialSpec:
    """An immutable polynomial system with per-monomial lookup tables."""

    def __init__(self, symbols, productions):
        self.symbols = tuple(symbols)
        width = len(self.symbols)
        if len(productions) != width:
            raise ValueError("one production list per symbol is required")
        self.productions = tuple(_canonical(p, width) for p in productions)

        self.start = []
        color, hs, exps, coefs = [], [], [], []
        for c, prods in enumerate(self.productions):
            self.start.append(len(color))
            for mo in prods:
                color.append(c)
                hs.append(mo.h)
                exps.append(mo.k)
                coefs.append(mo.coef)
        self.start.append(len(color))
        self.color = np.array(color, dtype=np.int64)
        self.h = np.array(hs, dtype=np.int64)
        self.exps = np.array(exps, dtype=np.int64).reshape(len(color), width)
        self.k0 = self.exps[:, 0].copy() if len(color) else np.zeros(0, np.int64)
        self.coef = tuple(coefs)
        self.coef_float = np.array([float(c) for c in coefs])
        self.log_coef = np.array([math.log(c) if c > 0 else -math.inf for c in coefs])
        # expanded children of a node in a full tree, and inside a subtree
        self.children = tuple(
            tuple(b for b, kb in enumerate(k) for _ in range(kb)) for k in exps)
        self.sub_children = tuple(tuple(b for b in ch if b) for ch in self.children)

    @property
    def m(self):
        return len(self.symbols) - 1

    @property
    def n_monomials(self):
        return len(self.coef)

    def monomial_ids(self, c):
        return range(self.start[c], self.start[c + 1])

    def __eq__(self, other):
        return (isinstance(other, CombinatorialSpec) and self.symbols == other.symbols
                and self.productions == other.productions)

    def __hash__(self):
        return hash((self.symbols, self.productions))

    def __repr__(self):
        from .parser import render_spec
        return f"CombinatorialSpec({render_spec(self)!r})"

    def edges(self):
        """Dependency digraph: a -> b iff some monomial of a uses Y_b."""
        out = [set() for _ in self.symbols]
        for a, prods in enumerate(self.productions):
            for mo in prods:
                out[a].update(b for b, kb in enumerate(mo.k) if kb)
        return out

    def reachable(self):
        adj = self.edges()
        seen, todo = {0}, [0]
        while todo:
            a = todo.pop()
            for b in adj[a]:
                if b not in seen:
                    seen.add(b)
                    todo.append(b)
        return seen

    def restricted(self):
        """The same system restricted to symbols reachable from symbol 0."""
        keep = sorted(self.reachable())
        if len(keep) == len(self.symbols):
            return self
        prods = []
        for a in keep:
            prods.append([Monomial(mo.coef, mo.h, tuple(mo.k[b] for b in keep))
                          for mo in self.productions[a]])
        return CombinatorialSpec([self.symbols[a] for a in keep], prods)

    def weight(self, nodes):
        w = Fraction(1)
        for g in nodes:
            w *= self.coef[g]
        return w

    def log_weight(self, nodes):
        return float(self.log_coef[list(nodes)].sum()) if len(nodes) else 0.0

    def tree_size(self, nodes):
        return int(self.h[list(nodes)].sum())

    def make_subtree(self, nodes):
        nodes = tuple(int(g) for g in nodes)
        idx = list(nodes)
        return Subtree(nodes, int(self.h[idx].sum()), int(self.k0[idx].sum()),
                       float(self.log_coef[idx].sum()))

    def check_tree(self, nodes, subtree=False):
        """True iff ``nodes`` is a complete preorder of a tree (or subtree)."""
        kids = self.sub_children if subtree else self.children
        need = [0]
        for g in nodes:
            if not need or g < 0 or g >= self.n_monomials:
                return False
            c = need.pop()
            if self.color[g] != c:
                return False
            need.extend(reversed(kids[g]))
        return not need


def linear_part(spec):
    """Matrix of coefficients of the monomials with h=0 and total degree 1."""
    width = len(spec.symbols)
    L = [[Fraction(0)] * width for _ in range(width)]
    for a, prods in enumerate(spec.productions):
        for mo in prods:
            if mo.h == 0 and sum(mo.k) == 1:
                L[a][mo.k.index(1)] += mo.coef
    return L


def _matmul(X, Y):
    n = len(X)
    return [[sum(X[i][t] * Y[t][j] for t in range(n)) for j in range(n)] for i in range(n)]


def validate_spec(spec):
    """List of violated invariants; empty when the spec is admissible."""
    report = []
    width = len(spec.symbols)
    for a, prods in enumerate(spec.productions):
        name = spec.symbols[a]
        if not prods:
            report.append(f"symbol {name} has no monomial")
        for mo in prods:
            if mo.coef <= 0:
                report.append(f"symbol {name}: non-positive coefficient {mo.coef}")
            if mo.h < 0 or min(mo.k, default=0) < 0:
                report.append(f"symbol {name}: negative exponent")
            if mo.h == 0 and sum(mo.k) == 0:
                report.append(f"symbol {name}: empty production (h=0 and no symbols)")
    L = linear_part(spec)
    P = L
    for _ in range(width):
        P = _matmul(P, L)
    if any(x != 0 for row in P for x in row):
        report.append("linear part of Phi(0,Y) is not nilpotent")
    reach = spec.reachable()
    adj = spec.edges()
    for a in reach:
        # every reachable symbol must reach back to 0
        seen, todo = {a}, [a]
        while todo:
            x = todo.pop()
            for b in adj[x]:
                if b not in seen:
                    seen.add(b)
                    todo.append(b)
        if 0 not in seen:
            report.append(f"dependency graph not strongly connected: {spec.symbols[a]} "
                          f"does not lead back to {spec.symbols[0]}")
    return report


@dataclass
class SubtreeCatalog:
    v0: int
    T0: Fraction
    base_trees: list
    base_weights: list
    support: list = field(default_factory=list)

    @property
    def base_set(self):
        return {t.nodes for t in self.base_trees}


def _min_leaf_sizes(spec):
    """Fewest z-leaves of a derivation with no A-leaves, per color 1..m."""
    inf = math.inf
    d = [inf] * len(spec.symbols)
    for _ in range(4 * len(spec.symbols) + 4):
        changed = False
        for c in range(1, len(spec.symbols)):
            for mo in spec.productions[c]:
                if mo.k[0]:
                    continue
                val = mo.h + sum(kb * d[b] for b, kb in enumerate(mo.k) if kb)
                if val < d[c]:
                    d[c] = val
                    changed = True
        if not changed:
            break
    best = inf
    for mo in spec.productions[0]:
        if mo.k[0]:
            continue
        best = min(best, mo.h + sum(kb * d[b] for b, kb in enumerate(mo.k) if kb))
    return best


def compute_catalog(spec, support_size=4):
    """v0, the finite class T_{v0,0}, and its total weight T0."""
    from .oracle import SubtreeGrammar

    v0 = _min_leaf_sizes(spec)
    if v0 == math.inf:
        raise NoExcursion("no subtree without A-leaves exists")
    v0 = int(v0)
    grammar = SubtreeGrammar(spec, a_leaves=False)
    base = [spec.make_subtree(t) for t in grammar.enumerate(v0)]
    weights = [spec.weight(t.nodes) for t in base]
    T0 = sum(weights, Fraction(0))
    assert T0 > 0
    marked = SubtreeGrammar(spec, a_leaves=True)
    support = set()
    for s in range(1, max(support_size, v0 + 1) + 1):
        for t in marked.enumerate(s):
            st = spec.make_subtree(t)
            support.add(st.step)
    return SubtreeCatalog(v0, T0, base, weights, sorted(support))
