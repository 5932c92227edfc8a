"""Two-point tilted mixture, offspring tables and the subtree samplers.

A subtree is grown by the rewriting process at one mixture point: the root
(color 0) picks a monomial with probability proportional to
phi z^h u^k0 prod Y_b^k_b, every color-0 child becomes an A-leaf and every
other child is expanded recursively, depth first, with the offspring law
of its color. The compiled ``grow`` writes monomial ids in preorder.
"""
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DepthRunaway, OutsideSubcriticalBall, SizeTooSmall
from .randomness import bernoulli_kernel, bins_kernel, expansion, thresholds


@dataclass
class MixtureMeasure:
    n: int
    n_prime: int
    v0: int
    xi: np.ndarray          # log-shift in z per point
    eta: np.ndarray         # log-shift in u per point
    z: np.ndarray
    u: np.ndarray
    Y: list                 # reduced solution per point
    A: np.ndarray           # A(z_a, u_a)
    f: np.ndarray           # drift function at xi_a
    pi: np.ndarray
    pi_tilde: np.ndarray
    log_norm: float         # ln D, F(u) = cosh(xi u) / D
    clamped: bool = False

    @property
    def shift(self):
        return float(self.xi[0])


@dataclass
class OffspringTable:
    probs: np.ndarray       # (points, monomials), each color block sums to 1
    lo: np.ndarray
    hi: np.ndarray


def _point(solver, crit, consts, x):
    v0 = consts.v0
    z = crit.zeta * math.exp(x)
    u = crit.theta * math.exp(v0 * x)
    y, A = solver.solve_reduced(z, u)
    if solver.width > 1 and solver.reduced_radius(z, u) >= 1.0:
        raise OutsideSubcriticalBall(f"reduced system critical at shift {x}")
    inner = math.exp(-v0 * x) * A / crit.theta - consts.A0
    if not inner > 0:
        raise OutsideSubcriticalBall(f"drift undefined at shift {x}")
    return z, u, y, A, math.log(inner / consts.Aneq)


def make_mixture(solver, crit, consts, n, clamp=True, shift=None):
    """Balanced two-point mixture for size n.

    The shift is eps/sqrt(n') unless ``shift`` is given. When a shifted
    point leaves the subcritical ball the shift is halved until both
    points are admissible (``clamp``), or SizeTooSmall is raised.
    """
    v0 = consts.v0
    n_prime = n - v0
    if n_prime < 1:
        raise ValueError("mixture needs n > v0")
    x = consts.eps / math.sqrt(n_prime) if shift is None else float(shift)
    clamped = False
    for _ in range(80):
        try:
            plus = _point(solver, crit, consts, x)
            minus = _point(solver, crit, consts, -x)
            break
        except OutsideSubcriticalBall:
            if not clamp:
                raise SizeTooSmall(min_size(solver, crit, consts))
            x *= 0.5
            clamped = True
    else:
        raise SizeTooSmall(min_size(solver, crit, consts))
    f = np.array([plus[4], minus[4]])
    # pi_a proportional to e^{f_a} makes pi_a e^{-f_a} equal
    top = f.max()
    w = np.exp(f - top)
    pi = w / w.sum()
    log_norm = top + math.log(w.sum()) - math.log(2.0)
    pi_tilde = np.exp(np.log(pi) - f)
    return MixtureMeasure(n, n_prime, v0, np.array([x, -x]), v0 * np.array([x, -x]),
                          np.array([plus[0], minus[0]]), np.array([plus[1], minus[1]]),
                          [plus[2], minus[2]], np.array([plus[3], minus[3]]), f, pi,
                          pi_tilde, log_norm, clamped)


def tune_shift(solver, crit, consts, n, grid=25, gain=0.05):
    """Shift maximizing the certified constant K_n, by a log-spaced grid search.

    Any shift gives an exact sampler; only the acceptance rate depends on it.
    The default eps/sqrt(n') is kept unless another shift raises ln K_n by
    more than ``gain``.
    """
    from .certify import scan_max

    n_prime = n - consts.v0
    x0 = consts.eps / math.sqrt(n_prime)

    def score(x):
        try:
            mix = make_mixture(solver, crit, consts, n, clamp=False, shift=x)
        except (SizeTooSmall, OutsideSubcriticalBall):
            return math.inf
        return scan_max(n_prime, consts.A0, consts.Aneq, x, mix.log_norm)

    base = score(x0)
    best, best_x = base, x0
    for x in x0 * np.geomspace(0.05, 1.5, grid):
        s = score(x)
        if s < best:
            best, best_x = s, float(x)
    return best_x if best < base - gain else x0


def min_size(solver, crit, consts):
    """Smallest n whose default shift eps/sqrt(n-v0) keeps both points admissible."""
    lo, hi = 0.0, consts.eps
    ok = False
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        try:
            _point(solver, crit, consts, mid)
            _point(solver, crit, consts, -mid)
            lo, ok = mid, True
        except OutsideSubcriticalBall:
            hi = mid
    if not ok:
        return math.inf
    n = consts.v0 + max(1, math.ceil((consts.eps / lo) ** 2))
    # bisection assumes a monotone boundary; confirm on the actual shift
    for _ in range(64):
        x = consts.eps / math.sqrt(n - consts.v0)
        try:
            _point(solver, crit, consts, x)
            _point(solver, crit, consts, -x)
            return n
        except OutsideSubcriticalBall:
            n += max(1, n // 16)
    return math.inf


def offspring_probs(spec, z, u, Y, A=None):
    """Monomial probabilities per color at (z, u) with reduced solution Y."""
    vals = np.concatenate([[u], np.asarray(Y, dtype=float)])
    logs = np.log(vals)
    probs = np.empty(spec.n_monomials)
    for c in range(len(spec.symbols)):
        ids = list(spec.monomial_ids(c))
        lw = np.array([spec.log_coef[g] + spec.h[g] * math.log(z) + spec.exps[g] @ logs
                       for g in ids])
        w = np.exp(lw - lw.max())
        total = w.sum()
        expected = vals[c] if c else A
        if expected is not None:
            # the color-c weights must add up to Y_c (A for the root)
            s = math.exp(math.log(total) + lw.max())
            if abs(s / expected - 1) > 1e-12:
                raise OutsideSubcriticalBall(f"offspring weights of color {c} do not normalize")
        probs[ids] = w / total
    return probs


def offspring_table(spec, mix):
    rows = [offspring_probs(spec, mix.z[a], mix.u[a], mix.Y[a], mix.A[a]) for a in range(len(mix.z))]
    probs = np.array(rows)
    lo = np.zeros_like(probs, dtype=np.uint64)
    hi = np.zeros_like(probs, dtype=np.uint64)
    for a in range(len(rows)):
        for c in range(len(spec.symbols)):
            s, e = spec.start[c], spec.start[c + 1]
            block = probs[a, s:e]
            assert abs(block.sum() - 1) <= 1e-12
            lo[a, s:e], hi[a, s:e] = thresholds(block)
    return OffspringTable(probs, lo, hi)


def child_arrays(spec):
    """CSR layout of the non-A children of each monomial."""
    ptr = [0]
    col = []
    for ch in spec.sub_children:
        col.extend(ch)
        ptr.append(len(col))
    return np.array(ptr, dtype=np.int64), np.array(col, dtype=np.int64)


@njit(cache=True)
def grow(st, lo, hi, start, ch_ptr, ch_col, hh, kk0, v0, buf, n0, limit, stack):
    """Grow one subtree into buf[n0:].

    Returns (end, v, ell). end == -1 means the subtree was abandoned because
    its diagonal jump is already certain to exceed ``limit``; end == -2
    means a buffer ran out.
    """
    n = n0
    stack[0] = 0
    top = 1
    v = 0
    ell = 0
    while top > 0:
        top -= 1
        c = stack[top]
        g = bins_kernel(st, lo, hi, start[c], start[c + 1])
        if n >= buf.shape[0]:
            return -2, v, ell
        buf[n] = g
        n += 1
        v += hh[g]
        ell += kk0[g]
        for t in range(ch_ptr[g + 1] - 1, ch_ptr[g] - 1, -1):
            if top >= stack.shape[0]:
                return -2, v, ell
            stack[top] = ch_col[t]
            top += 1
        # every pending node adds at least one to the jump
        if v + v0 * (ell - 1) + top > limit:
            return -1, v, ell
    return n, v, ell


@njit(cache=True)
def grow_neq(st, lo2, hi2, start, ch_ptr, ch_col, hh, kk0, v0, a, buf, n0, limit, stack):
    """Grow at point a, regrowing while the result lies in the base class."""
    while True:
        end, v, ell = grow(st, lo2[a], hi2[a], start, ch_ptr, ch_col, hh, kk0, v0,
                           buf, n0, limit, stack)
        if end < 0 or v != v0 or ell != 0:
            return end, v, ell


@njit(cache=True)
def walk(st, lo2, hi2, start, ch_ptr, ch_col, hh, kk0, v0, piP, pilast, n_prime,
         buf, sub_end, sub_v, sub_l, sub_a, stack):
    """One run of the drifted walk up to the final region.

    Returns (status, k, j, end): status 0 if the walk landed on the diagonal
    with ordinate j >= -1, 1 if it jumped over it, 2 on buffer exhaustion.
    """
    pos = 0
    k = 0
    j = 0
    n = 0
    while pos < n_prime:
        a = 0 if bernoulli_kernel(st, piP, pilast, 0, 0) else 1
        end, v, ell = grow_neq(st, lo2, hi2, start, ch_ptr, ch_col, hh, kk0, v0, a,
                               buf, n, n_prime - pos, stack)
        if end == -2:
            return 2, k, j, n
        if end == -1:
            return 1, k, j, n
        sub_end[k] = end
        sub_v[k] = v
        sub_l[k] = ell
        sub_a[k] = a
        k += 1
        n = end
        pos += v + v0 * (ell - 1)
        j += ell - 1
    if pos == n_prime and j >= -1:
        return 0, k, j, n
    return 1, k, j, n


class SubtreeKernel:
    """Compiled-kernel arguments for one spec and mixture."""

    def __init__(self, spec, mix, table, buf_size=None):
        self.spec = spec
        self.mix = mix
        self.table = table
        self.start = np.array(spec.start, dtype=np.int64)
        self.ch_ptr, self.ch_col = child_arrays(spec)
        self.hh = spec.h.astype(np.int64)
        self.kk0 = spec.k0.astype(np.int64)
        self.v0 = int(mix.v0)
        # probability of point 0; float, truncated to 64 bits
        P, last, _, _ = expansion(float(mix.pi[0]))
        self.piP, self.pilast = P, last
        npr = max(mix.n_prime, 1)
        if buf_size is None:
            buf_size = (spec.m + 2) * (self.v0 + 1) * (npr + 2) + 256
        self.buf = np.zeros(buf_size, dtype=np.int64)
        self.stack = np.zeros(buf_size, dtype=np.int64)
        self.sub_end = np.zeros(npr + 2, dtype=np.int64)
        self.sub_v = np.zeros(npr + 2, dtype=np.int64)
        self.sub_l = np.zeros(npr + 2, dtype=np.int64)
        self.sub_a = np.zeros(npr + 2, dtype=np.int64)

    def grow_one(self, bits, a, limit=1 << 62):
        end, v, ell = grow_neq(bits.state, self.table.lo, self.table.hi, self.start,
                               self.ch_ptr, self.ch_col, self.hh, self.kk0, self.v0, a,
                               self.buf, 0, limit, self.stack)
        if end == -2:
            raise DepthRunaway("subtree exceeded the node cap")
        return end, v, ell

    def walk(self, bits):
        return walk(bits.state, self.table.lo, self.table.hi, self.start, self.ch_ptr,
                    self.ch_col, self.hh, self.kk0, self.v0, self.piP, self.pilast,
                    self.mix.n_prime, self.buf, self.sub_end, self.sub_v, self.sub_l,
                    self.sub_a, self.stack)


def sample_subtree_mu0(catalog, bits):
    """A tree of the base class with probability W(t)/T0, exactly."""
    if len(catalog.base_trees) == 1:
        return catalog.base_trees[0]
    return catalog.base_trees[bits.discrete(list(catalog.base_weights))]


def sample_subtree_neq(kernel, bits, limit=1 << 62):
    """(Subtree, point index) from the mixture conditioned off the base class."""
    a = 0 if bits.bernoulli(float(kernel.mix.pi[0])) else 1
    end, v, ell = kernel.grow_one(bits, a, limit)
    if end == -1:
        raise DepthRunaway("subtree exceeded the size limit")
    nodes = tuple(int(g) for g in kernel.buf[:end])
    return kernel.spec.make_subtree(nodes), a
