"""The accelerated sampler: drifted walk, certified acceptance, fill, shuffle.

One attempt walks with subtrees from the tilted mixture until the
diagonal index reaches n' = n - v0. A landing at ordinate j >= -1 is kept
with probability r_n, then m = j + 1 base subtrees are added, the two
blocks are interleaved by a balanced shuffle, and (in excursion mode) the
list is rotated by the cyclic lemma and grafted into a tree.

The acceptance test compares a 64-bit prefix of a uniform U with the float
value of ln r_n and its error bound. Undecided cases are settled in Python
with mpmath and more bits of U.
"""
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from numba import njit

from .certify import build_plan, log_acceptance1, log_acceptance_precise
from .critical import CriticalSolver, derived_constants
from .errors import (DepthRunaway, EmptySizeClass, InvariantBreach, MalformedExcursion,
                     RestartBudgetExceeded, SizeTooSmall)
from .randomness import take
from .shuffle import assemble_kernel, bbhl_kernel, cyc_kernel, full_child_arrays
from .spec import ColoredTree, compute_catalog
from .subtrees import (SubtreeKernel, make_mixture, offspring_table, sample_subtree_mu0,
                       tune_shift, walk)

ACCEPT, UNDECIDED, RUNAWAY, BREACH, BUDGET = 0, 1, 2, 3, 4
# slots of the statistics array
S_ATTEMPTS, S_LANDED, S_RSUM, S_ACCEPTED, S_ESCALATED = 0, 1, 2, 3, 4


@dataclass
class WalkGeometry:
    n: int
    v0: int
    i: int = 0
    j: int = 0

    @property
    def n_prime(self):
        return self.n - self.v0

    @property
    def diagonal(self):
        return self.i + self.v0 * self.j

    def step(self, v, ell):
        self.i += v
        self.j += ell - 1

    def on_diagonal(self):
        return self.diagonal == self.n_prime and self.j >= -1

    def in_final_region(self):
        return self.diagonal >= self.n_prime


@njit(cache=True)
def attempt_kernel(st, lo2, hi2, start, ch_ptr, ch_col, hh, kk0, v0, piP, pilast, n_prime,
                   buf, sub_end, sub_v, sub_l, sub_a, stack, u_tilde,
                   log_Kn, lnA0, lnAneq, xi, log_norm, budget, stats, res):
    """Walk and test until acceptance, an undecided test or a failure.

    res receives (k, m, end, U prefix, logR bits) for the last landed walk.
    """
    attempts = 0
    while True:
        attempts += 1
        stats[S_ATTEMPTS] += 1
        status, k, j, end = walk(st, lo2, hi2, start, ch_ptr, ch_col, hh, kk0, v0, piP,
                                 pilast, n_prime, buf, sub_end, sub_v, sub_l, sub_a, stack)
        if status == 2:
            return RUNAWAY
        if status == 0:
            stats[S_LANDED] += 1
            m = j + 1
            for t in range(k):
                u_tilde[t] = sub_v[t] + v0 * (sub_l[t] - 1)
            logR, err = log_acceptance1(log_Kn, lnA0, lnAneq, xi, log_norm, float(k), float(m),
                                        u_tilde[:k])
            stats[S_RSUM] += math.exp(logR)
            res[0] = k
            res[1] = m
            res[2] = end
            if logR + err > 0.0:
                return BREACH
            x = take(st, 64)
            res[3] = np.int64(x >> np.uint64(1))
            res[4] = np.int64(x & np.uint64(1))
            lo = np.log(float(x) * 5.421010862427522e-20) if x > np.uint64(0) else -np.inf
            hi = np.log((float(x) + 1.0) * 5.421010862427522e-20)
            pad = 1e-15 * (1.0 + abs(hi))
            if hi + pad <= logR - err:
                stats[S_ACCEPTED] += 1
                return ACCEPT
            if not (lo - pad >= logR + err):
                stats[S_ESCALATED] += 1
                return UNDECIDED
        if attempts >= budget:
            return BUDGET


@njit(cache=True)
def finish_kernel(st, buf, end, sub_end, sub_l, k, m, fills, base_nodes, base_ptr,
                  color, ch_ptr, ch_col, seg_start, seg_end, bits01, order, ords,
                  excursion, out, stack_o, stack_c):
    """Fill, shuffle, rotate and graft. Returns (node count, rotation)."""
    for t in range(k):
        seg_start[t] = sub_end[t - 1] if t > 0 else 0
        seg_end[t] = sub_end[t]
    pos = end
    for f in range(m):
        b = fills[f]
        seg_start[k + f] = pos
        for q in range(base_ptr[b], base_ptr[b + 1]):
            buf[pos] = base_nodes[q]
            pos += 1
        seg_end[k + f] = pos
    bbhl_kernel(st, k, m, bits01)
    a = 0
    b = 0
    for i in range(k + m):
        if bits01[i] == 1:
            order[i] = a
            ords[i] = sub_l[a] - 1
            a += 1
        else:
            order[i] = k + b
            ords[i] = -1
            b += 1
    if not excursion:
        return pos, 0
    rot, total = cyc_kernel(ords[:k + m])
    if total != -1:
        return -1, 0
    n = assemble_kernel(buf, seg_start[:k + m], seg_end[:k + m], order[:k + m], rot,
                        color, ch_ptr, ch_col, out, stack_o, stack_c)
    return n, rot


@dataclass
class SamplerStats:
    attempts: int = 0
    landed: int = 0
    r_sum: float = 0.0
    accepted: int = 0
    escalated: int = 0
    escalation_rejects: int = 0

    @property
    def reach(self):
        return self.landed / self.attempts if self.attempts else float("nan")

    @property
    def mean_r(self):
        return self.r_sum / self.landed if self.landed else float("nan")


@dataclass
class BridgeContext:
    """Everything the accelerated sampler needs for one spec and size."""
    spec: object
    catalog: object
    crit: object
    consts: object
    n: int
    mix: object = None
    plan: object = None
    table: object = None
    kernel: object = None
    budget: int = 10 ** 6
    stats: SamplerStats = field(default_factory=SamplerStats)

    def __post_init__(self):
        if self.n <= self.catalog.v0:
            return
        spec = self.spec
        self.kernel.buf = np.zeros(self.kernel.buf.shape[0] + self._fill_room(), dtype=np.int64)
        npr = self.mix.n_prime
        L = npr + npr // self.catalog.v0 + 4
        self.u_tilde = np.zeros(npr + 2, dtype=np.float64)
        self.seg_start = np.zeros(L, dtype=np.int64)
        self.seg_end = np.zeros(L, dtype=np.int64)
        self.bits01 = np.zeros(L, dtype=np.int8)
        self.order = np.zeros(L, dtype=np.int64)
        self.ords = np.zeros(L, dtype=np.int64)
        cap = self.kernel.buf.shape[0]
        self.out = np.zeros(cap, dtype=np.int64)
        width = 1 + max(len(c) for c in spec.children)
        self.stack_o = np.zeros(cap * width + 4, dtype=np.int64)
        self.stack_c = np.zeros(cap * width + 4, dtype=np.int64)
        self.full_ptr, self.full_col = full_child_arrays(spec)
        base = [t.nodes for t in self.catalog.base_trees]
        self.base_nodes = np.array([g for t in base for g in t], dtype=np.int64)
        self.base_ptr = np.cumsum([0] + [len(t) for t in base]).astype(np.int64)
        self.res = np.zeros(5, dtype=np.int64)
        self.stat_arr = np.zeros(5, dtype=np.float64)

    def _fill_room(self):
        longest = max(len(t.nodes) for t in self.catalog.base_trees)
        return (self.mix.n_prime // self.catalog.v0 + 3) * longest

    @property
    def v0(self):
        return self.catalog.v0


def build_context(spec, n, solver=None, crit=None, consts=None, catalog=None, clamp=True,
                  budget=10 ** 6, tune=True):
    """Precompute mixture, tables and the certified plan for size n.

    With ``tune`` the mixture shift is chosen to maximize K_n; otherwise
    (or when tuning fails at small n) the default eps/sqrt(n') is used.
    """
    catalog = catalog or compute_catalog(spec)
    solver = solver or CriticalSolver(spec)
    crit = crit or solver.solve_characteristic()
    consts = consts or derived_constants(solver, crit, catalog)
    if n < catalog.v0:
        raise EmptySizeClass(f"no structure of size {n} (smallest is {catalog.v0})")
    if n == catalog.v0:
        return BridgeContext(spec, catalog, crit, consts, n, budget=budget)
    shift = None
    if tune:
        try:
            shift = tune_shift(solver, crit, consts, n)
        except SizeTooSmall:
            shift = None
    mix = make_mixture(solver, crit, consts, n, clamp=clamp, shift=shift)
    table = offspring_table(spec, mix)
    plan = build_plan(n, catalog.v0, consts.A0, consts.Aneq, mix.shift, mix.log_norm)
    kernel = SubtreeKernel(spec, mix, table)
    return BridgeContext(spec, catalog, crit, consts, n, mix, plan, table, kernel, budget)


def _decide_precise(ctx, bits, k, m, u_tilde, x_hi63, x_low):
    """Settle U < r with mpmath, refining U and the precision as needed."""
    plan = ctx.plan
    X = (int(x_hi63) << 1) | int(x_low)
    b = 64
    prec = 256
    while True:
        val, err = log_acceptance_precise(plan, u_tilde, k, m, prec)
        with mpmath.workprec(prec + 64):
            lo = mpmath.log(mpmath.mpf(X) / mpmath.mpf(2) ** b) if X else mpmath.ninf
            hi = mpmath.log(mpmath.mpf(X + 1) / mpmath.mpf(2) ** b)
            if hi <= val - err:
                return True
            if lo >= val + err:
                return False
            width = hi - lo
        if width > err:
            X = (X << 64) | bits.bits(64)
            b += 64
        else:
            prec *= 2


def _run(ctx, bits):
    """Loop attempts until one is accepted; returns (k, m, end)."""
    kn, plan, st = ctx.kernel, ctx.plan, ctx.stats
    lnA0, lnAneq = math.log(ctx.consts.A0), math.log(ctx.consts.Aneq)
    used = 0
    while True:
        ctx.stat_arr[:] = 0
        status = attempt_kernel(bits.state, kn.table.lo, kn.table.hi, kn.start, kn.ch_ptr,
                                kn.ch_col, kn.hh, kn.kk0, kn.v0, kn.piP, kn.pilast,
                                kn.mix.n_prime, kn.buf, kn.sub_end, kn.sub_v, kn.sub_l,
                                kn.sub_a, kn.stack, ctx.u_tilde, plan.log_Kn, lnA0, lnAneq,
                                plan.xi, plan.log_norm, ctx.budget - used, ctx.stat_arr,
                                ctx.res)
        sa = ctx.stat_arr
        st.attempts += int(sa[S_ATTEMPTS])
        st.landed += int(sa[S_LANDED])
        st.r_sum += float(sa[S_RSUM])
        st.accepted += int(sa[S_ACCEPTED])
        st.escalated += int(sa[S_ESCALATED])
        used += int(sa[S_ATTEMPTS])
        k, m, end = int(ctx.res[0]), int(ctx.res[1]), int(ctx.res[2])
        if status == ACCEPT:
            return k, m, end
        if status == RUNAWAY:
            raise DepthRunaway("walk exceeded its node buffer")
        if status == BREACH:
            raise InvariantBreach(f"acceptance rate above 1 at n={ctx.n}, k={k}, m={m}")
        if status == BUDGET:
            raise RestartBudgetExceeded(f"{used} attempts without acceptance at n={ctx.n}")
        u = ctx.u_tilde[:k].astype(np.int64)
        if _decide_precise(ctx, bits, k, m, u, ctx.res[3], ctx.res[4]):
            st.accepted += 1
            return k, m, end
        st.escalation_rejects += 1
        if used >= ctx.budget:
            raise RestartBudgetExceeded(f"{used} attempts without acceptance at n={ctx.n}")


def _fills(ctx, bits, m):
    if len(ctx.catalog.base_trees) == 1:
        return np.zeros(m, dtype=np.int64)
    w = list(ctx.catalog.base_weights)
    return np.array([bits.discrete(w) for _ in range(m)], dtype=np.int64)


def _finish(ctx, bits, k, m, end, excursion):
    kn = ctx.kernel
    fills = _fills(ctx, bits, m)
    n, rot = finish_kernel(bits.state, kn.buf, end, kn.sub_end, kn.sub_l, k, m, fills,
                           ctx.base_nodes, ctx.base_ptr, ctx.spec.color, ctx.full_ptr,
                           ctx.full_col, ctx.seg_start, ctx.seg_end, ctx.bits01, ctx.order,
                           ctx.ords, excursion, ctx.out, ctx.stack_o, ctx.stack_c)
    if n < 0:
        raise MalformedExcursion("accepted list failed the cyclic lemma")
    return n, rot


def sample_bridge(ctx, bits):
    """Shuffled list of k + m subtrees forming a bridge to (n, -1)."""
    if ctx.n == ctx.v0:
        return [sample_subtree_mu0(ctx.catalog, bits)]
    k, m, end = _run(ctx, bits)
    _finish(ctx, bits, k, m, end, False)
    spec, buf = ctx.spec, ctx.kernel.buf
    out = []
    for i in range(k + m):
        s = ctx.order[i]
        out.append(spec.make_subtree(buf[ctx.seg_start[s]:ctx.seg_end[s]].tolist()))
    return out


def sample_structure(ctx, bits, mode="excursion"):
    """A ColoredTree with probability W(T)/A_n, or the bridge list."""
    if mode == "bridge":
        return sample_bridge(ctx, bits)
    if mode != "excursion":
        raise ValueError(f"unknown mode {mode!r}")
    if ctx.n == ctx.v0:
        return ColoredTree(sample_subtree_mu0(ctx.catalog, bits).nodes, ctx.n)
    k, m, end = _run(ctx, bits)
    n, _ = _finish(ctx, bits, k, m, end, True)
    return ColoredTree(tuple(ctx.out[:n].tolist()), ctx.n)
