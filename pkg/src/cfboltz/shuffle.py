"""Balanced shuffle, cyclic-lemma rotation and tree (dis)assembly."""
import math

import numpy as np
from numba import njit

from .errors import BadEndpoint, MalformedExcursion
from .randomness import bernoulli_kernel, last_one, uniform_kernel
from .spec import ColoredTree


@njit(cache=True)
def dyadic_beta(k, m):
    """64-bit expansion of k/(k+m), snapped to a/2^d (d <= 16) when close."""
    n = k + m
    beta = k / n
    tol = 0.25 / (math.sqrt(n) * max(math.log(n), 1.0))
    for d in range(1, 17):
        scale = float(1 << d)
        a = math.floor(beta * scale + 0.5)
        if 0 < a < (1 << d) and abs(beta - a / scale) < tol:
            return np.uint64(a) << np.uint64(64 - d)
    P = beta * 18446744073709551616.0
    if P >= 18446744073709551615.0:
        return np.uint64(0xFFFFFFFFFFFFF800)
    return np.uint64(P)


@njit(cache=True)
def bbhl_kernel(st, k, m, out):
    """out[:k+m] <- uniform 0/1 string with k ones."""
    n = k + m
    if k == 0 or m == 0:
        for i in range(n):
            out[i] = 1 if m == 0 else 0
        return
    P = dyadic_beta(k, m)
    last = last_one(P)
    a = k
    b = m
    i = 0
    while True:
        bit = bernoulli_kernel(st, P, last, 0, 0)
        # the overflowing draw may be the (n+1)-th; it is discarded anyway
        if i < n:
            out[i] = 1 if bit else 0
        i += 1
        if bit:
            a -= 1
        else:
            b -= 1
        if a < 0 or b < 0:
            break
    fill = 0 if a < 0 else 1
    # positions i-1 .. n-1 take the other symbol, each swapped into place
    for j in range(i - 1, n):
        out[j] = fill
        h = uniform_kernel(st, j + 1)
        t = out[j]
        out[j] = out[h]
        out[h] = t


def bbhl_shuffle(k, m, bits):
    """Uniform 0/1 string (as a numpy int8 array) with k ones and m zeros."""
    if k < 0 or m < 0 or k + m < 1:
        raise ValueError("need k, m >= 0 and k + m >= 1")
    out = np.zeros(k + m, dtype=np.int8)
    bbhl_kernel(bits.state, k, m, out)
    return out


@njit(cache=True)
def cyc_kernel(ords):
    """First index at which the prefix sum S_i (S_0 = 0, i < len) is minimal."""
    s = 0
    best = 0
    best_i = 0
    for i in range(ords.shape[0]):
        if s < best:
            best = s
            best_i = i
        s += ords[i]
    return best_i, s


def cyc(steps):
    """Rotation index j making the step list an excursion.

    ``steps`` holds (v, ell-1) pairs. After rotating by j every strict
    prefix has ordinate sum >= 0 and the whole list sums to -1.
    """
    ords = np.array([int(s[1]) for s in steps], dtype=np.int64)
    if not len(ords):
        raise BadEndpoint("empty step list")
    j, total = cyc_kernel(ords)
    if total != -1:
        raise BadEndpoint(f"ordinates sum to {total}, not -1")
    return int(j)


def is_excursion(steps):
    s = 0
    for i, (_, d) in enumerate(steps):
        s += d
        if i < len(steps) - 1 and s < 0:
            return False
    return s == -1


@njit(cache=True)
def assemble_kernel(nodes, seg_start, seg_end, order, rot, color, ch_ptr, ch_col, out, stack_o, stack_c):
    """Preorder of the tree whose subtree list is order[rot:] + order[:rot].

    Subtree s occupies nodes[seg_start[s]:seg_end[s]]. ``ch_col`` lists
    all children colors (A-children included). Returns the number of
    nodes written, or -1 if the list is not a valid excursion.
    """
    L = order.shape[0]
    cursor = seg_start.copy()
    nxt = 0
    top = 1
    stack_o[0] = -1
    stack_c[0] = 0
    n = 0
    while top > 0:
        top -= 1
        owner = stack_o[top]
        c = stack_c[top]
        if c == 0:
            if nxt >= L:
                return -1
            owner = order[(rot + nxt) % L]
            nxt += 1
        if cursor[owner] >= seg_end[owner]:
            return -1
        g = nodes[cursor[owner]]
        cursor[owner] += 1
        if color[g] != c:
            return -1
        out[n] = g
        n += 1
        for t in range(ch_ptr[g + 1] - 1, ch_ptr[g] - 1, -1):
            if top >= stack_o.shape[0]:
                return -1
            stack_o[top] = owner
            stack_c[top] = ch_col[t]
            top += 1
    if nxt != L:
        return -1
    for s in range(seg_start.shape[0]):
        if cursor[s] != seg_end[s]:
            return -1
    return n


def full_child_arrays(spec):
    ptr = [0]
    col = []
    for ch in spec.children:
        col.extend(ch)
        ptr.append(len(col))
    return np.array(ptr, dtype=np.int64), np.array(col, dtype=np.int64)


def assemble_tree(spec, subtrees):
    """Graft a subtree list (in excursion order) into one colored tree."""
    nodes = [g for t in subtrees for g in t.nodes]
    seg_start, seg_end, acc = [], [], 0
    for t in subtrees:
        seg_start.append(acc)
        acc += len(t.nodes)
        seg_end.append(acc)
    ptr, col = full_child_arrays(spec)
    L = len(subtrees)
    if L == 0:
        raise MalformedExcursion("empty list")
    out = np.zeros(max(acc, 1), dtype=np.int64)
    cap = acc * (1 + max((len(c) for c in spec.children), default=0)) + 2
    n = assemble_kernel(np.array(nodes, dtype=np.int64), np.array(seg_start, dtype=np.int64),
                        np.array(seg_end, dtype=np.int64), np.arange(L, dtype=np.int64), 0,
                        spec.color, ptr, col, out, np.zeros(cap, dtype=np.int64),
                        np.zeros(cap, dtype=np.int64))
    if n < 0:
        raise MalformedExcursion("subtree list does not form a tree")
    tree = tuple(int(g) for g in out[:n])
    return ColoredTree(tree, spec.tree_size(tree))


def decompose(spec, nodes):
    """Subtrees of a colored tree in preorder of their roots."""
    pieces = []
    stack = []          # (piece index, color) of pending children
    stack.append((-1, 0))
    for g in nodes:
        if not stack:
            raise MalformedExcursion("extra nodes after a complete tree")
        owner, c = stack.pop()
        if spec.color[g] != c:
            raise MalformedExcursion("color mismatch")
        if c == 0:
            pieces.append([])
            owner = len(pieces) - 1
        pieces[owner].append(int(g))
        for b in reversed(spec.children[g]):
            stack.append((owner, b))
    if stack:
        raise MalformedExcursion("incomplete tree")
    return [spec.make_subtree(p) for p in pieces]
