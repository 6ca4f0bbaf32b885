"""Closed-walk enumeration on the layer graph of a lattice-jump process.

Irreducibility and aperiodicity of a translation-invariant chain on
Z^d x {1..p} reduce to questions about the set of (length, displacement)
signatures of closed walks at a base layer:

* the chain reaches every lattice point of the base layer iff the
  displacement set generates Z^d as a group *and* its convex cone is all
  of R^d (one-sided supports fail the cone test);
* the chain is aperiodic iff the gcd of lengths of zero-displacement
  closed walks is 1.

Both searches are bounded; the bounds are surfaced in diagnostics so a
negative answer near the cap can be re-run with a larger one.
"""

from __future__ import annotations

from math import gcd

import numpy as np
from scipy.optimize import linprog


def strongly_connected(adj: list[list[int]]) -> bool:
    """True iff the directed graph (adjacency lists) is strongly connected."""
    n = len(adj)
    if n == 0:
        return False

    def reach(adjacency):
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in adjacency[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == n

    rev: list[list[int]] = [[] for _ in range(n)]
    for v, outs in enumerate(adj):
        for w in outs:
            rev[w].append(v)
    return reach(adj) and reach(rev)


def closed_walk_signatures(edges, p: int, d: int, base: int, max_len: int):
    """Enumerate (length, displacement) pairs of closed walks at ``base``.

    ``edges`` maps (i, j) to a list of displacement tuples.  Returns the set
    of (length, displacement-tuple) pairs for every closed walk of length
    1..max_len, found by breadth-first propagation of reachable
    (layer, displacement) states.
    """
    frontier: set[tuple[int, tuple[int, ...]]] = {(base, (0,) * d)}
    found: set[tuple[int, tuple[int, ...]]] = set()
    for length in range(1, max_len + 1):
        nxt: set[tuple[int, tuple[int, ...]]] = set()
        for layer, disp in frontier:
            for j in range(p):
                for dx in edges.get((layer, j), ()):
                    nxt.add((j, tuple(a + b for a, b in zip(disp, dx))))
        for layer, disp in nxt:
            if layer == base:
                found.add((length, disp))
        frontier = nxt
        if not frontier:
            break
    return found


def lattice_spans_zd(vectors, d: int) -> bool:
    """True iff the integer span of ``vectors`` is all of Z^d.

    Exact integer echelon reduction (unimodular row operations only).  With
    full rank the reduced generators are triangular and the lattice index
    in Z^d is the product of the pivot entries, so the span is everything
    iff that product is 1.
    """
    rows = [list(map(int, v)) for v in {tuple(v) for v in vectors} if any(v)]
    if not rows:
        return d == 0
    pivots: list[int] = []
    for col in range(d):
        live = [t for t in range(len(rows)) if rows[t][col] != 0]
        if not live:
            continue
        # Euclidean elimination across rows until one nonzero entry remains
        while len(live) > 1:
            live.sort(key=lambda t: abs(rows[t][col]))
            t0 = live[0]
            if rows[t0][col] < 0:
                rows[t0] = [-a for a in rows[t0]]
            for t in live[1:]:
                q = rows[t][col] // rows[t0][col]
                rows[t] = [a - q * b for a, b in zip(rows[t], rows[t0])]
            live = [t for t in live if rows[t][col] != 0]
        piv = live[0]
        pivots.append(abs(rows[piv][col]))
        rows = [r for t, r in enumerate(rows) if t != piv and any(r)]
        if not rows and len(pivots) < d:
            return False
    if len(pivots) < d:
        return False
    prod = 1
    for v in pivots:
        prod *= v
    return prod == 1


def cone_spans_rd(vectors, d: int) -> bool:
    """True iff the convex cone of ``vectors`` is all of R^d.

    Checks that every signed basis direction is a nonnegative combination
    of the vectors (small LP feasibility problems).
    """
    vs = np.array([v for v in vectors if any(v)], dtype=float)
    if vs.size == 0:
        return False
    for k in range(d):
        for sgn in (1.0, -1.0):
            target = np.zeros(d)
            target[k] = sgn
            res = linprog(
                c=np.zeros(len(vs)),
                A_eq=vs.T,
                b_eq=target,
                bounds=[(0, None)] * len(vs),
                method="highs",
            )
            if not res.success:
                return False
    return True


def zero_walk_gcd(signatures) -> int:
    """gcd of lengths of zero-displacement closed walks; 0 if none seen."""
    g = 0
    for length, disp in signatures:
        if not any(disp):
            g = gcd(g, length)
    return g
