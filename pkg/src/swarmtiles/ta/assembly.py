"""Positioned assemblies, bond graphs, stability, and canonical forms.

A positioned assembly is a sparse map from integer coordinates to state
ids.  Its bond graph weights each adjacent tile pair by the affinity
function, with the orientation conventions: horizontal edges are keyed
(left state, right state), vertical edges (upper state, lower state).

Stability: the bond graph's min cut must be at least tau.  A single tile
is stable by convention.  Exact min cuts come from connectivity checks for
tau == 1, a bridge scan for tau == 2, and Stoer-Wagner for larger
thresholds (intended for the small assemblies generic systems use).
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Optional

from .system import H, V, AffinityFunction

Cell = tuple[int, int]

_NEIGH = ((1, 0), (-1, 0), (0, 1), (0, -1))


def is_connected(cells: Iterable[Cell]) -> bool:
    cells = set(cells)
    if not cells:
        return False
    start = next(iter(cells))
    seen = {start}
    stack = [start]
    while stack:
        x, y = stack.pop()
        for dx, dy in _NEIGH:
            n = (x + dx, y + dy)
            if n in cells and n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen) == len(cells)


def bond_edges(
    tiles: dict[Cell, int], affinity: AffinityFunction
) -> dict[tuple[Cell, Cell], int]:
    """Weighted edges of the bond graph; keys are ((x,y),(x',y')) with the
    left/lower... the first cell is the left one for horizontal edges and
    the upper one for vertical edges, matching the affinity key order."""
    edges = {}
    for (x, y), s in tiles.items():
        right = (x + 1, y)
        if right in tiles:
            w = affinity.strength(s, tiles[right], H)
            edges[((x, y), right)] = w
        below = (x, y - 1)
        if below in tiles:
            w = affinity.strength(s, tiles[below], V)
            edges[((x, y), below)] = w
    return edges


def bond_weight(
    tiles: dict[Cell, int], a: Cell, b: Cell, affinity: AffinityFunction
) -> int:
    """Affinity of the bond between two adjacent occupied cells."""
    (x1, y1), (x2, y2) = a, b
    s1, s2 = tiles[a], tiles[b]
    if y1 == y2:
        if x1 < x2:
            return affinity.strength(s1, s2, H)
        return affinity.strength(s2, s1, H)
    if x1 == x2:
        if y1 > y2:
            return affinity.strength(s1, s2, V)
        return affinity.strength(s2, s1, V)
    raise ValueError(f"cells {a} and {b} are not adjacent")


def positive_bond_components(
    tiles: dict[Cell, int], affinity: AffinityFunction
) -> list[set[Cell]]:
    """Connected components of the graph using only positive-weight bonds."""
    unseen = set(tiles)
    comps = []
    while unseen:
        start = unseen.pop()
        comp = {start}
        queue = deque([start])
        while queue:
            x, y = queue.popleft()
            for dx, dy in _NEIGH:
                n = (x + dx, y + dy)
                if n in unseen and bond_weight(tiles, (x, y), n, affinity) > 0:
                    unseen.remove(n)
                    comp.add(n)
                    queue.append(n)
        comps.append(comp)
    return comps


def _bridge_below_tau(tiles, affinity, tau) -> bool:
    """True if some cut of total weight < tau exists, assuming the
    positive-bond graph is connected and tau == 2: that means a single
    weight-1 bridge."""
    # adjacency with weights
    adj: dict[Cell, list[tuple[Cell, int]]] = {c: [] for c in tiles}
    for (x, y) in tiles:
        for dx, dy in ((1, 0), (0, 1)):
            n = (x + dx, y + dy)
            if n in tiles:
                w = bond_weight(tiles, (x, y), n, affinity)
                if w > 0:
                    adj[(x, y)].append((n, w))
                    adj[n].append(((x, y), w))

    # iterative Tarjan bridge finding over positive edges
    index = {}
    low = {}
    counter = [0]
    bridges = []
    for root in tiles:
        if root in index:
            continue
        stack = [(root, None, iter(adj[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        while stack:
            node, parent, it = stack[-1]
            advanced = False
            for nxt, w in it:
                if nxt == parent:
                    parent = None  # skip the tree edge once (parallel edges impossible)
                    continue
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append((nxt, node, iter(adj[nxt])))
                    advanced = True
                    break
                low[node] = min(low[node], index[nxt])
            if not advanced:
                stack.pop()
                if stack:
                    pnode = stack[-1][0]
                    low[pnode] = min(low[pnode], low[node])
                    if low[node] > index[pnode]:
                        bridges.append((pnode, node))
    for a, b in bridges:
        if bond_weight(tiles, a, b, affinity) < tau:
            return True
    return False


def _stoer_wagner(tiles, affinity) -> int:
    """Exact global min cut (simple O(V^3) Stoer-Wagner); for the small
    assemblies generic systems work with."""
    nodes = list(tiles)
    n = len(nodes)
    idx = {c: i for i, c in enumerate(nodes)}
    w = [[0] * n for _ in range(n)]
    for (x, y) in tiles:
        for dx, dy in ((1, 0), (0, 1)):
            b = (x + dx, y + dy)
            if b in tiles:
                weight = bond_weight(tiles, (x, y), b, affinity)
                i, j = idx[(x, y)], idx[b]
                w[i][j] += weight
                w[j][i] += weight
    best = None
    active = list(range(n))
    merged = [[i] for i in range(n)]
    while len(active) > 1:
        a = [active[0]]
        rest = active[1:]
        weights = {v: w[active[0]][v] for v in rest}
        while rest:
            sel = max(rest, key=lambda v: weights[v])
            rest.remove(sel)
            a.append(sel)
            for v in rest:
                weights[v] += w[sel][v]
        s, t = a[-2], a[-1]
        cut = sum(w[t][v] for v in active if v != t)
        if best is None or cut < best:
            best = cut
        # merge t into s
        for v in active:
            if v not in (s, t):
                w[s][v] += w[t][v]
                w[v][s] = w[s][v]
        active.remove(t)
        merged[s] += merged[t]
    return best if best is not None else 0


def min_cut(tiles: dict[Cell, int], affinity: AffinityFunction) -> int:
    """Exact min cut of the bond graph (infinite for a single tile,
    rendered as a large int)."""
    if len(tiles) <= 1:
        return 1 << 30
    comps = positive_bond_components(tiles, affinity)
    if len(comps) > 1:
        return 0
    return _stoer_wagner(tiles, affinity)


def is_stable(tiles: dict[Cell, int], affinity: AffinityFunction, tau: int) -> bool:
    """tau-stability: min cut of the bond graph is at least tau.  Single
    tiles are stable by convention."""
    if len(tiles) <= 1:
        return True
    comps = positive_bond_components(tiles, affinity)
    if len(comps) > 1:
        return False
    if tau <= 1:
        return True
    if tau == 2:
        return not _bridge_below_tau(tiles, affinity, tau)
    return _stoer_wagner(tiles, affinity) >= tau


def canonical_form(tiles: dict[Cell, int]) -> tuple:
    """Translation-invariant value: tiles shifted so the lexicographically
    least occupied cell sits at the origin."""
    if not tiles:
        return ()
    ax, ay = min(tiles)
    return tuple(sorted(((x - ax, y - ay), s) for (x, y), s in tiles.items()))


def translate(tiles: dict[Cell, int], dx: int, dy: int) -> dict[Cell, int]:
    return {(x + dx, y + dy): s for (x, y), s in tiles.items()}
