"""Geometry tests: direction table invariants and the expanded port map
cross-checked against an independent exact-arithmetic enumeration oracle."""

from __future__ import annotations

import functools
import random

import pytest
from hypothesis import given, strategies as st

from swarmtiles import geometry as G


def test_direction_table_negation_closure():
    for k in range(6):
        d = G.DIRS[k]
        nd = G.DIRS[(k + 3) % 6]
        assert (d[0] + nd[0], d[1] + nd[1]) == (0, 0)


def test_direction_table_distinct():
    assert len(set(G.DIRS)) == 6


def test_dir0_is_east():
    assert G.DIRS[0] == (1, 0)


@given(st.integers(-50, 50), st.integers(-50, 50))
def test_neighbors_distinct_and_symmetric(q, r):
    v = (q, r)
    ns = G.neighbors(v)
    assert len(set(ns)) == 6
    for k, n in enumerate(ns):
        assert G.neighbors(n)[(k + 3) % 6] == v


def test_port_node_contracted_examples():
    assert G.port_node_contracted((0, 0), 0, 0) == (1, 0)
    # (4 + 2) % 6 == 0 -> global East
    assert G.port_node_contracted((2, 3), 4, 2) == (3, 3)
    # two particles with orientations 4 and 0: port-0 nodes differ by the
    # rotation offset 4
    a = G.port_node_contracted((0, 0), 4, 0)
    b = G.port_node_contracted((0, 0), 0, 0)
    assert a == G.neighbor((0, 0), 4) and b == G.neighbor((0, 0), 0)


# ---------------------------------------------------------------------------
# Independent oracle for the expanded port labeling.
#
# Works entirely in integers: embed axial (q, r) at (2q + r, r) where the
# true cartesian point is ((2q + r)/2, r*sqrt(3)/2).  Angular comparisons use
# cross/dot products, whose signs are exact in this basis.
# ---------------------------------------------------------------------------


def _ivec(node, d=None):
    q, r = node
    x, y = 2 * q + r, r
    if d is not None:
        dq, dr = G.DIRS[d]
        x, y = 2 * x + (2 * dq + dr), 2 * y + dr
    return x, y


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _dot(a, b):
    return a[0] * b[0] + 3 * a[1] * b[1]


def oracle_expanded_ports(o: int, g: int):
    """Enumerate the ten incident edges of an expanded particle (orientation
    o, tail at global dir g from head) and sort them clockwise starting from
    the local-direction-0 port, preferring the tail's edge."""
    head, tail = (0, 0), G.DIRS[g]
    ports = []
    for d in range(6):
        if d != g:
            ports.append((G.HEAD, d))
        if d != (g + 3) % 6:
            ports.append((G.TAIL, d))
    assert len(ports) == 10

    c = tuple(a + b for a, b in zip(_ivec(head, 0), _ivec(tail, 0)))
    # midpoint of edge (node, d) in the same quarter-unit basis as c:
    # 2*E(node) + E_dir(d) == _ivec(node, d); centroid == E(head) + E(tail)
    centroid = tuple(2 * a + b for a, b in zip(_ivec(head), _ivec(tail)))

    def rel(p):
        role, d = p
        node = head if role == G.HEAD else tail
        m = _ivec(node, d)
        return (2 * m[0] - centroid[0], 2 * m[1] - centroid[1])

    local0 = o % 6
    if local0 != (g + 3) % 6:
        start = (G.TAIL, local0)
    else:
        start = (G.HEAD, local0)
    s = rel(start)

    def half_rank(v):
        c_, d_ = _cross(s, v), _dot(s, v)
        if c_ == 0:
            return 0 if d_ > 0 else 2
        return 1 if c_ < 0 else 3

    def cmp(p1, p2):
        v, w = rel(p1), rel(p2)
        h1, h2 = half_rank(v), half_rank(w)
        if h1 != h2:
            return -1 if h1 < h2 else 1
        x = _cross(v, w)
        assert x != 0, "tie in angular sort"
        return -1 if x < 0 else 1

    return tuple(sorted(ports, key=functools.cmp_to_key(cmp)))


@pytest.mark.parametrize("o", range(6))
@pytest.mark.parametrize("g", range(6))
def test_expanded_port_map_matches_oracle(o, g):
    assert G.expanded_ports_by_tail_dir(o, g) == oracle_expanded_ports(o, g)


def test_expanded_port_count_and_roles():
    for o in range(6):
        for g in range(6):
            ports = G.expanded_ports_by_tail_dir(o, g)
            assert len(ports) == 10
            assert sum(1 for role, _ in ports if role == G.HEAD) == 5
            assert sum(1 for role, _ in ports if role == G.TAIL) == 5
            # head's edge toward tail and tail's edge toward head are absent
            assert (G.HEAD, g) not in ports
            assert (G.TAIL, (g + 3) % 6) not in ports


def test_head_labels_consecutive():
    """The head's five ports carry consecutive labels; for expansion along
    local direction i != 0 these are i..i+4, and for i == 0 they are
    8,9,0,1,2 (label 0 moves to the head's local-0 edge)."""
    for i in range(6):
        labels = G.head_port_labels_for_expansion(i)
        assert all((labels[j + 1] - labels[j]) % 10 == 1 for j in range(4))
        if i != 0:
            assert labels == tuple((i + j) for j in range(5))
        else:
            assert labels == (8, 9, 0, 1, 2)


def test_tail_port_after_expansion_table():
    # label of the tail's far edge after expanding in local direction i
    expected = {0: 5, 1: 8, 2: 9, 3: 0, 4: 1, 5: 2}
    for i in range(6):
        assert G.tail_port_for_expansion(i) == expected[i]


def test_tail_dir_round_trip():
    for o in range(6):
        for i in range(6):
            t = G.tail_port_for_expansion(i)
            g = G.opposite((o + i) % 6)
            assert G.tail_dir_from_tail_port(o, t) == g
            ports = G.expanded_port_map(o, t)
            assert ports[t] == (G.TAIL, g)


def test_ports_zero_and_eight_share_local_zero_when_head_above():
    """Expanding in local direction 5 leaves two ports facing local 0; they
    get labels 0 (tail side) and 8 (head side)."""
    ports = G.expanded_ports_by_tail_dir(0, G.opposite(5))
    facing0 = [p for p in range(10) if ports[p][1] == 0]
    assert facing0 == [0, 8]


def test_contracted_labels_recovered_by_tail_ports():
    """For any expansion not along local 0, label 0 stays on the tail's
    local-0 edge, and the tail's five labels follow clockwise local order,
    so contracting back into the tail restores the original labeling."""
    for o in range(6):
        for i in range(1, 6):
            g = G.opposite((o + i) % 6)
            ports = G.expanded_ports_by_tail_dir(o, g)
            assert ports[0] == (G.TAIL, o % 6)
            tail_seq = [(p, d) for p, (role, d) in enumerate(ports) if role == G.TAIL]
            # labels increase with clockwise local direction
            locals_ = [((d - o) % 6) for _, d in tail_seq]
            labels = [p for p, _ in tail_seq]
            order = sorted(range(5), key=lambda j: locals_[j])
            assert [labels[j] for j in order] == sorted(labels)


def test_rotate_cw_cycles_directions():
    for k in range(6):
        assert G.rotate_cw(G.DIRS[k]) == G.DIRS[(k + 1) % 6]
    v = (3, -2)
    for _ in range(6):
        v = G.rotate_cw(v)
    assert v == (3, -2)


def test_random_neighbor_set_size():
    rng = random.Random(7)
    for _ in range(50):
        v = (rng.randint(-99, 99), rng.randint(-99, 99))
        assert len(set(G.neighbors(v))) == 6
