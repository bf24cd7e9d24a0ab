"""Triangular-lattice geometry: axial coordinates, global directions, and
the port labelings of contracted and expanded particles.

Coordinates are axial pairs (q, r).  The six global directions are numbered
clockwise starting from 0 = East:

    dir 0 = ( 1,  0)   East
    dir 1 = ( 1, -1)   South-East
    dir 2 = ( 0, -1)   South-West
    dir 3 = (-1,  0)   West
    dir 4 = (-1,  1)   North-West
    dir 5 = ( 0,  1)   North-East

so that dir((k + 3) % 6) == -dir(k).

A contracted particle has six ports; port i sits on the edge in global
direction (o + i) % 6 where o is the particle's orientation.  An expanded
particle has ten ports, labeled clockwise around the two-node body starting
from the port facing local direction 0; when both the head and the tail have
an edge facing local direction 0, label 0 goes to the tail's edge (this is
the assignment under which an aborted expansion restores the original
labels, and under which the head's ports get five consecutive labels).
"""

from __future__ import annotations

import math
from functools import lru_cache

Coord = tuple[int, int]

DIRS: tuple[Coord, ...] = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))

#: Sentinel used throughout for "no value" (empty flag, contracted tail port,
#: no expansion direction).  Serialized as "." in system files.
EPS = "."

HEAD = "head"
TAIL = "tail"


def add(v: Coord, w: Coord) -> Coord:
    return (v[0] + w[0], v[1] + w[1])


def neighbor(v: Coord, k: int) -> Coord:
    """Node adjacent to v in global direction k."""
    d = DIRS[k % 6]
    return (v[0] + d[0], v[1] + d[1])


def neighbors(v: Coord) -> list[Coord]:
    """The six neighbors of v, in clockwise global-direction order."""
    return [neighbor(v, k) for k in range(6)]


def opposite(k: int) -> int:
    return (k + 3) % 6


def rotate_cw(v: Coord) -> Coord:
    """Rotate an axial vector 60 degrees clockwise about the origin."""
    q, r = v
    return (q + r, -q)


def to_cartesian(v: Coord) -> tuple[float, float]:
    """Embed an axial coordinate in the plane (y up, x east)."""
    q, r = v
    return (q + r / 2.0, r * (math.sqrt(3.0) / 2.0))


def port_node_contracted(head: Coord, o: int, i: int) -> Coord:
    """Node faced by port i of a contracted particle at `head` with
    orientation o."""
    return neighbor(head, (o + i) % 6)


@lru_cache(maxsize=None)
def _expanded_ports_base(g: int) -> tuple[tuple[str, int], ...]:
    """Port labeling of an expanded particle with orientation 0 whose tail
    lies in global direction g from its head.

    Returns a 10-tuple indexed by port label; entry = (role, global dir)
    where role is HEAD or TAIL (the node owning the edge).
    """
    head = (0, 0)
    tail = DIRS[g]
    hx, hy = to_cartesian(head)
    tx, ty = to_cartesian(tail)
    cx, cy = (hx + tx) / 2.0, (hy + ty) / 2.0

    ports: list[tuple[str, int, float]] = []
    for d in range(6):
        if d != g:  # head's edge toward the tail is internal
            mx, my = to_cartesian(DIRS[d])
            ports.append((HEAD, d, math.atan2(hy + my / 2.0 - cy, hx + mx / 2.0 - cx)))
        if d != opposite(g):  # tail's edge toward the head is internal
            mx, my = to_cartesian(DIRS[d])
            ports.append((TAIL, d, math.atan2(ty + my / 2.0 - cy, tx + mx / 2.0 - cx)))

    # Local direction 0 is global direction 0 in the base frame.  Prefer the
    # tail's edge; the head's is the fallback when the tail's is internal.
    if g != 3:
        start = next(p for p in ports if p[0] == TAIL and p[1] == 0)
    else:
        start = next(p for p in ports if p[0] == HEAD and p[1] == 0)

    two_pi = 2.0 * math.pi
    ordered = sorted(ports, key=lambda p: (start[2] - p[2]) % two_pi)
    return tuple((role, d) for role, d, _ in ordered)


@lru_cache(maxsize=None)
def expanded_ports_by_tail_dir(o: int, g: int) -> tuple[tuple[str, int], ...]:
    """Port labeling for orientation o, tail in global direction g from the
    head.  Entry p = (role, global dir) for port label p."""
    base = _expanded_ports_base((g - o) % 6)
    return tuple((role, (d + o) % 6) for role, d in base)


@lru_cache(maxsize=None)
def tail_port_for_expansion(i: int) -> int:
    """Tail-port label a particle acquires by expanding in local direction i
    (the label of the tail's edge facing away from the head)."""
    # orientation 0: head in global dir i, tail dir from head = i + 3
    g = opposite(i)
    ports = expanded_ports_by_tail_dir(0, g)
    return ports.index((TAIL, g))


@lru_cache(maxsize=None)
def _tail_dir_by_port() -> dict[int, int]:
    """Inverse of tail_port_for_expansion composed with opposite():
    maps a tail-port label t to the base-frame global direction of the tail."""
    out = {}
    for i in range(6):
        out[tail_port_for_expansion(i)] = opposite(i)
    return out


def tail_dir_from_tail_port(o: int, t: int) -> int:
    """Global direction of the tail from the head, given orientation o and
    tail port t."""
    base = _tail_dir_by_port()
    if t not in base:
        raise ValueError(f"impossible tail port {t}")
    return (base[t] + o) % 6


def expanded_port_map(o: int, t: int) -> tuple[tuple[str, int], ...]:
    """Port labeling of an expanded particle given orientation o and tail
    port t.  Entry p = (role, global dir); role HEAD/TAIL names the node the
    edge belongs to."""
    if t == EPS or not isinstance(t, int):
        raise ValueError("expanded_port_map requires an integer tail port")
    return expanded_ports_by_tail_dir(o, tail_dir_from_tail_port(o, t))


def head_port_labels_for_expansion(i: int) -> tuple[int, ...]:
    """The five port labels that land on the head after expanding in local
    direction i, in clockwise label order around the head."""
    g = opposite(i)
    ports = expanded_ports_by_tail_dir(0, g)
    labels = [p for p in range(10) if ports[p][0] == HEAD]
    # rotate so the sequence is consecutive mod 10
    for s in range(5):
        seq = labels[s:] + labels[:s]
        if all((seq[j + 1] - seq[j]) % 10 == 1 for j in range(4)):
            return tuple(seq)
    return tuple(labels)
