"""The 100-cell macrotile: a 10x10 brick in a brick-wall tessellation whose
adjacency graph is the triangular grid graph.

Rows of bricks are offset by 5 columns, so a brick at particle coordinate
(q, r) occupies the square with origin (10q + 5r, 10r) and touches exactly
six neighbors, matching the particle lattice directions:

    0 E  (+10,  0)     1 SE (+5, -10)    2 SW (-5, -10)
    3 W  (-10,  0)     4 NW (-5, +10)    5 NE (+5, +10)

Inside the brick (offsets x right, y up, 0..9):

  * central clock CC=(5,5); timing slot TS=(6,5) is left empty and accepts
    the timing tile; aggregate subordinate AG=(4,5) holds (t, e, flags);
    configuration snapshot CF=(3,5).
  * six wire subordinates SUB[k] ring the clock; each direction k has a
    disjoint wire from its subordinate to the flag cell FLAG[k] at the
    midpoint of seam k, and flag cells of adjacent bricks meet edge-to-edge
    across every seam.
"""

from __future__ import annotations

from dataclasses import dataclass
from ..geometry import Coord

SIZE = 10

CC = (5, 5)
TS = (6, 5)
AG = (4, 5)
CF = (3, 5)

SUB = {0: (6, 4), 1: (5, 4), 2: (4, 4), 3: (4, 6), 4: (5, 6), 5: (6, 6)}

WIRE = {
    0: [(7, 4), (8, 4)],
    1: [(5, 3), (6, 3), (7, 3), (7, 2), (7, 1)],
    2: [(4, 3), (3, 3), (2, 3), (2, 2), (2, 1)],
    3: [(3, 6), (2, 6), (1, 6), (0, 6), (0, 5)],
    4: [(5, 7), (4, 7), (3, 7), (2, 7), (2, 8)],
    5: [(6, 7), (6, 8), (6, 9)],
}

FLAG = {0: (9, 4), 1: (7, 0), 2: (2, 0), 3: (0, 4), 4: (2, 9), 5: (7, 9)}

# bank hops between CC and each wire's subordinate (outbound order)
HOPS = {
    0: [SUB[1], SUB[0]],
    1: [SUB[1]],
    2: [SUB[1], SUB[2]],
    3: [SUB[4], SUB[3]],
    4: [SUB[4]],
    5: [SUB[4], SUB[5]],
}

#: origin displacement of the neighboring brick in particle direction k
ORIGIN_STEP = {
    0: (10, 0),
    1: (5, -10),
    2: (-5, -10),
    3: (-10, 0),
    4: (-5, 10),
    5: (5, 10),
}


def origin(v: Coord) -> Coord:
    q, r = v
    return (10 * q + 5 * r, 10 * r)


def decompose(cell: Coord) -> tuple[Coord, Coord]:
    """Particle coordinate and in-brick offset of an absolute cell."""
    x, y = cell
    r = y // 10
    q = (x - 5 * r) // 10
    ox, oy = x - (10 * q + 5 * r), y - 10 * r
    return (q, r), (ox, oy)


@dataclass(frozen=True)
class MacrotileLayout:
    """Role map of the brick plus derived routing tables."""

    size: int = SIZE

    @property
    def cells(self) -> frozenset:
        return frozenset((x, y) for x in range(SIZE) for y in range(SIZE))

    def roles(self) -> dict[Coord, tuple]:
        role: dict[Coord, tuple] = {}
        for cell in self.cells:
            role[cell] = ("filler",)
        role[CC] = ("central-clock",)
        role[TS] = ("timing-slot",)
        role[AG] = ("aggregate",)
        role[CF] = ("configuration",)
        for k, cell in SUB.items():
            role[cell] = ("subordinate-clock", k)
        for k, cells in WIRE.items():
            for i, cell in enumerate(cells):
                role[cell] = ("wire", k, i)
        for k, cell in FLAG.items():
            role[cell] = ("flag", k)
        return role

    def tile_offsets(self) -> list[Coord]:
        """Offsets that carry a tile (everything except the timing slot)."""
        return sorted(self.cells - {TS})

    def wire_path(self, k: int) -> list[Coord]:
        """Cells a direction-k signal passes, central clock to flag cell."""
        return [CC] + HOPS[k] + WIRE[k] + [FLAG[k]]

    def filler_offsets(self) -> list[Coord]:
        return sorted(c for c, r in self.roles().items() if r == ("filler",))

    def seam_contacts(self, k: int) -> list[tuple[Coord, Coord]]:
        """Pairs (my offset, neighbor offset) of cells that touch across
        seam k."""
        step = ORIGIN_STEP[k]
        out = []
        for (x, y) in self.cells:
            # absolute: mine at (x, y), neighbor cell at (nx, ny) + step
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ax, ay = x + dx, y + dy
                nx, ny = ax - step[0], ay - step[1]
                if 0 <= nx < SIZE and 0 <= ny < SIZE and not (0 <= ax < SIZE and 0 <= ay < SIZE):
                    out.append(((x, y), (nx, ny)))
        return sorted(set(out))

    def to_json(self) -> dict:
        roles = self.roles()
        return {
            "size": SIZE,
            "cells": sorted(list(c) for c in self.cells),
            "roles": {f"{x},{y}": list(roles[(x, y)]) for (x, y) in sorted(roles)},
            "wires": {str(k): [list(c) for c in WIRE[k]] for k in WIRE},
            "wire_paths": {str(k): [list(c) for c in self.wire_path(k)] for k in WIRE},
            "flags": {str(k): list(FLAG[k]) for k in FLAG},
            "origin_step": {str(k): list(v) for k, v in ORIGIN_STEP.items()},
        }


LAYOUT = MacrotileLayout()


def internal_adjacent_pairs() -> list[tuple[Coord, Coord, str]]:
    """All adjacent offset pairs inside the brick, in affinity key order:
    horizontal pairs as (left, right, "h"), vertical as (upper, lower, "v")."""
    out = []
    for x in range(SIZE):
        for y in range(SIZE):
            if x + 1 < SIZE:
                out.append(((x, y), (x + 1, y), "h"))
            if y - 1 >= 0:
                out.append(((x, y), (x, y - 1), "v"))
    return out


def seam_flag_geometry(k: int) -> tuple[str, bool]:
    """Orientation of the bond between my flag cell k and the neighbor's
    facing flag cell: (direction, mine_first) where mine_first means my
    state is the left/upper key of the affinity entry."""
    step = ORIGIN_STEP[k]
    mine = (FLAG[k][0], FLAG[k][1])
    theirs_abs = (FLAG[(k + 3) % 6][0] + step[0], FLAG[(k + 3) % 6][1] + step[1])
    dx, dy = theirs_abs[0] - mine[0], theirs_abs[1] - mine[1]
    assert abs(dx) + abs(dy) == 1, f"seam {k} flag cells not adjacent"
    if dx == 1:
        return "h", True
    if dx == -1:
        return "h", False
    if dy == -1:
        return "v", True
    return "v", False
