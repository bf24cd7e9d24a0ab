"""Event semantics and execution for Tile Automata systems.

Three event kinds drive everything: pairwise state transitions, seam
combinations of two assemblies, and breaks along sub-threshold cuts.
`explore` computes the bounded closure of the initial stock under all
three (the producible set, with terminal members flagged);
`run_stochastic` plays one world forward, sampling uniformly among the
currently applicable events, with initial assemblies acting as a supply
with multiplicities.

The world keeps incremental caches (enabled transition sites, socket
cells with positive-affinity partners, a state index) so a step costs
time proportional to the local change, not the assembly size.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .assembly import (
    Cell,
    bond_weight,
    canonical_form,
    is_connected,
    is_stable,
    min_cut,
    positive_bond_components,
    translate,
)
from .system import H, INF, V, AffinityFunction, Rule, TASystem

SMALL_BREAK_LIMIT = 10  # exhaustive sub-tau cut search up to this many tiles


class TAEngineError(Exception):
    pass


# ---------------------------------------------------------------------------
# pure event application (also the unit under test for the engine oracles)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    c1: Cell
    c2: Cell
    d: str
    rule: Rule


@dataclass(frozen=True)
class CombineWith:
    other: tuple  # canonical tiles of the partner, as dict via .tiles
    offset: tuple[int, int]


@dataclass(frozen=True)
class BreakOff:
    piece: frozenset


def transition_sites(tiles: dict[Cell, int], rules) -> list[Transition]:
    """Every adjacent pair matching some rule, honoring the orientation
    conventions (horizontal keyed left-right, vertical upper-lower)."""
    out = []
    for (x, y), s in tiles.items():
        right = (x + 1, y)
        if right in tiles:
            for rule in rules.lookup(s, tiles[right], H):
                out.append(Transition((x, y), right, H, rule))
        below = (x, y - 1)
        if below in tiles:
            for rule in rules.lookup(s, tiles[below], V):
                out.append(Transition((x, y), below, V, rule))
    return out


def apply_transition(tiles: dict[Cell, int], ev: Transition) -> dict[Cell, int]:
    if tiles.get(ev.c1) != ev.rule.s1a or tiles.get(ev.c2) != ev.rule.s2a:
        raise TAEngineError("transition rule does not match the site")
    new = dict(tiles)
    new[ev.c1] = ev.rule.s1b
    new[ev.c2] = ev.rule.s2b
    return new


def seam_strength(
    a: dict[Cell, int], b: dict[Cell, int], affinity: AffinityFunction
) -> int:
    """Total affinity across the contact edges of two disjoint tile sets
    (b already translated into a's frame)."""
    total = 0
    union = dict(a)
    union.update(b)
    for (x, y) in b:
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            n = (x + dx, y + dy)
            if n in a:
                total += bond_weight(union, (x, y), n, affinity)
    return total


def combination_placements(
    a: dict[Cell, int],
    b: dict[Cell, int],
    affinity: AffinityFunction,
    tau: int,
) -> list[tuple[int, int]]:
    """Offsets v such that translate(b, v) touches a without overlap and the
    seam strength is at least tau.  Candidates come from boundary matching:
    any qualifying placement has some positive-affinity contact pair."""
    partners = affinity.partners()
    by_state: dict[int, list[Cell]] = {}
    for cell, s in b.items():
        by_state.setdefault(s, []).append(cell)

    reg = affinity.registry
    b_keys = {reg.affinity_key[s] for s in b.values()}
    candidates: set[tuple[int, int]] = set()
    for (ax, ay), s in a.items():
        for other_key, d, side, _w in partners.get(reg.affinity_key[s], ()):
            if other_key not in b_keys:
                continue
            # where must the partner tile sit relative to (ax, ay)?
            if d == H:
                delta = (1, 0) if side == "first" else (-1, 0)
            else:
                delta = (0, -1) if side == "first" else (0, 1)
            target = (ax + delta[0], ay + delta[1])
            if target in a:
                continue
            for sid, cells in by_state.items():
                if reg.affinity_key[sid] != other_key:
                    continue
                for (bx, by) in cells:
                    candidates.add((target[0] - bx, target[1] - by))

    out = []
    for off in candidates:
        moved = translate(b, *off)
        if any(c in a for c in moved):
            continue
        if seam_strength(a, moved, affinity) >= tau:
            out.append(off)
    return sorted(out)


def break_candidates(
    tiles: dict[Cell, int], affinity: AffinityFunction, tau: int
) -> list[frozenset]:
    """Pieces that can split off along a cut of strength < tau.  Exhaustive
    over connected 2-partitions for small assemblies; for larger ones only
    zero-strength splits (components of the positive-bond graph) are
    reported, which is exact for tau == 1."""
    if len(tiles) <= 1:
        return []
    comps = positive_bond_components(tiles, affinity)
    if len(comps) > 1:
        return [frozenset(c) for c in comps[1:]]
    if tau <= 1:
        return []
    if len(tiles) > SMALL_BREAK_LIMIT:
        return []
    cells = sorted(tiles)
    n = len(cells)
    out = []
    seen = set()
    anchor = cells[0]
    for mask in range(1, (1 << n) - 1):
        piece = frozenset(cells[i] for i in range(n) if mask & (1 << i))
        if anchor in piece:
            continue  # enumerate each split once (anchor stays in the rest)
        rest = frozenset(cells) - piece
        if not is_connected(piece) or not is_connected(rest):
            continue
        cut = 0
        for (x, y) in piece:
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nb = (x + dx, y + dy)
                if nb in rest:
                    cut += bond_weight(tiles, (x, y), nb, affinity)
        if cut < tau:
            key = piece
            if key not in seen:
                seen.add(key)
                out.append(piece)
    return out


def apply_event(tiles: dict[Cell, int], event, system: TASystem):
    """Apply one event to a positioned assembly; returns the list of
    resulting assemblies (two for a break, one otherwise)."""
    if isinstance(event, Transition):
        return [apply_transition(tiles, event)]
    if isinstance(event, CombineWith):
        other = dict(event.other)
        moved = translate(other, *event.offset)
        if any(c in tiles for c in moved):
            raise TAEngineError("combination overlaps")
        if seam_strength(tiles, moved, system.affinity) < system.tau:
            raise TAEngineError("combination seam below threshold")
        union = dict(tiles)
        union.update(moved)
        return [union]
    if isinstance(event, BreakOff):
        piece = {c: tiles[c] for c in event.piece}
        rest = {c: s for c, s in tiles.items() if c not in event.piece}
        if not piece or not rest:
            raise TAEngineError("break piece must be a proper subset")
        cut = 0
        for (x, y) in piece:
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nb = (x + dx, y + dy)
                if nb in rest:
                    cut += bond_weight(tiles, (x, y), nb, system.affinity)
        if cut >= system.tau:
            raise TAEngineError("break cut is not below threshold")
        for part in (piece, rest):
            if not is_connected(part):
                raise TAEngineError("break piece is disconnected")
            if not is_stable(part, system.affinity, system.tau):
                raise TAEngineError("break produces an unstable piece")
        return [rest, piece]
    raise TAEngineError(f"unknown event {event!r}")


# ---------------------------------------------------------------------------
# bounded producibility exploration
# ---------------------------------------------------------------------------


@dataclass
class ExploreResult:
    produced: dict[tuple, dict[Cell, int]]
    terminal: list[tuple]
    bound_hit: bool
    rounds: int


def explore(system: TASystem, depth_bound: int, count_bound: int) -> ExploreResult:
    """Closure of the initial assemblies under combine/break/transition, up
    to `depth_bound` rounds and `count_bound` distinct assemblies."""
    produced: dict[tuple, dict[Cell, int]] = {}
    for ia in system.initial:
        produced.setdefault(canonical_form(ia.tiles), dict(ia.tiles))
    bound_hit = False
    rounds = 0
    frontier = list(produced)
    for rounds in range(1, depth_bound + 1):
        new: dict[tuple, dict[Cell, int]] = {}

        def consider(tiles):
            nonlocal bound_hit
            key = canonical_form(tiles)
            if key not in produced and key not in new:
                if len(produced) + len(new) >= count_bound:
                    bound_hit = True
                    return
                new[key] = tiles

        for key in frontier:
            tiles = produced[key]
            for ev in transition_sites(tiles, system.rules):
                consider(apply_transition(tiles, ev))
            for piece in break_candidates(tiles, system.affinity, system.tau):
                rest = {c: s for c, s in tiles.items() if c not in piece}
                consider({c: tiles[c] for c in piece})
                consider(rest)
        # combinations: frontier x everything produced so far
        snapshot = list(produced.items())
        for key in frontier:
            a = produced[key]
            for okey, b in snapshot:
                for off in combination_placements(a, b, system.affinity, system.tau):
                    moved = translate(b, *off)
                    union = dict(a)
                    union.update(moved)
                    consider(union)
        if not new:
            break
        produced.update(new)
        frontier = list(new)

    terminal = []
    for key, tiles in produced.items():
        if transition_sites(tiles, system.rules):
            continue
        if break_candidates(tiles, system.affinity, system.tau):
            continue
        combinable = False
        for okey, b in produced.items():
            if combination_placements(tiles, b, system.affinity, system.tau):
                combinable = True
                break
        if not combinable:
            terminal.append(key)
    return ExploreResult(produced, terminal, bound_hit, rounds)
