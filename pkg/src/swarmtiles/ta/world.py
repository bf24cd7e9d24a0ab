"""Stochastic execution of a Tile Automata system as a world of live
assemblies plus a supply of initial-assembly prototypes.

Each step samples uniformly among the currently applicable events:

  * transitions at adjacent tile pairs matching a rule,
  * combinations (a supply prototype or live assembly attaching to another
    assembly across a seam of strength >= tau),
  * breaks along sub-threshold cuts, checked event-driven: only after a
    transition weakened some incident bond (or every step when the
    full-sweep flag is set).

Caches are maintained incrementally: enabled transition sites, the set of
cells whose states can bind anything (partner-bearing), and an index of
exposed faces by affinity key, so a step's cost tracks the local change.
Runs are deterministic for a given seed.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .assembly import Cell, bond_weight, is_connected, positive_bond_components, translate
from .system import H, INF, V, Rule, TASystem

FACES = ("E", "W", "N", "S")
_DELTA = {"E": (1, 0), "W": (-1, 0), "N": (0, 1), "S": (0, -1)}
_OPP = {"E": "W", "W": "E", "N": "S", "S": "N"}


@dataclass(frozen=True)
class WTransition:
    aid: int
    c1: Cell
    c2: Cell
    d: str
    rule: Rule


@dataclass(frozen=True)
class WCombine:
    target: tuple  # ("live", aid) or ("proto", index)
    source: tuple
    offset: tuple[int, int]


@dataclass(frozen=True)
class WBreak:
    aid: int
    piece: frozenset


@dataclass
class EventRecord:
    step: int
    kind: str
    tag: str
    aid: int
    detail: dict

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "kind": self.kind,
            "tag": self.tag,
            "aid": self.aid,
            "detail": self.detail,
        }


class World:
    def __init__(self, system: TASystem, seed: int = 0, full_break_sweep: bool = False):
        self.system = system
        self.rng = random.Random(seed)
        self.seed = seed
        self.full_break_sweep = full_break_sweep
        self.step_count = 0

        self.assemblies: dict[int, dict[Cell, int]] = {}
        self.labels: dict[int, str] = {}
        self._next_aid = 0

        reg = system.registry
        self._affkey = reg.affinity_key
        # (affkey, face) -> partner affkeys with a positive entry
        self.face_partners: dict[tuple[str, str], list[str]] = {}
        for (k1, k2, d), w in system.affinity.table.items():
            if w <= 0:
                continue
            if d == H:
                self.face_partners.setdefault((k1, "E"), []).append(k2)
                self.face_partners.setdefault((k2, "W"), []).append(k1)
            else:
                self.face_partners.setdefault((k1, "S"), []).append(k2)
                self.face_partners.setdefault((k2, "N"), []).append(k1)
        self.partner_bearing = {k for k, _f in self.face_partners}

        # exposed faces of partner-bearing cells: (affkey, face) -> {(owner, cell)}
        # owner is ("live", aid) or ("proto", idx)
        self.exposed: dict[tuple[str, str], set] = {}
        self.enabled: dict[int, dict[tuple[Cell, Cell, str], list[Rule]]] = {}
        self.pb_cells: dict[int, set[Cell]] = {}
        self.dirty: set[int] = set()

        self.supply: list[dict] = []
        for idx, ia in enumerate(system.initial):
            entry = {"tiles": dict(ia.tiles), "count": ia.count, "name": ia.name}
            self.supply.append(entry)
            if ia.count == INF:
                self._index_proto(idx)
            else:
                for _ in range(ia.count):
                    self._spawn(dict(ia.tiles), ia.name)
                entry["count"] = 0

    # -- cache plumbing ----------------------------------------------------

    def _key(self, sid: int) -> str:
        return self._affkey[sid]

    def _index_proto(self, idx: int):
        tiles = self.supply[idx]["tiles"]
        owner = ("proto", idx)
        for cell, sid in tiles.items():
            k = self._key(sid)
            if k not in self.partner_bearing:
                continue
            for face in FACES:
                dx, dy = _DELTA[face]
                if (cell[0] + dx, cell[1] + dy) not in tiles:
                    self.exposed.setdefault((k, face), set()).add((owner, cell))

    def _spawn(self, tiles: dict[Cell, int], label: str) -> int:
        aid = self._next_aid
        self._next_aid += 1
        self.assemblies[aid] = tiles
        self.labels[aid] = label
        self.enabled[aid] = {}
        self.pb_cells[aid] = set()
        for cell in tiles:
            self._rescan_cell_pairs(aid, cell)
            self._index_cell(aid, cell)
        self.dirty.add(aid)
        return aid

    def _drop_assembly(self, aid: int):
        for cell in list(self.pb_cells.get(aid, ())):
            self._unindex_cell(aid, cell)
        self.assemblies.pop(aid, None)
        self.labels.pop(aid, None)
        self.enabled.pop(aid, None)
        self.pb_cells.pop(aid, None)
        self.dirty.discard(aid)

    def _index_cell(self, aid: int, cell: Cell):
        tiles = self.assemblies[aid]
        k = self._key(tiles[cell])
        if k not in self.partner_bearing:
            return
        owner = ("live", aid)
        added = False
        for face in FACES:
            dx, dy = _DELTA[face]
            if (cell[0] + dx, cell[1] + dy) not in tiles:
                self.exposed.setdefault((k, face), set()).add((owner, cell))
                added = True
        if added or True:
            self.pb_cells[aid].add(cell)

    def _unindex_cell(self, aid: int, cell: Cell, old_sid: Optional[int] = None):
        tiles = self.assemblies.get(aid, {})
        sid = old_sid if old_sid is not None else tiles.get(cell)
        if sid is None:
            return
        k = self._key(sid)
        owner = ("live", aid)
        for face in FACES:
            bucket = self.exposed.get((k, face))
            if bucket:
                bucket.discard((owner, cell))
        self.pb_cells.get(aid, set()).discard(cell)

    def _rescan_cell_pairs(self, aid: int, cell: Cell):
        """Recompute enabled transitions for the pairs this cell is part of."""
        tiles = self.assemblies[aid]
        enabled = self.enabled[aid]
        x, y = cell
        pairs = (
            ((x, y), (x + 1, y), H),
            ((x - 1, y), (x, y), H),
            ((x, y + 1), (x, y), V),
            ((x, y), (x, y - 1), V),
        )
        for c1, c2, d in pairs:
            key = (c1, c2, d)
            if c1 in tiles and c2 in tiles:
                rules = self.system.rules.lookup(tiles[c1], tiles[c2], d)
                if rules:
                    enabled[key] = rules
                else:
                    enabled.pop(key, None)
            else:
                enabled.pop(key, None)

    def _refresh_cell(self, aid: int, cell: Cell, old_sid: Optional[int]):
        self._unindex_cell(aid, cell, old_sid)
        self._index_cell(aid, cell)
        self._rescan_cell_pairs(aid, cell)

    # -- event enumeration ---------------------------------------------------

    def _order_key(self, owner) -> tuple:
        kind, ident = owner
        if kind == "live":
            return (len(self.assemblies[ident]), 0, ident)
        return (len(self.supply[ident]["tiles"]), 1, ident)

    def _owner_tiles(self, owner) -> dict[Cell, int]:
        kind, ident = owner
        if kind == "live":
            return self.assemblies[ident]
        return self.supply[ident]["tiles"]

    def _combine_events(self) -> list[WCombine]:
        out = []
        seen = set()
        sources: list[tuple] = []
        for idx, entry in enumerate(self.supply):
            if entry["count"] == INF or entry["count"] > 0:
                sources.append(("proto", idx))
        for aid in self.assemblies:
            if self.pb_cells.get(aid):
                sources.append(("live", aid))

        for src in sources:
            stiles = self._owner_tiles(src)
            cells = (
                self.pb_cells[src[1]]
                if src[0] == "live"
                else [c for c, s in stiles.items() if self._key(s) in self.partner_bearing]
            )
            for cell in cells:
                k = self._key(stiles[cell])
                for face in FACES:
                    dx, dy = _DELTA[face]
                    if (cell[0] + dx, cell[1] + dy) in stiles:
                        continue
                    for pk in self.face_partners.get((k, face), ()):
                        for tgt, tcell in self.exposed.get((pk, _OPP[face]), ()):
                            if tgt == src:
                                if src[0] == "live":
                                    continue
                                entry = self.supply[src[1]]
                                if entry["count"] != INF and entry["count"] < 2:
                                    continue
                            if self._order_key(src) > self._order_key(tgt):
                                continue
                            # source cell must land beside the target cell
                            spos = (tcell[0] - dx, tcell[1] - dy)
                            off = (spos[0] - cell[0], spos[1] - cell[1])
                            sig = (src, tgt, off)
                            if sig in seen:
                                continue
                            seen.add(sig)
                            ttiles = self._owner_tiles(tgt)
                            moved = translate(stiles, *off)
                            if any(c in ttiles for c in moved):
                                continue
                            union = dict(ttiles)
                            union.update(moved)
                            strength = 0
                            for mc in moved:
                                for fdx, fdy in _DELTA.values():
                                    nb = (mc[0] + fdx, mc[1] + fdy)
                                    if nb in ttiles:
                                        strength += bond_weight(
                                            union, mc, nb, self.system.affinity
                                        )
                            if strength >= self.system.tau:
                                out.append(WCombine(tgt, src, off))
        out.sort(key=lambda e: (self._order_key(e.target), self._order_key(e.source), e.offset))
        return out

    def _break_events(self) -> list[WBreak]:
        from .engine import break_candidates

        out = []
        check = sorted(self.assemblies) if self.full_break_sweep else sorted(self.dirty)
        still_dirty = set()
        for aid in check:
            if aid not in self.assemblies:
                continue
            pieces = break_candidates(
                self.assemblies[aid], self.system.affinity, self.system.tau
            )
            if pieces:
                still_dirty.add(aid)
                for piece in pieces:
                    out.append(WBreak(aid, piece))
        self.dirty = still_dirty
        out.sort(key=lambda e: (e.aid, sorted(e.piece)))
        return out

    def applicable_events(self) -> list:
        events: list = []
        for aid in sorted(self.enabled):
            for (c1, c2, d), rules in sorted(self.enabled[aid].items()):
                for rule in rules:
                    events.append(WTransition(aid, c1, c2, d, rule))
        events.extend(self._combine_events())
        events.extend(self._break_events())
        return events

    # -- event application -----------------------------------------------------

    def _apply_transition(self, ev: WTransition) -> EventRecord:
        tiles = self.assemblies[ev.aid]
        if tiles.get(ev.c1) != ev.rule.s1a or tiles.get(ev.c2) != ev.rule.s2a:
            raise RuntimeError("stale transition event")
        affin = self.system.affinity
        incident = []
        for cell in (ev.c1, ev.c2):
            for dx, dy in _DELTA.values():
                nb = (cell[0] + dx, cell[1] + dy)
                if nb in tiles:
                    incident.append((cell, nb, bond_weight(tiles, cell, nb, affin)))
        old1, old2 = tiles[ev.c1], tiles[ev.c2]
        tiles[ev.c1] = ev.rule.s1b
        tiles[ev.c2] = ev.rule.s2b
        weakened = any(
            bond_weight(tiles, a, b, affin) < w for a, b, w in incident
        )
        if weakened:
            self.dirty.add(ev.aid)
        self._refresh_cell(ev.aid, ev.c1, old1)
        self._refresh_cell(ev.aid, ev.c2, old2)
        # pairs between c1/c2 and their other neighbors may now match rules
        for cell in (ev.c1, ev.c2):
            for dx, dy in _DELTA.values():
                nb = (cell[0] + dx, cell[1] + dy)
                if nb in tiles and nb not in (ev.c1, ev.c2):
                    self._rescan_cell_pairs(ev.aid, nb)
        reg = self.system.registry
        return EventRecord(
            self.step_count,
            "transition",
            ev.rule.tag,
            ev.aid,
            {
                "cells": [list(ev.c1), list(ev.c2)],
                "d": ev.d,
                "from": [reg.name(ev.rule.s1a), reg.name(ev.rule.s2a)],
                "to": [reg.name(ev.rule.s1b), reg.name(ev.rule.s2b)],
            },
        )

    def _materialize(self, owner) -> int:
        kind, ident = owner
        if kind == "live":
            return ident
        entry = self.supply[ident]
        if entry["count"] != INF:
            if entry["count"] <= 0:
                raise RuntimeError("supply exhausted")
            entry["count"] -= 1
        return self._spawn(dict(entry["tiles"]), entry["name"])

    def _apply_combine(self, ev: WCombine) -> EventRecord:
        taid = self._materialize(ev.target)
        said = self._materialize(ev.source)
        ttiles = self.assemblies[taid]
        stiles = self.assemblies[said]
        moved = translate(stiles, *ev.offset)
        if any(c in ttiles for c in moved):
            raise RuntimeError("stale combine event: overlap")
        source_label = self.labels[said]
        # strip the source's cache entries, then merge into the target
        self._drop_assembly(said)
        covered = []
        for mc in moved:
            for dx, dy in _DELTA.values():
                nb = (mc[0] + dx, mc[1] + dy)
                if nb in ttiles:
                    covered.append(nb)
        ttiles.update(moved)
        for mc in moved:
            self._refresh_cell(taid, mc, None)
        for nb in set(covered):
            # faces got covered; re-derive exposure and pair sites
            self._refresh_cell(taid, nb, ttiles[nb])
        return EventRecord(
            self.step_count,
            "combine",
            f"attach:{source_label}",
            taid,
            {"source": source_label, "offset": list(ev.offset), "cells": len(moved)},
        )

    def _apply_break(self, ev: WBreak) -> EventRecord:
        tiles = self.assemblies[ev.aid]
        piece = {c: tiles[c] for c in ev.piece if c in tiles}
        if len(piece) != len(ev.piece) or len(piece) >= len(tiles):
            raise RuntimeError("stale break event")
        rest_label = self.labels[ev.aid]
        for c in ev.piece:
            tiles.pop(c)
        boundary = []
        for c in ev.piece:
            for dx, dy in _DELTA.values():
                nb = (c[0] + dx, c[1] + dy)
                if nb in tiles:
                    boundary.append(nb)
        # purge cache entries for removed cells
        enabled = self.enabled[ev.aid]
        for key in [k for k in enabled if k[0] in ev.piece or k[1] in ev.piece]:
            enabled.pop(key)
        owner = ("live", ev.aid)
        for c in ev.piece:
            sid = piece[c]
            k = self._key(sid)
            for face in FACES:
                bucket = self.exposed.get((k, face))
                if bucket:
                    bucket.discard((owner, c))
            self.pb_cells[ev.aid].discard(c)
        for nb in set(boundary):
            self._refresh_cell(ev.aid, nb, tiles[nb])
        self.dirty.add(ev.aid)
        new_aid = self._spawn(piece, f"{rest_label}-frag")
        return EventRecord(
            self.step_count,
            "break",
            "detach",
            ev.aid,
            {"piece_aid": new_aid, "piece_cells": len(piece)},
        )

    def apply(self, ev) -> EventRecord:
        if isinstance(ev, WTransition):
            rec = self._apply_transition(ev)
        elif isinstance(ev, WCombine):
            rec = self._apply_combine(ev)
        elif isinstance(ev, WBreak):
            rec = self._apply_break(ev)
        else:
            raise RuntimeError(f"unknown event {ev!r}")
        self.step_count += 1
        return rec

    def step(self) -> Optional[EventRecord]:
        events = self.applicable_events()
        if not events:
            return None
        return self.apply(events[self.rng.randrange(len(events))])

    def run(
        self,
        max_events: int,
        on_event: Optional[Callable[[EventRecord], None]] = None,
    ) -> list[EventRecord]:
        records = []
        for _ in range(max_events):
            rec = self.step()
            if rec is None:
                break
            records.append(rec)
            if on_event is not None:
                on_event(rec)
        return records

    def clone(self) -> "World":
        import copy

        other = World.__new__(World)
        other.system = self.system
        other.rng = random.Random()
        other.rng.setstate(self.rng.getstate())
        other.seed = self.seed
        other.full_break_sweep = self.full_break_sweep
        other.step_count = self.step_count
        other.assemblies = {aid: dict(t) for aid, t in self.assemblies.items()}
        other.labels = dict(self.labels)
        other._next_aid = self._next_aid
        other._affkey = self._affkey
        other.face_partners = self.face_partners
        other.partner_bearing = self.partner_bearing
        other.exposed = {k: set(v) for k, v in self.exposed.items()}
        other.enabled = {aid: dict(e) for aid, e in self.enabled.items()}
        other.pb_cells = {aid: set(v) for aid, v in self.pb_cells.items()}
        other.dirty = set(self.dirty)
        other.supply = [dict(e) for e in self.supply]
        return other

    def fingerprint(self) -> tuple:
        """Hashable snapshot of the whole world (assemblies up to identity,
        supply counts)."""
        asms = tuple(
            sorted(tuple(sorted(t.items())) for t in self.assemblies.values())
        )
        counts = tuple(e["count"] for e in self.supply)
        return (asms, counts)


def write_ta_trace(records: list[EventRecord], path: str | Path, header: dict):
    with open(path, "w") as fh:
        fh.write(json.dumps({"kind": "ta-trace", **header}) + "\n")
        for rec in records:
            fh.write(json.dumps(rec.to_json()) + "\n")


def run_stochastic(
    system: TASystem, seed: int, max_events: int, full_break_sweep: bool = False
) -> tuple[World, list[EventRecord]]:
    world = World(system, seed=seed, full_break_sweep=full_break_sweep)
    records = world.run(max_events)
    return world, records
