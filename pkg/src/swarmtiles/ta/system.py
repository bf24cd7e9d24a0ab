"""Tile Automata system definition: state registry, affinity function,
transition rules, initial-assembly stock, and the stability threshold.

States are interned to integer ids.  Affinities are stored over per-state
*affinity keys* (default: the state's own name); compiled systems map many
payload-carrying states onto one key so the bond table stays compact while
remaining an ordinary map from state pairs to strengths.

Directions: "h" is the side-by-side orientation keyed (left, right),
"v" is above-below keyed (upper, lower).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

H = "h"
V = "v"
INF = "INF"


class StateRegistry:
    def __init__(self):
        self.names: list[str] = []
        self.ids: dict[str, int] = {}
        self.affinity_key: list[str] = []

    def register(self, name: str, affinity_key: Optional[str] = None) -> int:
        if name in self.ids:
            sid = self.ids[name]
            if affinity_key is not None and self.affinity_key[sid] != affinity_key:
                raise ValueError(f"state {name} re-registered with a new affinity key")
            return sid
        sid = len(self.names)
        self.names.append(name)
        self.ids[name] = sid
        self.affinity_key.append(affinity_key if affinity_key is not None else name)
        return sid

    def id(self, name: str) -> int:
        return self.ids[name]

    def name(self, sid: int) -> str:
        return self.names[sid]

    def __len__(self):
        return len(self.names)

    def __contains__(self, name: str):
        return name in self.ids


class AffinityFunction:
    """Map (affinity key, affinity key, direction) -> strength; absent
    entries mean strength 0."""

    def __init__(self, registry: StateRegistry):
        self.registry = registry
        self.table: dict[tuple[str, str, str], int] = {}

    def set(self, k1: str, k2: str, d: str, strength: int):
        if strength < 0:
            raise ValueError("affinity strength must be non-negative")
        if d not in (H, V):
            raise ValueError(f"bad direction {d}")
        self.table[(k1, k2, d)] = strength

    def strength_keys(self, k1: str, k2: str, d: str) -> int:
        return self.table.get((k1, k2, d), 0)

    def strength(self, s1: int, s2: int, d: str) -> int:
        ak = self.registry.affinity_key
        return self.table.get((ak[s1], ak[s2], d), 0)

    def partners(self) -> dict[str, list[tuple[str, str, str, int]]]:
        """For each affinity key, the entries it participates in, as
        (other key, direction, side, strength); side is "first"/"second"
        meaning the key's position in the table entry."""
        out: dict[str, list[tuple[str, str, str, int]]] = {}
        for (k1, k2, d), w in self.table.items():
            if w <= 0:
                continue
            out.setdefault(k1, []).append((k2, d, "first", w))
            out.setdefault(k2, []).append((k1, d, "second", w))
        return out


@dataclass(frozen=True)
class Rule:
    """Pairwise state transition: adjacent tiles in states (s1a, s2a) with
    orientation d may become (s1b, s2b).  For d == "h" tile 1 is the left
    tile; for d == "v" tile 1 is the upper tile.  `tag` labels the rule for
    traces (signal names in compiled systems)."""

    s1a: int
    s2a: int
    s1b: int
    s2b: int
    d: str
    tag: str = ""

    @property
    def single(self) -> bool:
        return self.s1a == self.s1b or self.s2a == self.s2b


class RuleSet:
    def __init__(self):
        self.rules: list[Rule] = []
        self.by_input: dict[tuple[int, int, str], list[Rule]] = {}

    def add(self, rule: Rule):
        self.rules.append(rule)
        self.by_input.setdefault((rule.s1a, rule.s2a, rule.d), []).append(rule)

    def lookup(self, s1: int, s2: int, d: str) -> list[Rule]:
        return self.by_input.get((s1, s2, d), ())

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)


@dataclass
class InitialAssembly:
    """Prototype assembly with a multiplicity (an int or INF)."""

    tiles: dict[tuple[int, int], int]
    count: int | str
    name: str = ""


@dataclass
class TASystem:
    registry: StateRegistry
    affinity: AffinityFunction
    initial: list[InitialAssembly]
    rules: RuleSet
    tau: int
    name: str = "ta-system"

    def check(self) -> list[str]:
        problems = []
        if self.tau < 1:
            problems.append("tau must be a positive integer")
        n = len(self.registry)
        for r in self.rules:
            for s in (r.s1a, r.s2a, r.s1b, r.s2b):
                if not 0 <= s < n:
                    problems.append(f"rule references unregistered state {s}")
        for ia in self.initial:
            if ia.count != INF and (not isinstance(ia.count, int) or ia.count < 0):
                problems.append(f"bad assembly count {ia.count}")
            for sid in ia.tiles.values():
                if not 0 <= sid < n:
                    problems.append("initial assembly uses unregistered state")
        return problems


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------


class TAFileError(Exception):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.message = message


def parse_ta_system(text: str, name: str = "ta-system") -> TASystem:
    registry = StateRegistry()
    affinity = AffinityFunction(registry)
    rules = RuleSet()
    initial: list[InitialAssembly] = []
    tau = None
    section = None
    keys: dict[str, str] = {}
    pending_aff: list[tuple[int, str, str, str, int]] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0]
        if head == "TAU":
            if len(toks) != 2 or not toks[1].isdigit():
                raise TAFileError(line_no, "TAU needs one integer")
            tau = int(toks[1])
            continue
        if head in ("STATES", "AFFINITY_KEYS", "AFFINITIES", "RULES", "INITIAL"):
            section = head
            toks = toks[1:]
            if not toks:
                continue
        if section == "STATES":
            for t in toks:
                registry.register(t, keys.get(t))
        elif section == "AFFINITY_KEYS":
            if len(toks) != 2:
                raise TAFileError(line_no, "AFFINITY_KEYS line needs: state key")
            state, key = toks
            if state in registry.ids:
                registry.affinity_key[registry.id(state)] = key
            else:
                keys[state] = key
        elif section == "AFFINITIES":
            if len(toks) != 4:
                raise TAFileError(line_no, "affinity line needs: k1 k2 dir strength")
            k1, k2, d, w = toks
            if d not in (H, V):
                raise TAFileError(line_no, f"bad direction {d}")
            try:
                affinity.set(k1, k2, d, int(w))
            except ValueError as exc:
                raise TAFileError(line_no, str(exc))
        elif section == "RULES":
            if len(toks) not in (5, 6):
                raise TAFileError(line_no, "rule line needs: s1a s2a s1b s2b dir [tag]")
            for s in toks[:4]:
                if s not in registry:
                    raise TAFileError(line_no, f"rule uses undeclared state {s}")
            if toks[4] not in (H, V):
                raise TAFileError(line_no, f"bad direction {toks[4]}")
            tag = toks[5] if len(toks) == 6 else ""
            rules.add(
                Rule(
                    registry.id(toks[0]),
                    registry.id(toks[1]),
                    registry.id(toks[2]),
                    registry.id(toks[3]),
                    toks[4],
                    tag,
                )
            )
        elif section == "INITIAL":
            if head == "ASSEMBLY" or toks and toks[0] == "ASSEMBLY":
                body = toks[1:] if toks and toks[0] == "ASSEMBLY" else toks
                if not body:
                    raise TAFileError(line_no, "ASSEMBLY needs a count")
                count = body[0]
                cnt = INF if count == INF else None
                if cnt is None:
                    if not count.isdigit():
                        raise TAFileError(line_no, f"bad assembly count {count}")
                    cnt = int(count)
                aname = body[1] if len(body) > 1 else f"assembly{len(initial)}"
                initial.append(InitialAssembly({}, cnt, aname))
            else:
                if not initial:
                    raise TAFileError(line_no, "tile line before any ASSEMBLY")
                if len(toks) != 3:
                    raise TAFileError(line_no, "tile line needs: x y state")
                try:
                    x, y = int(toks[0]), int(toks[1])
                except ValueError:
                    raise TAFileError(line_no, "bad tile coordinates")
                if toks[2] not in registry:
                    raise TAFileError(line_no, f"tile uses undeclared state {toks[2]}")
                if (x, y) in initial[-1].tiles:
                    raise TAFileError(line_no, f"duplicate tile at ({x},{y})")
                initial[-1].tiles[(x, y)] = registry.id(toks[2])
        else:
            raise TAFileError(line_no, f"content before any section header: {raw!r}")

    if tau is None:
        raise TAFileError(0, "missing TAU")
    system = TASystem(registry, affinity, initial, rules, tau, name=name)
    problems = system.check()
    if problems:
        raise TAFileError(0, "system not well-formed: " + "; ".join(problems))
    return system


def load_ta_system(path: str | Path) -> TASystem:
    p = Path(path)
    return parse_ta_system(p.read_text(), name=p.stem)


def format_ta_system(system: TASystem) -> str:
    reg = system.registry
    lines = [f"TAU {system.tau}", "STATES"]
    lines += [f"  {n}" for n in reg.names]
    keyed = [
        (reg.names[sid], key)
        for sid, key in enumerate(reg.affinity_key)
        if key != reg.names[sid]
    ]
    if keyed:
        lines.append("AFFINITY_KEYS")
        lines += [f"  {n} {k}" for n, k in keyed]
    lines.append("AFFINITIES")
    for (k1, k2, d), w in sorted(system.affinity.table.items()):
        if w > 0:
            lines.append(f"  {k1} {k2} {d} {w}")
    lines.append("RULES")
    for r in system.rules:
        tag = f" {r.tag}" if r.tag else ""
        lines.append(
            f"  {reg.name(r.s1a)} {reg.name(r.s2a)} {reg.name(r.s1b)} {reg.name(r.s2b)} {r.d}{tag}"
        )
    lines.append("INITIAL")
    for ia in system.initial:
        lines.append(f"ASSEMBLY {ia.count} {ia.name}")
        for (x, y), sid in sorted(ia.tiles.items()):
            lines.append(f"  {x} {y} {reg.name(sid)}")
    return "\n".join(lines) + "\n"
