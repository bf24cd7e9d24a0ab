"""Particle-system data model: particle and system configurations, moves,
and the transition-rule table with its well-formedness checks.

A particle configuration is (head, o, q, t, e, flags) where flags is always
a 10-tuple; a contracted particle (t == EPS) must keep flags 6..9 empty.
The transition table maps (q, facing-flags, t, e) to one or more outputs
(q', flags', t', e', move); inputs absent from the table default to an
identity idle step, which keeps every run total.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

from ..geometry import (
    EPS,
    HEAD,
    TAIL,
    Coord,
    expanded_port_map,
    neighbor,
    port_node_contracted,
    tail_dir_from_tail_port,
    tail_port_for_expansion,
)

Move = tuple  # ("idle",) | ("expand", i) | ("contract", i) | ("handover", i)

IDLE: Move = ("idle",)


def parse_move(text: str) -> Move:
    if text == "idle":
        return IDLE
    for kind, hi in (("expand", 6), ("contract", 10), ("handover", 6)):
        if text.startswith(kind + "_"):
            i = int(text[len(kind) + 1 :])
            if not 0 <= i < hi:
                raise ValueError(f"move index out of range: {text}")
            return (kind, i)
    raise ValueError(f"unknown move: {text}")


def format_move(m: Move) -> str:
    return m[0] if m[0] == "idle" else f"{m[0]}_{m[1]}"


@dataclass(frozen=True)
class ParticleConfig:
    head: Coord
    o: int
    q: str
    t: int | str
    e: int | str
    flags: tuple[str, ...]

    @property
    def expanded(self) -> bool:
        return self.t != EPS

    @property
    def tail(self) -> Optional[Coord]:
        if not self.expanded:
            return None
        return neighbor(self.head, tail_dir_from_tail_port(self.o, self.t))

    def nodes(self) -> tuple[Coord, ...]:
        return (self.head,) if not self.expanded else (self.head, self.tail)

    def ports(self) -> tuple[tuple[Coord, int], ...]:
        """(owning node, global direction) per port label."""
        if not self.expanded:
            return tuple((self.head, (self.o + i) % 6) for i in range(6))
        pm = expanded_port_map(self.o, self.t)
        tail = self.tail
        return tuple(
            ((self.head if role == HEAD else tail), d) for role, d in pm
        )

    def port_count(self) -> int:
        return 10 if self.expanded else 6

    def faced_node(self, i: int) -> Coord:
        node, d = self.ports()[i]
        return neighbor(node, d)

    def check(self) -> list[str]:
        problems = []
        if not 0 <= self.o < 6:
            problems.append(f"orientation {self.o} out of range")
        if self.t != EPS and not (isinstance(self.t, int) and 0 <= self.t < 10):
            problems.append(f"tail port {self.t} out of range")
        if self.e != EPS and not (isinstance(self.e, int) and 0 <= self.e < 6):
            problems.append(f"expansion direction {self.e} out of range")
        if len(self.flags) != 10:
            problems.append("flags must have length 10")
        if self.t == EPS and any(f != EPS for f in self.flags[6:]):
            problems.append("contracted particle carries flags on ports 6..9")
        if self.e != EPS and self.t != EPS:
            problems.append("expansion direction set while expanded")
        if self.t != EPS:
            try:
                tail_dir_from_tail_port(self.o, self.t)
            except ValueError:
                problems.append(f"tail port {self.t} is not a reachable label")
        return problems


class SystemConfig:
    """All particle configurations plus the node-occupancy index."""

    def __init__(self, particles: dict[str, ParticleConfig]):
        self.particles = dict(particles)
        self.occupancy: dict[Coord, str] = {}
        for pid, pc in self.particles.items():
            for node in pc.nodes():
                if node in self.occupancy:
                    raise ValueError(
                        f"node {node} occupied by both {self.occupancy[node]} and {pid}"
                    )
                self.occupancy[node] = pid

    def copy(self) -> "SystemConfig":
        return SystemConfig(self.particles)

    def occupant(self, node: Coord) -> Optional[str]:
        return self.occupancy.get(node)

    def update(self, pid: str, pc: ParticleConfig) -> "SystemConfig":
        new = dict(self.particles)
        new[pid] = pc
        return SystemConfig(new)

    def check(self) -> list[str]:
        problems = []
        for pid, pc in self.particles.items():
            problems += [f"{pid}: {p}" for p in pc.check()]
        # occupancy construction already enforces uniqueness; re-derive to be safe
        derived = {}
        for pid, pc in self.particles.items():
            for node in pc.nodes():
                derived[node] = pid
        if derived != self.occupancy:
            problems.append("occupancy index out of sync")
        return problems

    def canonical(self) -> tuple:
        """Order- and id-independent value for configuration comparison."""
        return tuple(
            sorted(
                (pc.head, pc.o, pc.q, pc.t, pc.e, pc.flags)
                for pc in self.particles.values()
            )
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, SystemConfig) and self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    def __repr__(self) -> str:
        parts = ", ".join(
            f"{pid}@{pc.head}{'' if not pc.expanded else '+' + str(pc.tail)}:{pc.q}"
            for pid, pc in sorted(self.particles.items())
        )
        return f"<SystemConfig {parts}>"


DeltaKey = tuple  # (q, flags10, t, e)
DeltaOut = tuple  # (q', flags10', t', e', move)


def validate_delta_output(
    key: DeltaKey,
    out: DeltaOut,
    ctx: Optional[SystemConfig] = None,
    pid: Optional[str] = None,
) -> list[str]:
    """Check a transition output against the movement and consistency rules.

    Returns a list of violated rules (empty list means the output is fine).
    The movement-validity rule needs a configuration context; without one it
    is skipped and only the structural rules are checked.
    """
    q, flags, t, e = key
    q2, flags2, t2, e2, move = out
    bad = []

    # contracted particles cannot set flags for ports they don't have
    if t == EPS and any(f != EPS for f in flags[6:]):
        bad.append("input flags 6..9 nonempty while contracted")
    if t2 == EPS and any(f != EPS for f in flags2[6:]):
        bad.append("output flags 6..9 nonempty while t' empty")

    # may only intend to expand while contracted
    if e != EPS and t != EPS:
        bad.append("input e set while expanded")
    if e2 != EPS and t2 != EPS:
        bad.append("output e' set while t' nonempty")

    kind = move[0]
    if kind == "expand":
        if t2 == EPS:
            bad.append("expand requires t' nonempty")
        if e2 != EPS:
            bad.append("expand requires e' empty")
    if kind == "contract" and t2 != EPS:
        bad.append("contract requires t' empty")

    # a pending expansion direction only allows expand_e or idle
    if e != EPS and not (move == IDLE or move == ("expand", e)):
        bad.append("pending expansion permits only expand_e or idle")

    if ctx is not None and pid is not None:
        pc = ctx.particles[pid]
        if kind == "expand":
            i = move[1]
            if pc.expanded:
                bad.append("movement: expand while expanded")
            elif ctx.occupant(pc.faced_node(i)) is not None:
                bad.append("movement: expand target occupied")
        elif kind == "contract":
            if not pc.expanded:
                bad.append("movement: contract while contracted")
        elif kind == "handover":
            i = move[1]
            other = ctx.occupant(pc.faced_node(i)) if i < pc.port_count() else None
            if other is None:
                bad.append("movement: handover with no neighbor")
            elif ctx.particles[other].expanded == pc.expanded:
                bad.append("movement: handover partners not complementary")
    return bad


class TransitionTable:
    """Extensional rule table for the transition function.

    Set-valued: each input maps to a list of outputs; the engine's chooser
    picks one.  Lookups for absent inputs return the identity idle output.
    """

    def __init__(self):
        self.rules: dict[DeltaKey, list[DeltaOut]] = {}

    def add(self, key: DeltaKey, out: DeltaOut):
        self.rules.setdefault(key, []).append(out)

    def lookup(self, key: DeltaKey, own: ParticleConfig) -> list[DeltaOut]:
        """Outputs for an input key.  Absent inputs yield the identity idle
        output, which keeps the particle's own displayed flags (the key's
        flag vector is what the neighbors show, not what this particle
        displays)."""
        hit = self.rules.get(key)
        if hit:
            return hit
        return [(own.q, own.flags, own.t, own.e, IDLE)]

    def is_default(self, key: DeltaKey) -> bool:
        return key not in self.rules

    def check(self) -> list[str]:
        problems = []
        for key, outs in self.rules.items():
            for out in outs:
                for p in validate_delta_output(key, out):
                    problems.append(f"{key} -> {out}: {p}")
        return problems

    def __len__(self):
        return sum(len(v) for v in self.rules.values())


@dataclass
class AmoebotSystem:
    """(Q, Sigma, delta, P, sigma): states, flag alphabet, rule table,
    particle ids, and the initial configuration."""

    states: tuple[str, ...]
    flags: tuple[str, ...]  # includes EPS
    delta: TransitionTable
    initial: SystemConfig
    name: str = "amoebot-system"

    @property
    def particle_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.initial.particles))

    def check(self) -> list[str]:
        problems = self.initial.check()
        problems += self.delta.check()
        flagset = set(self.flags) | {EPS}
        stateset = set(self.states)
        for pid, pc in self.initial.particles.items():
            if pc.q not in stateset:
                problems.append(f"{pid}: state {pc.q} not declared")
            for f in pc.flags:
                if f not in flagset:
                    problems.append(f"{pid}: flag {f} not declared")
        for (q, fl, t, e), outs in self.delta.rules.items():
            if q not in stateset:
                problems.append(f"rule input state {q} not declared")
            for q2, fl2, t2, e2, m in outs:
                if q2 not in stateset:
                    problems.append(f"rule output state {q2} not declared")
                for f in tuple(fl) + tuple(fl2):
                    if f not in flagset:
                        problems.append(f"rule flag {f} not declared")
        return problems


def expansion_result(pc: ParticleConfig, i: int) -> tuple[Coord, int]:
    """(new head, new tail port) for a successful expansion along local
    direction i."""
    new_head = pc.faced_node(i)
    return new_head, tail_port_for_expansion(i)


def contraction_result(pc: ParticleConfig, i: int) -> Coord:
    """Surviving head node after contracting out of the node incident to
    port i."""
    pm = expanded_port_map(pc.o, pc.t)
    role, _ = pm[i]
    vacated_is_head = role == HEAD
    return pc.tail if vacated_is_head else pc.head


def edge_port_index(pc: ParticleConfig, node: Coord, d: int) -> int:
    """Label of the port that particle pc has on the edge (node, node+dir d).

    `node` must be one of pc's nodes.
    """
    for idx, (n, dd) in enumerate(pc.ports()):
        if n == node and dd == d:
            return idx
    raise ValueError(f"no port of particle at {node} toward direction {d}")
