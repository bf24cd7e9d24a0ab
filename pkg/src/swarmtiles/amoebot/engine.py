"""Sequential activation engine for particle systems.

One activation = evaluate the transition table on the chosen particle's
(state, facing flags, tail port, expansion direction), pick one output,
apply the non-movement updates, then attempt the movement.  A failed
movement (expand into an occupied node, handover with no eligible partner)
still consumes the activation and keeps the state/flag/e updates, with the
tail port and flags masked back to the contracted shape.

Handovers are initiation-only moves: returning handover_i queues the faced
neighbor x as [x, p, x] on the scheduler's forced queue, and the actual
contraction/expansion is driven by the rule table over those activations.

The scheduler is fair by construction: free choices are drawn from shuffled
whole-population epochs, so any window of 2*|P| free activations contains
every particle at least once (fairness constant c = 2).
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..geometry import EPS, opposite
from .model import (
    IDLE,
    AmoebotSystem,
    DeltaKey,
    DeltaOut,
    Move,
    ParticleConfig,
    SystemConfig,
    contraction_result,
    edge_port_index,
    expansion_result,
    format_move,
    validate_delta_output,
)

FAIRNESS_WINDOW_FACTOR = 2  # c: every particle activates within c*|P| free picks


class EngineError(Exception):
    """Hard fault: an applied rule output breaks the model's constraints."""


Chooser = Callable[[str, DeltaKey, list[DeltaOut]], int]


class Scheduler:
    """Fair activation source with a priority queue for forced handover
    follow-ups."""

    def __init__(self, pids, seed: int):
        self.pids = sorted(pids)
        self.rng = random.Random(seed)
        self.forced: deque[str] = deque()
        self.counts = {pid: 0 for pid in self.pids}
        self._epoch: list[str] = []

    def force_next(self, pids):
        """Make `pids` the next activations.  A handover initiation replaces
        any leftover forced entries so the next three really are [x, p, x];
        a push handover re-initiates mid-choreography and relies on this."""
        self.forced = deque(pids)

    def next(self) -> tuple[str, bool]:
        if self.forced:
            pid = self.forced.popleft()
            self.counts[pid] += 1
            return pid, True
        if not self._epoch:
            self._epoch = list(self.pids)
            self.rng.shuffle(self._epoch)
        pid = self._epoch.pop()
        self.counts[pid] += 1
        return pid, False


def facing_flags(cfg: SystemConfig, pid: str) -> tuple[str, ...]:
    """Flags shown toward this particle by its neighbors, indexed by the
    particle's own port labels; empty nodes read as the empty flag."""
    pc = cfg.particles[pid]
    out = [EPS] * 10
    for idx, (node, d) in enumerate(pc.ports()):
        faced = pc.faced_node(idx)
        other = cfg.occupant(faced)
        if other is None or other == pid:
            continue
        oc = cfg.particles[other]
        their_port = edge_port_index(oc, faced, opposite(d))
        out[idx] = oc.flags[their_port]
    return tuple(out)


def _mask_contracted(flags: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(flags[:6]) + (EPS,) * 4


@dataclass
class ActivationRecord:
    step: int
    pid: str
    forced: bool
    key: DeltaKey
    default_rule: bool
    n_outputs: int
    chosen: int
    output: DeltaOut
    move: Move
    move_ok: bool
    failure: Optional[str]
    before: ParticleConfig
    after: ParticleConfig
    changed: bool

    def to_json(self) -> dict:
        def pc_json(pc: ParticleConfig) -> dict:
            return {
                "head": list(pc.head),
                "o": pc.o,
                "q": pc.q,
                "t": pc.t,
                "e": pc.e,
                "flags": list(pc.flags),
            }

        return {
            "step": self.step,
            "pid": self.pid,
            "forced": self.forced,
            "input": {
                "q": self.key[0],
                "flags": list(self.key[1]),
                "t": self.key[2],
                "e": self.key[3],
            },
            "default_rule": self.default_rule,
            "n_outputs": self.n_outputs,
            "chosen": self.chosen,
            "move": format_move(self.move),
            "move_ok": self.move_ok,
            "failure": self.failure,
            "before": pc_json(self.before),
            "after": pc_json(self.after),
            "changed": self.changed,
        }


@dataclass
class Trace:
    seed: int
    system: str
    records: list[ActivationRecord] = field(default_factory=list)
    configs: list[SystemConfig] = field(default_factory=list)
    terminal: bool = False


def delta_key(cfg: SystemConfig, pid: str) -> DeltaKey:
    pc = cfg.particles[pid]
    return (pc.q, facing_flags(cfg, pid), pc.t, pc.e)


def apply_output(
    cfg: SystemConfig, pid: str, out: DeltaOut
) -> tuple[SystemConfig, bool, Optional[str], Optional[str]]:
    """Apply one chosen output.  Returns (new config, move_ok, failure
    reason, handover partner id)."""
    pc = cfg.particles[pid]
    q2, flags2, t2, e2, move = out
    kind = move[0]

    def failed(reason: str):
        masked = _mask_contracted(flags2) if pc.t == EPS else flags2
        npc = ParticleConfig(pc.head, pc.o, q2, pc.t, e2, tuple(masked))
        if npc.e != EPS and npc.t != EPS:
            npc = ParticleConfig(npc.head, npc.o, npc.q, npc.t, EPS, npc.flags)
        return cfg.update(pid, npc), False, reason, None

    if kind == "idle":
        if t2 != pc.t:
            raise EngineError(f"{pid}: idle output changes tail port {pc.t} -> {t2}")
        npc = ParticleConfig(pc.head, pc.o, q2, t2, e2, tuple(flags2))
        return cfg.update(pid, npc), True, None, None

    if kind == "expand":
        i = move[1]
        if pc.expanded:
            return failed("expand while expanded")
        target = pc.faced_node(i)
        if cfg.occupant(target) is not None:
            return failed("expand target occupied")
        new_head, want_t = expansion_result(pc, i)
        if t2 != want_t:
            raise EngineError(
                f"{pid}: expand_{i} must set t'={want_t}, rule set {t2}"
            )
        npc = ParticleConfig(new_head, pc.o, q2, t2, e2, tuple(flags2))
        return cfg.update(pid, npc), True, None, None

    if kind == "contract":
        i = move[1]
        if not pc.expanded:
            return failed("contract while contracted")
        if i >= 10:
            return failed("contract port out of range")
        new_head = contraction_result(pc, i)
        npc = ParticleConfig(new_head, pc.o, q2, EPS, e2, tuple(flags2))
        return cfg.update(pid, npc), True, None, None

    if kind == "handover":
        i = move[1]
        if i >= pc.port_count():
            return failed("handover port out of range")
        other = cfg.occupant(pc.faced_node(i))
        if other is None:
            return failed("handover with no neighbor")
        if cfg.particles[other].expanded == pc.expanded:
            return failed("handover partners not complementary")
        if t2 != pc.t:
            raise EngineError(f"{pid}: handover output changes tail port")
        npc = ParticleConfig(pc.head, pc.o, q2, t2, e2, tuple(flags2))
        return cfg.update(pid, npc), True, None, other

    raise EngineError(f"unknown move kind {kind}")


def activate(
    cfg: SystemConfig,
    system: AmoebotSystem,
    sched: Scheduler,
    chooser: Optional[Chooser] = None,
    step: int = 0,
) -> tuple[SystemConfig, ActivationRecord]:
    """Run a single particle activation and return the new configuration
    plus its record."""
    pid, forced = sched.next()
    key = delta_key(cfg, pid)
    outputs = system.delta.lookup(key, cfg.particles[pid])
    default = system.delta.is_default(key)
    if chooser is not None:
        idx = chooser(pid, key, outputs)
    else:
        idx = sched.rng.randrange(len(outputs)) if len(outputs) > 1 else 0
    out = outputs[idx]

    structural = [
        v for v in validate_delta_output(key, out) if not v.startswith("movement:")
    ]
    if structural:
        raise EngineError(f"{pid}: rule output invalid: {structural}")

    before = cfg.particles[pid]
    new_cfg, ok, failure, partner = apply_output(cfg, pid, out)
    if partner is not None:
        sched.force_next([partner, pid, partner])

    problems = new_cfg.check()
    if problems:
        raise EngineError(f"{pid}: activation produced invalid config: {problems}")

    rec = ActivationRecord(
        step=step,
        pid=pid,
        forced=forced,
        key=key,
        default_rule=default,
        n_outputs=len(outputs),
        chosen=idx,
        output=out,
        move=out[4],
        move_ok=ok,
        failure=failure,
        before=before,
        after=new_cfg.particles[pid],
        changed=new_cfg != cfg,
    )
    return new_cfg, rec


def enabled_changes(cfg: SystemConfig, system: AmoebotSystem) -> bool:
    """True if some particle has an output whose application changes the
    configuration (i.e. the configuration is not terminal)."""
    for pid in cfg.particles:
        key = delta_key(cfg, pid)
        for out in system.delta.lookup(key, cfg.particles[pid]):
            structural = [
                v
                for v in validate_delta_output(key, out)
                if not v.startswith("movement:")
            ]
            if structural:
                raise EngineError(f"{pid}: rule output invalid: {structural}")
            new_cfg, _, _, _ = apply_output(cfg, pid, out)
            if new_cfg != cfg:
                return True
    return False


def run(
    system: AmoebotSystem,
    seed: int,
    max_activations: int,
    chooser: Optional[Chooser] = None,
    keep_configs: bool = True,
) -> Trace:
    """Drive the system until terminal or the activation budget runs out."""
    problems = system.check()
    if problems:
        raise EngineError(f"system not well-formed: {problems}")
    cfg = system.initial.copy()
    sched = Scheduler(system.particle_ids, seed)
    trace = Trace(seed=seed, system=system.name)
    if keep_configs:
        trace.configs.append(cfg)
    if not enabled_changes(cfg, system):
        trace.terminal = True
        return trace
    for step in range(max_activations):
        cfg, rec = activate(cfg, system, sched, chooser, step)
        trace.records.append(rec)
        if keep_configs:
            trace.configs.append(cfg)
        if not sched.forced and not enabled_changes(cfg, system):
            trace.terminal = True
            break
    return trace


def successors(cfg: SystemConfig, system: AmoebotSystem) -> list[SystemConfig]:
    """All configurations reachable by a single activation (any particle,
    any output), excluding the configuration itself."""
    out = []
    seen = set()
    for pid in sorted(cfg.particles):
        key = delta_key(cfg, pid)
        for o in system.delta.lookup(key, cfg.particles[pid]):
            new_cfg, _, _, _ = apply_output(cfg, pid, o)
            if new_cfg != cfg and new_cfg.canonical() not in seen:
                seen.add(new_cfg.canonical())
                out.append(new_cfg)
    return out


def reachable_within(
    start: SystemConfig,
    goal: SystemConfig,
    system: AmoebotSystem,
    max_steps: int,
) -> Optional[int]:
    """Breadth-first search for `goal` within max_steps activations of
    `start`.  Returns the distance or None."""
    if start == goal:
        return 0
    frontier = [start]
    seen = {start.canonical()}
    for depth in range(1, max_steps + 1):
        nxt = []
        for cfg in frontier:
            for succ in successors(cfg, system):
                c = succ.canonical()
                if c in seen:
                    continue
                if succ == goal:
                    return depth
                seen.add(c)
                nxt.append(succ)
        frontier = nxt
        if not frontier:
            break
    return None
