"""Compile a particle program into a Tile Automata system.

The output contains one connected swarm assembly of 100-cell macrotiles
realizing the initial configuration, ceil(|P|/2) prefabricated float
macrotiles, 6*|P| answer singletons for empty edges, an unbounded supply
of timing singletons, an affinity function that binds macrotiles only at
designed seam bonds and attachment sites (threshold tau = 1), and the
transition rules of the turn protocol.

States are enumerated eagerly: the engine never needs a state the
compiler did not declare, so protocol gaps surface as missing-rule
stalls or assertion failures instead of silent drift.

Handover moves condense the whole forced-schedule exchange (four or five
particle activations) into one macrotile turn.  The initiating side
evaluates that exchange at compile time for every partner case the
confirm acknowledgement can report; this requires the rule table's
exchange steps to ignore third-party flags, which `check_handover_keys`
verifies up front.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from ..geometry import EPS, HEAD, TAIL, expanded_port_map, opposite, tail_port_for_expansion
from ..amoebot.model import AmoebotSystem
from ..ta.system import INF, AffinityFunction, InitialAssembly, TASystem
from . import layout as LY
from .machine import (
    AK_CCI,
    AK_EPSF,
    AK_TIMA,
    AK_TIMF,
    Machine,
    RuleSink,
    S_EPS_FREE,
    S_EPS_SPENT,
    S_TIM_ATT,
    S_TIM_FREE,
    S_TIM_SPENT,
    StateSpace,
    ak_flag_armed,
    ak_flag_float,
    ak_flag_live,
    ak_flag_solicit,
    s_ag,
    s_cc,
    s_cf,
    s_fill,
    s_flag,
)

Flags = tuple


class CompileError(Exception):
    pass


def masked_contracted(flags: Flags) -> Flags:
    return tuple(flags[:6]) + (EPS,) * 4


def ports_of(t) -> int:
    return 6 if t == EPS else 10


def seam_of_port(o: int, t, port: int) -> tuple[str, int]:
    """("own"|"pair", seam) for a port; "own" is the turn-taking block
    (the whole particle when contracted, the head when expanded)."""
    if t == EPS:
        return ("own", (o + port) % 6)
    role, d = expanded_port_map(o, t)[port]
    return ("own", d) if role == HEAD else ("pair", d)


def pair_dir(o: int, t) -> Optional[int]:
    from ..geometry import tail_dir_from_tail_port

    return None if t == EPS else tail_dir_from_tail_port(o, t)


@dataclass
class NetEffect:
    """Outcome of a full handover exchange for one partner case."""

    style: str  # "pull" | "push" | "none"
    p_sub: int
    a_final: tuple  # (q, t, e, flags10)
    b_final: tuple  # (q, t, e, flags10)
    activations: int


@dataclass
class Branch:
    bid: int
    o: int
    key: Optional[tuple]
    out: Optional[tuple]
    kind: str  # idle | expand | contract_tail | contract_head | handover | default
    seam: Optional[int] = None  # move seam (expansion direction, partner dir...)
    port: Optional[int] = None
    nets: dict = field(default_factory=dict)  # handover: (qb,tb,eb,psub) -> NetEffect|None

    @property
    def tag(self) -> str:
        return f"b{self.bid}"


@dataclass
class CompilationReport:
    states: int = 0
    rules: int = 0
    per_family_rules: dict = field(default_factory=dict)
    bound_constant: int = 2
    bound_layout: int = 2000
    bound_value: int = 0
    bound_ok: bool = False
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "states": self.states,
            "rules": self.rules,
            "per_family_rules": dict(sorted(self.per_family_rules.items())),
            "bound": {
                "constant": self.bound_constant,
                "layout_constant": self.bound_layout,
                "value": self.bound_value,
                "ok": self.bound_ok,
            },
            "notes": self.notes,
        }


class Compiler:
    """Builds the state space, rule families, and initial assemblies."""

    def __init__(self, system: AmoebotSystem):
        self.sys = system
        problems = system.check()
        if problems:
            raise CompileError(f"program not well-formed: {problems}")
        self.space = StateSpace()
        self.sink = RuleSink()
        self.m = Machine(self.space, self.sink)
        self.layout = LY.LAYOUT
        self.notes: list[str] = []

        self.orients = sorted({pc.o for pc in system.initial.particles.values()})
        self.qs = self._states_q()
        self.displays = self._display_values()
        self.steadies = self._steady_values()
        self.branches: list[Branch] = []

    # ------------------------------------------------------------------
    # reachable values
    # ------------------------------------------------------------------

    def _states_q(self):
        qs = {pc.q for pc in self.sys.initial.particles.values()}
        for (q, fl, t, e), outs in self.sys.delta.rules.items():
            qs.add(q)
            for out in outs:
                qs.add(out[0])
        return sorted(qs)

    def _display_values(self):
        vals = {EPS}
        for pc in self.sys.initial.particles.values():
            vals.update(pc.flags)
        for outs in self.sys.delta.rules.values():
            for q2, fl2, *_ in outs:
                vals.update(fl2)
        return sorted(vals)

    def _steady_values(self):
        """Reachable aggregate contents (t, e, flags10): initial ones plus
        anything a branch can write."""
        vals = set()
        for pc in self.sys.initial.particles.values():
            vals.add((pc.t, pc.e, pc.flags))
        for (q, fl, t, e), outs in self.sys.delta.rules.items():
            for q2, fl2, t2, e2, m in outs:
                kind = m[0]
                if kind == "idle":
                    vals.add((t, e2, fl2))
                elif kind == "expand":
                    vals.add((t2, e2, fl2))
                    vals.add((EPS, e2, masked_contracted(fl2)))
                elif kind == "contract":
                    vals.add((EPS, e2, fl2))
                elif kind == "handover":
                    vals.add((t, e2, fl2 if t != EPS else masked_contracted(fl2)))
        changed = True
        # handover nets can add more; evaluate with the current q set
        for (q, fl, t, e), outs in self.sys.delta.rules.items():
            for out in outs:
                if out[4][0] != "handover":
                    continue
                for case, net in self._enumerate_nets(q, fl, t, e, out).items():
                    if net is None:
                        continue
                    qa, ta, ea, fla = net.a_final
                    qb, tb, eb, flb = net.b_final
                    vals.add((ta, ea, fla))
                    vals.add((tb, eb, flb))
        return sorted(vals)

    def steady_for(self, t=None, e=None):
        out = []
        for tv, ev, flv in self.steadies:
            if t is not None and tv != t:
                continue
            if e is not None and ev != e:
                continue
            out.append((tv, ev, flv))
        return out

    # ------------------------------------------------------------------
    # handover exchange evaluation
    # ------------------------------------------------------------------

    def partner_cases(self):
        """(q_b, t_b, e_b, p_sub) tuples the acknowledgement can report."""
        cases = set()
        seen_te = {(t, e) for t, e, _ in self.steadies}
        for qb in self.qs:
            for (tb, eb) in sorted(seen_te):
                nports = ports_of(tb)
                for p_sub in range(nports):
                    cases.add((qb, tb, eb, p_sub))
        return sorted(cases)

    def _lookup1(self, key):
        outs = self.sys.delta.rules.get(key)
        if not outs:
            return None
        return outs[0]

    def check_handover_keys(self):
        """The exchange is evaluated on canonical keys (third-party flags
        empty); any table key that matches a canonical key on the shared
        port must not disagree with it."""
        for (q, fl, t, e), outs in self.sys.delta.rules.items():
            nonempty = [p for p, f in enumerate(fl) if f != EPS]
            if len(nonempty) <= 1:
                continue
            for p in nonempty:
                canon = [EPS] * 10
                canon[p] = fl[p]
                ck = (q, tuple(canon), t, e)
                canon_outs = self.sys.delta.rules.get(ck)
                if canon_outs is not None and canon_outs != outs:
                    raise CompileError(
                        "rule table is sensitive to third-party flags near "
                        f"{(q, fl, t, e)}; the exchange encoding cannot express this"
                    )

    def _enumerate_nets(self, q, fl, t, e, out) -> dict:
        nets = {}
        for case in self.partner_cases():
            nets[case] = self._eval_exchange(q, fl, t, e, out, *case)
        return nets

    def _eval_exchange(self, q, fl, t, e, out, qb, tb, eb, p_sub) -> Optional[NetEffect]:
        """Table-driven evaluation of the forced [b, a, b] schedule.

        Mirrors the sequential engine: defaults are identity, a nested
        initiation by the partner replaces the queue, and moves on the
        shared edge change only (q, t, e, flags)."""
        q2, fl2, t2, e2, m = out
        port = m[1]
        if (t == EPS) == (tb == EPS):
            return None  # complementarity fails: the initiation fails

        a = {"q": q2, "t": t, "e": e2, "fl": fl2}
        b = {"q": qb, "t": tb, "e": eb, "fl": None}  # b's display mostly unknown
        b_disp_at_psub = fl[port]  # what a collected from b
        queue = ["b", "a", "b"]
        acts = 1
        style = "none"

        def facing_a():
            v = list(fl)
            v[port] = b_disp_at_psub
            return tuple(v)

        def facing_b():
            v = [EPS] * 10
            v[p_sub] = a["fl"][port] if a_present_on_edge[0] else EPS
            return tuple(v)

        a_present_on_edge = [True]

        while queue and acts < 8:
            who = queue.pop(0)
            acts += 1
            if who == "a":
                key = (a["q"], facing_a(), a["t"], a["e"])
                o_ = self._lookup1(key)
                if o_ is None:
                    continue
                qa, fla, ta, ea, ma = o_
                a["q"], a["fl"] = qa, fla
                kind = ma[0]
                if kind == "idle":
                    a["e"] = ea
                elif kind == "expand":
                    if ma[1] != port:
                        raise CompileError(
                            "exchange: initiator expanded off the shared edge"
                        )
                    a["t"], a["e"] = ta, ea
                    style = "push"
                elif kind == "contract":
                    a["t"], a["e"] = EPS, ea
                    a_present_on_edge[0] = False
                    style = "pull"
                elif kind == "handover":
                    queue = ["b", "a", "b"]
                    a["e"] = ea
            else:
                key = (b["q"], facing_b(), b["t"], b["e"])
                o_ = self._lookup1(key)
                if o_ is None:
                    continue
                qb_, flb, tb_, eb_, mb = o_
                b["q"], b["fl"] = qb_, flb
                b_disp_now = flb[p_sub]
                kind = mb[0]
                if kind == "idle":
                    b["e"] = eb_
                    nonlocal_disp = flb[p_sub]
                    b_disp_at_psub = nonlocal_disp
                elif kind == "expand":
                    if mb[1] != p_sub:
                        raise CompileError(
                            "exchange: subordinate expanded off the shared edge"
                        )
                    b["t"], b["e"] = tb_, eb_
                    b_disp_at_psub = flb[p_sub]
                elif kind == "contract":
                    b["t"], b["e"] = EPS, eb_
                    b_disp_at_psub = flb[p_sub]
                elif kind == "handover":
                    if mb[1] != p_sub:
                        raise CompileError(
                            "exchange: subordinate re-initiated off the shared edge"
                        )
                    queue = ["a", "b", "a"]
                    b["e"] = eb_
                    b_disp_at_psub = flb[p_sub]

        # classify by final shapes
        if a["t"] == EPS and b["t"] != EPS and t != EPS:
            style = "pull"
        elif a["t"] != EPS and b["t"] == EPS and t == EPS:
            style = "push"
        else:
            style = "none"
        b_fl = b["fl"] if b["fl"] is not None else None
        return NetEffect(
            style=style,
            p_sub=p_sub,
            a_final=(a["q"], a["t"], a["e"], tuple(a["fl"])),
            b_final=(b["q"], b["t"], b["e"], tuple(b_fl) if b_fl is not None else None),
            activations=acts,
        )
