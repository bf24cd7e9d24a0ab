"""Rule machinery translating a particle program into tile states and
pairwise transition rules.

One macrotile turn is driven by the central clock's phase field and runs:

    timing tile -> start -> lock broadcast (six seams, plus a relay through
    the pair seam for expanded particles) -> grant counting -> sequential
    port queries -> the state transition at the clock/aggregate pair ->
    move execution (display updates / float attachment and copy / detach /
    handover confirm + progressive lock + payload + acknowledgements) ->
    unlock broadcast -> timing tile release.

Signals travel as tokens held by one bank/wire cell at a time; a token's
direction field picks its route, so one subordinate can serve several
wires.  Every rule carries a tag naming its protocol step; traces expose
the tags, and the conformance checks key on them.

Mutual exclusion and image atomicity:

  * an active turn marks all its seam cells busy; lock requests against a
    busy or already-locked cell are denied at the seam, facing lock signals
    on one shared wire resolve by overwrite, and a boundary tie picks an
    arbitrary winner (either tie rule may fire);
  * a denied locker cancels, releases anything it locked, and ends its
    turn with no visible effect;
  * expansion sites discover occupation at the seam: a quiet occupant
    means the move fails the way the particle model fails it, a nascent or
    mid-move occupant means this turn aborts and retries later (the
    occupant's image change has not happened yet, so aborting keeps the
    trace consistent);
  * a freshly attached head defers its visible switch behind wait-locks on
    its new neighbors, so any in-flight turn that sampled the old, empty
    location finishes first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..geometry import EPS, opposite
from ..ta.system import H, V, AffinityFunction, Rule, RuleSet, StateRegistry
from . import layout as LY

Cell = tuple[int, int]

# ---------------------------------------------------------------------------
# affinity keys
# ---------------------------------------------------------------------------

AK_CC = "CC"
AK_CCI = "CCI"  # inactive and unlocked: the only timing-attachable clock
AK_AG = "AG"
AK_CF = "CF"
AK_EPSF = "EPSF"
AK_EPSX = "EPSX"
AK_TIMF = "TIMF"
AK_TIMA = "TIMA"
AK_TIMX = "TIMX"


def ak_flag_live(k: int) -> str:
    return f"FLG{k}"


def ak_flag_armed(k: int) -> str:
    return f"FLA{k}"


def ak_flag_solicit(k: int) -> str:
    return f"FLQ{k}"


def ak_flag_cut(k: int) -> str:
    return f"FLX{k}"


def ak_flag_float(k: int) -> str:
    return f"FLB{k}"


def ak_sub(k: int) -> str:
    return f"SUB{k}"


def ak_wire(k: int, i: int) -> str:
    return f"W{k}.{i}"


def ak_fill(off: Cell) -> str:
    return f"F{off[0]}.{off[1]}"


# flag cell modes that solicit an answer from an empty location
SOLICIT_MODES = ("lockdisp", "qdisp", "wlock")
# flag cell modes displaying a movement flag (the representation override)
MOVE_FLAG_MODES = ("armed", "xpflag", "hoflag")


class StateSpace:
    """Interns structured tile states into the registry and keeps the
    structure for decoding."""

    def __init__(self):
        self.registry = StateRegistry()
        self.by_struct: dict[tuple, int] = {}
        self.struct_of: list[tuple] = []

    def intern(self, struct: tuple, affkey: str) -> int:
        sid = self.by_struct.get(struct)
        if sid is not None:
            return sid
        name = self._name(struct)
        sid = self.registry.register(name, affkey)
        if sid != len(self.struct_of):
            raise RuntimeError(f"state {name} registered twice")
        self.by_struct[struct] = sid
        self.struct_of.append(struct)
        return sid

    def get(self, struct: tuple) -> Optional[int]:
        return self.by_struct.get(struct)

    @staticmethod
    def _name(struct: tuple) -> str:
        def part(v):
            if isinstance(v, tuple):
                return "(" + ",".join(part(x) for x in v) + ")"
            return str(v)

        return part(struct).replace(" ", "")


# ---------------------------------------------------------------------------
# state constructors (structs)
# ---------------------------------------------------------------------------


def s_fill(off: Cell) -> tuple:
    return ("fil", off)


def s_sub(k: int, token=None) -> tuple:
    return ("sub", k, token)


def s_wire(k: int, i: int, token=None) -> tuple:
    return ("wir", k, i, token)


def s_flag(k: int, mode: tuple) -> tuple:
    # mode examples: ("seal", f, busy) ("lockedby", f) ("lockdisp", f)
    # ("qdisp", f) ("armed",) ("fboundary",) ("cut",) ...
    return ("flg", k, mode)


def s_cc(o, q, phase: tuple) -> tuple:
    return ("cc", o, q, phase)


def s_ag(mode: tuple) -> tuple:
    # ("steady", t, e, flags) ("tailag",) ("blank",) ("xfer", payload) ...
    return ("ag", mode)


def s_cf(snap: tuple) -> tuple:
    # ("blank",) or ("snap", kind, data)
    return ("cf", snap)


S_EPS_FREE = ("eps", "free")
S_EPS_SPENT = ("eps", "spent")
S_TIM_FREE = ("tim", "free")
S_TIM_ATT = ("tim", "att")
S_TIM_SPENT = ("tim", "spent")


def flag_affkey(k: int, mode: tuple) -> str:
    name = mode[0]
    if name in SOLICIT_MODES:
        return ak_flag_solicit(k)
    if name == "armed":
        return ak_flag_armed(k)
    if name == "cut":
        return ak_flag_cut(k)
    if name == "fboundary":
        return ak_flag_float(k)
    return ak_flag_live(k)


def cc_affkey(phase: tuple) -> str:
    return AK_CCI if phase == ("idle",) else AK_CC


# ---------------------------------------------------------------------------
# token routing
# ---------------------------------------------------------------------------


@dataclass
class RuleSink:
    rules: RuleSet = field(default_factory=RuleSet)
    seen: set = field(default_factory=set)

    def add(self, s1: int, s2: int, o1: int, o2: int, d: str, tag: str):
        key = (s1, s2, o1, o2, d)
        if key in self.seen:
            return
        self.seen.add(key)
        self.rules.add(Rule(s1, s2, o1, o2, d, tag))


def pair_orientation(a: Cell, b: Cell) -> tuple[str, bool]:
    """(direction, a_first): a_first when a is the left/upper cell."""
    (x1, y1), (x2, y2) = a, b
    if y1 == y2 and x2 == x1 + 1:
        return H, True
    if y1 == y2 and x2 == x1 - 1:
        return H, False
    if x1 == x2 and y2 == y1 - 1:
        return V, True
    if x1 == x2 and y2 == y1 + 1:
        return V, False
    raise ValueError(f"cells {a}, {b} not adjacent")


class Machine:
    """Shared emission helpers bound to one state space and rule sink."""

    def __init__(self, space: StateSpace, sink: RuleSink):
        self.space = space
        self.sink = sink

    def st(self, struct: tuple) -> int:
        """Intern a struct, deriving its affinity key from its kind."""
        kind = struct[0]
        if kind == "fil":
            key = ak_fill(struct[1])
        elif kind == "sub":
            key = ak_sub(struct[1])
        elif kind == "wir":
            key = ak_wire(struct[1], struct[2])
        elif kind == "flg":
            key = flag_affkey(struct[1], struct[2])
        elif kind == "cc":
            key = cc_affkey(struct[3])
        elif kind == "ag":
            key = AK_AG
        elif kind == "cf":
            key = AK_CF
        elif kind == "eps":
            key = AK_EPSF if struct[1] == "free" else AK_EPSX
        elif kind == "tim":
            key = {"free": AK_TIMF, "att": AK_TIMA, "spent": AK_TIMX}[struct[1]]
        else:
            raise ValueError(f"unknown struct kind {kind}")
        return self.space.intern(struct, key)

    def rule(self, cell_a: Cell, cell_b: Cell, a_in, b_in, a_out, b_out, tag: str):
        """Emit a rule for the adjacent cells (given as layout offsets),
        normalizing to the engine's left-right / upper-lower key order."""
        d, a_first = pair_orientation(cell_a, cell_b)
        sa, sb = self.st(a_in), self.st(b_in)
        oa, ob = self.st(a_out), self.st(b_out)
        if a_first:
            self.sink.add(sa, sb, oa, ob, d, tag)
        else:
            self.sink.add(sb, sa, ob, oa, d, tag)

    # -- token movement along a wire path ---------------------------------

    def path_states(self, cell: Cell, k: int, token) -> tuple:
        """Struct of a non-clock path cell holding (or not) a token."""
        role = LY.LAYOUT.roles()[cell]
        if role[0] == "subordinate-clock":
            return s_sub(role[1], token)
        if role[0] == "wire":
            return s_wire(role[1], role[2], token)
        raise ValueError(f"cell {cell} is not a relay cell")

    def emit_outward(self, k: int, token, tag: str, stop_before_flag=False):
        """Rules moving an outward token from hop to hop along direction
        k's path (the clock emission and flag arrival are separate)."""
        path = LY.LAYOUT.wire_path(k)
        inner = path[1:-1]  # relay cells between clock and flag
        tk = ("o", token)
        for a, b in zip(inner, inner[1:]):
            self.rule(a, b, self.path_states(a, k, tk), self.path_states(b, k, None),
                      self.path_states(a, k, None), self.path_states(b, k, tk), tag)

    def emit_inward(self, k: int, token, tag: str):
        path = LY.LAYOUT.wire_path(k)
        inner = path[1:-1]
        tk = ("i", token)
        for b, a in zip(inner[1:], inner):
            self.rule(b, a, self.path_states(b, k, tk), self.path_states(a, k, None),
                      self.path_states(b, k, None), self.path_states(a, k, tk), tag)

    def cc_emit(self, k: int, cc_in: tuple, cc_out: tuple, token, tag: str):
        """Clock hands an outward token to the first relay cell of path k."""
        first = LY.LAYOUT.wire_path(k)[1]
        self.rule(LY.CC, first, cc_in, self.path_states(first, k, None),
                  cc_out, self.path_states(first, k, ("o", token)), tag)

    def cc_absorb(self, k: int, cc_in: tuple, cc_out: tuple, token, tag: str):
        """Clock consumes an inward token from the first relay cell."""
        first = LY.LAYOUT.wire_path(k)[1]
        self.rule(LY.CC, first, cc_in, self.path_states(first, k, ("i", token)),
                  cc_out, self.path_states(first, k, None), tag)

    def flag_absorb(self, k: int, flag_in: tuple, flag_out: tuple, token, tag: str):
        """Outward token arrives at the flag cell of direction k."""
        last = LY.LAYOUT.wire_path(k)[-2]
        self.rule(last, LY.FLAG[k], self.path_states(last, k, ("o", token)),
                  s_flag(k, flag_in), self.path_states(last, k, None),
                  s_flag(k, flag_out), tag)

    def flag_emit(self, k: int, flag_in: tuple, flag_out: tuple, token, tag: str):
        """Flag cell of direction k launches an inward token."""
        last = LY.LAYOUT.wire_path(k)[-2]
        self.rule(last, LY.FLAG[k], self.path_states(last, k, None),
                  s_flag(k, flag_in), self.path_states(last, k, ("i", token)),
                  s_flag(k, flag_out), tag)

    def seam_rule(self, k: int, my_mode: tuple, their_mode: tuple,
                  my_out: tuple, their_out: tuple, tag: str):
        """Rule across seam k between my flag cell and the neighbor's
        facing flag cell (direction (k+3)%6 on their side)."""
        ko = opposite(k)
        d, mine_first = LY.seam_flag_geometry(k)
        mine = self.st(s_flag(k, my_mode))
        theirs = self.st(s_flag(ko, their_mode))
        mo = self.st(s_flag(k, my_out))
        to = self.st(s_flag(ko, their_out))
        if mine_first:
            self.sink.add(mine, theirs, mo, to, d, tag)
        else:
            self.sink.add(theirs, mine, to, mo, d, tag)
