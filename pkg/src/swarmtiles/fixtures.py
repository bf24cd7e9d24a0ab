"""Small benchmark particle programs used by the test and conformance
suites: a lone walker, an expand/contract bouncer, pull and push handover
pairs, and a three-particle width-one corridor march.

All programs share a two-letter flag alphabet {"." (empty), "x"}; states
disambiguate what "x" means on each edge (handover request, will-expand,
ready-to-be-pulled), which keeps the alphabet minimal.
"""

from __future__ import annotations

from .geometry import EPS
from .amoebot.model import (
    AmoebotSystem,
    ParticleConfig,
    SystemConfig,
    TransitionTable,
    parse_move,
)

DOTS = (EPS,) * 10


def fl(**ports) -> tuple[str, ...]:
    """Flag vector with named ports set, e.g. fl(f0="x", f5="x")."""
    out = [EPS] * 10
    for name, sym in ports.items():
        out[int(name[1:])] = sym
    return tuple(out)


def rule(table: TransitionTable, q, flags, t, e, q2, flags2, t2, e2, move):
    table.add((q, flags, t, e), (q2, flags2, t2, e2, parse_move(move)))


def lone_walker() -> AmoebotSystem:
    """One particle stepping East forever: expand_0, contract the tail,
    repeat."""
    d = TransitionTable()
    rule(d, "W0", DOTS, EPS, EPS, "W1", DOTS, 5, EPS, "expand_0")
    rule(d, "W1", DOTS, 5, EPS, "W0", DOTS, EPS, EPS, "contract_5")
    return AmoebotSystem(
        states=("W0", "W1"),
        flags=(EPS,),
        delta=d,
        initial=SystemConfig(
            {"P0": ParticleConfig((0, 0), 0, "W0", EPS, EPS, DOTS)}
        ),
        name="lone-walker",
    )


def bounce_pair() -> AmoebotSystem:
    """Two particles; A repeatedly expands south-west and aborts by
    contracting back out of its head, B never moves."""
    d = TransitionTable()
    rule(d, "A0", DOTS, EPS, EPS, "A1", DOTS, 9, EPS, "expand_2")
    # port 4 is on the head for a local-2 expansion: contracting there
    # vacates the head, i.e. the expansion is abandoned
    rule(d, "A1", DOTS, 9, EPS, "A0", DOTS, EPS, EPS, "contract_4")
    return AmoebotSystem(
        states=("A0", "A1", "B0"),
        flags=(EPS,),
        delta=d,
        initial=SystemConfig(
            {
                "PA": ParticleConfig((0, 0), 0, "A0", EPS, EPS, DOTS),
                "PB": ParticleConfig((1, 0), 0, "B0", EPS, EPS, DOTS),
            }
        ),
        name="bounce-pair",
    )


def pull_pair() -> AmoebotSystem:
    """Expanded A pulls contracted B into the node A's tail vacates.

    Choreography over the forced [B, A, B] schedule: A displays the
    handover flag, B answers will-expand and stores e, A contracts its
    tail, B expands into the vacated node.  Both end in terminal states.
    """
    d = TransitionTable()
    X = "x"
    rule(d, "A0", DOTS, 5, EPS, "A1", fl(f5=X), 5, EPS, "handover_5")
    rule(d, "B0", fl(f0=X), EPS, EPS, "B1", fl(f0=X), EPS, 0, "idle")
    rule(d, "A1", fl(f5=X), 5, EPS, "A2", DOTS, EPS, EPS, "contract_5")
    rule(d, "B1", DOTS, EPS, 0, "B2", DOTS, 5, EPS, "expand_0")
    return AmoebotSystem(
        states=("A0", "A1", "A2", "B0", "B1", "B2"),
        flags=(EPS, X),
        delta=d,
        initial=SystemConfig(
            {
                "PA": ParticleConfig((1, 0), 0, "A0", 5, EPS, DOTS),
                "PB": ParticleConfig((-1, 0), 0, "B0", EPS, EPS, DOTS),
            }
        ),
        name="pull-pair",
    )


def push_pair() -> AmoebotSystem:
    """Contracted A pushes into expanded B's tail.

    B, seeing the handover flag while expanded, re-initiates as a pull
    (role swap), so the full exchange takes five activations:
    A, B, A, B, A.
    """
    d = TransitionTable()
    X = "x"
    rule(d, "a0", DOTS, EPS, EPS, "a1", fl(f0=X), EPS, EPS, "handover_0")
    rule(d, "b0", fl(f5=X), 5, EPS, "b1", fl(f5=X), 5, EPS, "handover_5")
    rule(d, "a1", fl(f0=X), EPS, EPS, "a2", fl(f0=X), EPS, 0, "idle")
    rule(d, "b1", fl(f5=X), 5, EPS, "b2", DOTS, EPS, EPS, "contract_5")
    rule(d, "a2", DOTS, EPS, 0, "a3", DOTS, 5, EPS, "expand_0")
    return AmoebotSystem(
        states=("a0", "a1", "a2", "a3", "b0", "b1", "b2"),
        flags=(EPS, X),
        delta=d,
        initial=SystemConfig(
            {
                "PA": ParticleConfig((0, 0), 0, "a0", EPS, EPS, DOTS),
                "PB": ParticleConfig((2, 0), 0, "b0", 5, EPS, DOTS),
            }
        ),
        name="push-pair",
    )


def tunnel_march() -> AmoebotSystem:
    """Three particles marching East in a width-one corridor via repeated
    pull handovers: the leader pulls the middle, the middle pulls the rear,
    the rear walks its tail forward, and the leader strides on.

    A contracted follower advertises readiness with "x" on its East port;
    a puller requires that flag before initiating, which serializes the
    chain and keeps every move a legal handover.
    """
    d = TransitionTable()
    X = "x"
    # leader
    rule(d, "L0", fl(f5=X), 5, EPS, "L1", fl(f5=X), 5, EPS, "handover_5")
    rule(d, "L1", fl(f5=X), 5, EPS, "L2", DOTS, EPS, EPS, "contract_5")
    rule(d, "L2", fl(f3=X), EPS, EPS, "L0", DOTS, 5, EPS, "expand_0")
    # middle: pulled by the leader, then pulls the rear; its West port may
    # or may not see the rear's ready flag, so both keys are present
    rule(d, "M0", fl(f0=X), EPS, EPS, "M1", fl(f0=X), EPS, 0, "idle")
    rule(d, "M0", fl(f0=X, f3=X), EPS, EPS, "M1", fl(f0=X), EPS, 0, "idle")
    rule(d, "M1", DOTS, EPS, 0, "M2", DOTS, 5, EPS, "expand_0")
    rule(d, "M1", fl(f3=X), EPS, 0, "M2", DOTS, 5, EPS, "expand_0")
    rule(d, "M2", fl(f5=X), 5, EPS, "M3", fl(f5=X), 5, EPS, "handover_5")
    rule(d, "M3", fl(f5=X), 5, EPS, "M0", fl(f0=X), EPS, EPS, "contract_5")
    # rear: pulled by the middle, then walks its tail in
    rule(d, "R0", fl(f0=X), EPS, EPS, "R1", fl(f0=X), EPS, 0, "idle")
    rule(d, "R1", DOTS, EPS, 0, "R2", DOTS, 5, EPS, "expand_0")
    rule(d, "R2", DOTS, 5, EPS, "R0", fl(f0=X), EPS, EPS, "contract_5")
    return AmoebotSystem(
        states=("L0", "L1", "L2", "M0", "M1", "M2", "M3", "R0", "R1", "R2"),
        flags=(EPS, X),
        delta=d,
        initial=SystemConfig(
            {
                "PL": ParticleConfig((0, 0), 0, "L0", 5, EPS, DOTS),
                "PM": ParticleConfig((-2, 0), 0, "M0", EPS, EPS, fl(f0=X)),
                "PR": ParticleConfig((-3, 0), 0, "R0", EPS, EPS, fl(f0=X)),
            }
        ),
        name="tunnel-march",
    )


def idle_singleton() -> AmoebotSystem:
    """One particle whose only rule is the implicit identity idle."""
    return AmoebotSystem(
        states=("I",),
        flags=(EPS,),
        delta=TransitionTable(),
        initial=SystemConfig(
            {"P0": ParticleConfig((0, 0), 0, "I", EPS, EPS, DOTS)}
        ),
        name="idle-singleton",
    )


ALL_FIXTURES = {
    "lone-walker": lone_walker,
    "bounce-pair": bounce_pair,
    "pull-pair": pull_pair,
    "push-pair": push_pair,
    "tunnel-march": tunnel_march,
    "idle-singleton": idle_singleton,
}
