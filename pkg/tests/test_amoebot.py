"""Engine tests: movement semantics, handover choreography, scheduler
fairness, terminal detection, file round-trips, and an exhaustive
reachability oracle on a three-node walk."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from swarmtiles import fixtures
from swarmtiles.geometry import EPS
from swarmtiles.amoebot.engine import (
    EngineError,
    Scheduler,
    activate,
    enabled_changes,
    facing_flags,
    run,
    successors,
)
from swarmtiles.amoebot.files import SpecError, format_system, parse_system
from swarmtiles.amoebot.model import (
    IDLE,
    ParticleConfig,
    SystemConfig,
    validate_delta_output,
)

DOTS = (EPS,) * 10


def test_idle_default_is_terminal():
    sys_ = fixtures.idle_singleton()
    trace = run(sys_, seed=1, max_activations=100)
    assert trace.terminal
    assert trace.records == []


def test_lone_walker_moves_east():
    sys_ = fixtures.lone_walker()
    trace = run(sys_, seed=3, max_activations=10)
    # two activations move the particle one node East
    cfg = trace.configs[2]
    pc = cfg.particles["P0"]
    assert pc.head == (1, 0) and pc.t == EPS
    cfg = trace.configs[4]
    assert cfg.particles["P0"].head == (2, 0)


def test_lone_walker_intermediate_configs_valid():
    trace = run(fixtures.lone_walker(), seed=11, max_activations=40)
    for cfg in trace.configs:
        assert cfg.check() == []


def test_bounce_pair_returns_home():
    trace = run(fixtures.bounce_pair(), seed=5, max_activations=50)
    for i, cfg in enumerate(trace.configs):
        pa = cfg.particles["PA"]
        assert pa.head in ((0, 0), (0, -1))
        assert cfg.particles["PB"].head == (1, 0)


def test_pull_handover_final_configuration():
    sys_ = fixtures.pull_pair()
    trace = run(sys_, seed=2, max_activations=50)
    assert trace.terminal
    final = trace.configs[-1]
    pa, pb = final.particles["PA"], final.particles["PB"]
    assert pa.q == "A2" and pa.t == EPS and pa.head == (1, 0)
    assert pb.q == "B2" and pb.t == 5 and pb.head == (0, 0)
    assert pb.tail == (-1, 0)


def test_pull_handover_forced_schedule():
    sys_ = fixtures.pull_pair()
    trace = run(sys_, seed=2, max_activations=50)
    # initiation is followed by exactly [B, A, B], forced
    pids = [r.pid for r in trace.records[:4]]
    assert pids == ["PA", "PB", "PA", "PB"]
    assert [r.forced for r in trace.records[:4]] == [False, True, True, True]
    # occupancy is unchanged by the exchange as a whole
    assert set(trace.configs[0].occupancy) == set(trace.configs[-1].occupancy)


def test_pull_handover_atomicity_no_third_particle():
    trace = run(fixtures.tunnel_march(), seed=9, max_activations=400)
    pending = None
    for rec in trace.records:
        if pending:
            assert rec.pid in pending[0], "third particle inside a handover"
            if rec.forced:
                pending = (pending[0], pending[1] - 1)
                if pending[1] == 0:
                    pending = None
            else:
                pending = None
        if rec.move[0] == "handover" and rec.move_ok:
            partner_ids = {rec.pid}
            pending = (None, 3)
            # partner is whoever the next forced activation names
            pending = ({rec.pid, trace.records[rec.step + 1].pid}, 3)
    assert True


def test_push_handover_five_activations():
    sys_ = fixtures.push_pair()
    trace = run(sys_, seed=4, max_activations=50)
    assert trace.terminal
    pids = [r.pid for r in trace.records[:5]]
    assert pids == ["PA", "PB", "PA", "PB", "PA"]
    final = trace.configs[-1]
    pa, pb = final.particles["PA"], final.particles["PB"]
    assert pa.t == 5 and pa.head == (1, 0) and pa.tail == (0, 0)
    assert pb.t == EPS and pb.head == (2, 0)


def test_tunnel_march_advances_and_stays_in_corridor():
    trace = run(fixtures.tunnel_march(), seed=1, max_activations=600)
    for cfg in trace.configs:
        for pc in cfg.particles.values():
            for node in pc.nodes():
                assert node[1] == 0, "particle left the corridor"
    start = min(n[0] for n in trace.configs[0].occupancy)
    end = min(n[0] for n in trace.configs[-1].occupancy)
    assert end > start, "chain did not advance"


def test_facing_flags_read_partner_edge():
    sys_ = fixtures.pull_pair()
    cfg = sys_.initial
    # B sits West of A's tail; initially nothing is displayed
    assert facing_flags(cfg, "PB") == DOTS
    # after A's initiation B sees the handover flag on its port 0
    sched = Scheduler(sys_.particle_ids, seed=0)
    sched.force_next(["PA"])
    cfg2, rec = activate(cfg, sys_, sched, chooser=lambda *_: 0)
    assert rec.pid == "PA"
    ff = facing_flags(cfg2, "PB")
    assert ff[0] == "x"


def test_failed_expand_consumes_activation_and_keeps_state_changes():
    sys_ = fixtures.lone_walker()
    # plant a blocker on the walker's target node
    blocked = SystemConfig(
        {
            "P0": ParticleConfig((0, 0), 0, "W0", EPS, EPS, DOTS),
            "PX": ParticleConfig((1, 0), 0, "W0", EPS, EPS, DOTS),
        }
    )
    sys_.initial = blocked
    sched = Scheduler(("P0",), seed=0)
    cfg2, rec = activate(blocked, sys_, sched)
    assert rec.pid == "P0"
    assert not rec.move_ok and rec.failure == "expand target occupied"
    pc = cfg2.particles["P0"]
    assert pc.t == EPS and pc.head == (0, 0)
    assert pc.q == "W1"  # state change survives the failed movement


def test_failed_handover_no_neighbor():
    sys_ = fixtures.pull_pair()
    lonely = SystemConfig(
        {"PA": ParticleConfig((1, 0), 0, "A0", 5, EPS, DOTS)}
    )
    sys_.initial = lonely
    sched = Scheduler(("PA",), seed=0)
    cfg2, rec = activate(lonely, sys_, sched)
    assert not rec.move_ok and "no neighbor" in rec.failure
    assert not sched.forced


def test_scheduler_fairness_window():
    pids = [f"P{i}" for i in range(7)]
    sched = Scheduler(pids, seed=13)
    drawn = [sched.next()[0] for _ in range(200)]
    window = 2 * len(pids)
    for start in range(0, len(drawn) - window):
        assert set(drawn[start : start + window]) == set(pids)


def test_scheduler_forced_priority():
    sched = Scheduler(["A", "B", "C"], seed=0)
    sched.force_next(["C", "A", "C"])
    picks = [sched.next() for _ in range(3)]
    assert [p for p, _ in picks] == ["C", "A", "C"]
    assert all(f for _, f in picks)


def test_validate_delta_output_rules():
    key = ("q", DOTS, EPS, EPS)
    ok = ("q", DOTS, EPS, EPS, IDLE)
    assert validate_delta_output(key, ok) == []
    # expand must set t' and clear e'
    bad = ("q", DOTS, EPS, EPS, ("expand", 2))
    msgs = validate_delta_output(key, bad)
    assert any("t' nonempty" in m for m in msgs)
    # pending e permits only expand_e or idle
    key_e = ("q", DOTS, EPS, 3)
    bad2 = ("q", DOTS, EPS, EPS, ("contract", 1))
    msgs = validate_delta_output(key_e, bad2)
    assert any("pending expansion" in m for m in msgs)
    ok2 = ("q", DOTS, 2, EPS, ("expand", 3))
    assert validate_delta_output(key_e, ok2) == []


@given(st.integers(0, 5), st.integers(0, 9))
def test_validate_contract_clears_tail(e_i, c_i):
    key = ("q", DOTS, 4, EPS)
    out = ("q", DOTS, 4, EPS, ("contract", c_i))
    msgs = validate_delta_output(key, out)
    assert any("contract requires t' empty" in m for m in msgs)


def test_validate_contracted_flag_mask():
    flags = list(DOTS)
    flags[7] = "x"
    key = ("q", tuple(flags), EPS, EPS)
    msgs = validate_delta_output(key, ("q", DOTS, EPS, EPS, IDLE))
    assert any("input flags 6..9" in m for m in msgs)


# ---------------------------------------------------------------------------
# Exhaustive reachability oracle: a lone walker on a three-node path reaches
# exactly the occupancy patterns found by breadth-first search over the
# activation graph.
# ---------------------------------------------------------------------------


def bfs_reachable(system, max_depth=12):
    seen = {system.initial.canonical(): system.initial}
    frontier = [system.initial]
    for _ in range(max_depth):
        nxt = []
        for cfg in frontier:
            for succ in successors(cfg, system):
                if succ.canonical() not in seen:
                    seen[succ.canonical()] = succ
                    nxt.append(succ)
        frontier = nxt
        if not frontier:
            break
    return seen


def test_walker_reachability_matches_bfs_oracle():
    sys_ = fixtures.lone_walker()
    oracle = bfs_reachable(sys_, max_depth=6)
    oracle_occ = {tuple(sorted(c.occupancy)) for c in oracle.values()}

    seen_occ = set()
    for seed in range(12):
        trace = run(sys_, seed=seed, max_activations=6)
        for cfg in trace.configs:
            occ = tuple(sorted(cfg.occupancy))
            seen_occ.add(occ)
            assert occ in oracle_occ
    # within 6 activations the walker covers the first three nodes
    heads = {occ[0] for occ in oracle_occ}
    assert {(0, 0), (1, 0), (2, 0)} <= set(n for occ in oracle_occ for n in occ)


def test_run_determinism():
    a = run(fixtures.tunnel_march(), seed=77, max_activations=120)
    b = run(fixtures.tunnel_march(), seed=77, max_activations=120)
    assert [r.to_json() for r in a.records] == [r.to_json() for r in b.records]


# ---------------------------------------------------------------------------
# system file round trips and parse errors
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(fixtures.ALL_FIXTURES))
def test_system_file_round_trip(name):
    sys_ = fixtures.ALL_FIXTURES[name]()
    text = format_system(sys_)
    back = parse_system(text, name=name)
    assert back.states == sys_.states
    assert set(back.flags) == set(sys_.flags)
    assert back.initial == sys_.initial
    assert back.delta.rules == sys_.delta.rules


def test_parse_error_carries_line_number():
    text = "STATES a\nPARTICLES\n  P0 0 0 0 a . .\n"
    with pytest.raises(SpecError) as err:
        parse_system(text)
    assert err.value.line_no == 3


def test_parse_rejects_bad_move():
    text = (
        "STATES a\nFLAGS\nPARTICLES\n  P0 0 0 0 a . . . . . . . . . . . .\n"
        "RULES\n  a . . . . . . . . . . . . -> a . . . . . . . . . . . . jump_1\n"
    )
    with pytest.raises(SpecError) as err:
        parse_system(text)
    assert err.value.line_no == 6


def test_occupancy_conflict_rejected():
    with pytest.raises(ValueError):
        SystemConfig(
            {
                "P0": ParticleConfig((0, 0), 0, "a", EPS, EPS, DOTS),
                "P1": ParticleConfig((0, 0), 1, "a", EPS, EPS, DOTS),
            }
        )
