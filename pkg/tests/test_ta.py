"""Tile Automata engine tests: bond graphs and stability against brute
oracles, wire transmission, producibility closure, break/combine duality,
and stochastic-run determinism and sampling uniformity."""

from __future__ import annotations

import itertools
import math
import random

import pytest

from swarmtiles.ta.assembly import (
    bond_edges,
    bond_weight,
    canonical_form,
    is_connected,
    is_stable,
    min_cut,
)
from swarmtiles.ta.engine import (
    BreakOff,
    CombineWith,
    Transition,
    TAEngineError,
    apply_event,
    break_candidates,
    combination_placements,
    explore,
    transition_sites,
)
from swarmtiles.ta.system import (
    H,
    INF,
    V,
    AffinityFunction,
    InitialAssembly,
    Rule,
    RuleSet,
    StateRegistry,
    TAFileError,
    TASystem,
    format_ta_system,
    parse_ta_system,
)
from swarmtiles.ta.world import World, run_stochastic


def small_system(states, affinities, rules, initial, tau=1):
    reg = StateRegistry()
    for s in states:
        reg.register(s)
    aff = AffinityFunction(reg)
    for k1, k2, d, w in affinities:
        aff.set(k1, k2, d, w)
    rs = RuleSet()
    for r in rules:
        tag = r[5] if len(r) > 5 else ""
        rs.add(Rule(reg.id(r[0]), reg.id(r[1]), reg.id(r[2]), reg.id(r[3]), r[4], tag))
    init = [
        InitialAssembly({c: reg.id(s) for c, s in tiles.items()}, count, name)
        for tiles, count, name in initial
    ]
    return TASystem(reg, aff, init, rs, tau)


def wire_system(length: int):
    """A signal tile at the left end of a wire of default tiles; the signal
    copies itself rightward one transition at a time."""
    tiles = {(0, 0): "S"}
    for i in range(1, length + 1):
        tiles[(i, 0)] = "W"
    return small_system(
        states=["S", "W"],
        affinities=[("S", "W", H, 1), ("W", "W", H, 1), ("S", "S", H, 1)],
        rules=[("S", "W", "S", "S", H, "wire")],
        initial=[(tiles, 1, "wire")],
        tau=1,
    )


# ---------------------------------------------------------------------------
# bond graph and stability
# ---------------------------------------------------------------------------


def naive_bond_edges(tiles, affinity):
    """Independent re-derivation: iterate all ordered pairs, keep adjacent
    ones, apply the orientation cases directly."""
    edges = {}
    for a, b in itertools.combinations(tiles, 2):
        (x1, y1), (x2, y2) = a, b
        if abs(x1 - x2) + abs(y1 - y2) != 1:
            continue
        s1, s2 = tiles[a], tiles[b]
        if y1 > y2:
            w = affinity.strength(s1, s2, V)
            key = (a, b)
        elif y1 < y2:
            w = affinity.strength(s2, s1, V)
            key = (b, a)
        elif x1 < x2:
            w = affinity.strength(s1, s2, H)
            key = (a, b)
        else:
            w = affinity.strength(s2, s1, H)
            key = (b, a)
        edges[key] = w
    return edges


def random_assembly(rng, n):
    cells = {(0, 0)}
    while len(cells) < n:
        x, y = rng.choice(sorted(cells))
        dx, dy = rng.choice([(1, 0), (-1, 0), (0, 1), (0, -1)])
        cells.add((x + dx, y + dy))
    return sorted(cells)


def random_system_and_tiles(rng, n_states=3, n_tiles=5):
    reg = StateRegistry()
    names = [f"s{i}" for i in range(n_states)]
    for s in names:
        reg.register(s)
    aff = AffinityFunction(reg)
    for a in names:
        for b in names:
            for d in (H, V):
                aff.set(a, b, d, rng.randrange(0, 3))
    cells = random_assembly(rng, n_tiles)
    tiles = {c: reg.id(rng.choice(names)) for c in cells}
    return aff, tiles


def test_bond_graph_single_tile():
    reg = StateRegistry()
    reg.register("a")
    aff = AffinityFunction(reg)
    assert bond_edges({(0, 0): 0}, aff) == {}


def test_bond_graph_two_tiles_directional():
    reg = StateRegistry()
    a, b = reg.register("a"), reg.register("b")
    aff = AffinityFunction(reg)
    aff.set("a", "b", H, 2)
    edges = bond_edges({(0, 0): a, (1, 0): b}, aff)
    assert edges == {(((0, 0)), (1, 0)): 2}
    # the mirror order is a different key with no entry
    edges2 = bond_edges({(0, 0): b, (1, 0): a}, aff)
    assert edges2 == {(((0, 0)), (1, 0)): 0}


def test_bond_graph_matches_naive_oracle():
    rng = random.Random(42)
    for _ in range(200):
        aff, tiles = random_system_and_tiles(rng, n_tiles=rng.randrange(2, 10))
        mine = bond_edges(tiles, aff)
        naive = naive_bond_edges(tiles, aff)
        assert mine == naive


def brute_min_cut(tiles, affinity):
    """Minimum over all 2-partitions of the crossing affinity."""
    cells = sorted(tiles)
    n = len(cells)
    best = None
    for mask in range(1, (1 << n) - 1):
        left = {cells[i] for i in range(n) if mask & (1 << i)}
        cut = 0
        for c in left:
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nb = (c[0] + dx, c[1] + dy)
                if nb in tiles and nb not in left:
                    cut += bond_weight(tiles, c, nb, affinity)
        best = cut if best is None else min(best, cut)
    return best


def test_stability_two_tiles():
    reg = StateRegistry()
    a, b = reg.register("a"), reg.register("b")
    aff = AffinityFunction(reg)
    aff.set("a", "b", H, 2)
    tiles = {(0, 0): a, (1, 0): b}
    assert is_stable(tiles, aff, 2)
    assert not is_stable(tiles, aff, 3)


def test_single_tile_stable_by_convention():
    reg = StateRegistry()
    reg.register("a")
    aff = AffinityFunction(reg)
    assert is_stable({(5, 5): 0}, aff, 99)


def test_stability_matches_brute_force_oracle():
    rng = random.Random(7)
    cases = 0
    while cases < 1000:
        aff, tiles = random_system_and_tiles(rng, n_tiles=rng.randrange(2, 7))
        brute = brute_min_cut(tiles, aff)
        for tau in (1, 2, 3, 4):
            assert is_stable(tiles, aff, tau) == (brute >= tau), (tiles, tau)
        mc = min_cut(tiles, aff)
        assert mc == brute
        cases += 1


# ---------------------------------------------------------------------------
# transitions, combinations, breaks
# ---------------------------------------------------------------------------


def test_wire_transmission_exact_event_count():
    for length in range(1, 21):
        system = wire_system(length)
        world = World(system, seed=0)
        records = world.run(10 * length + 10)
        assert len(records) == length
        (aid,) = world.assemblies
        sid = system.registry.id("S")
        assert all(s == sid for s in world.assemblies[aid].values())


def test_applicable_transitions_single_site():
    system = wire_system(5)
    tiles = dict(system.initial[0].tiles)
    sites = transition_sites(tiles, system.rules)
    assert len(sites) == 1
    assert sites[0].c1 == (0, 0) and sites[0].c2 == (1, 0)


def test_no_rules_no_sites():
    system = small_system(["a"], [("a", "a", H, 1)], [], [({(0, 0): "a"}, 1, "x")])
    assert transition_sites(dict(system.initial[0].tiles), system.rules) == []


def test_transitions_match_double_loop_oracle():
    rng = random.Random(3)
    reg = StateRegistry()
    names = ["p", "q", "r"]
    for s in names:
        reg.register(s)
    rs = RuleSet()
    for _ in range(6):
        rs.add(
            Rule(
                reg.id(rng.choice(names)),
                reg.id(rng.choice(names)),
                reg.id(rng.choice(names)),
                reg.id(rng.choice(names)),
                rng.choice([H, V]),
            )
        )
    for _ in range(100):
        cells = random_assembly(rng, 9)
        tiles = {c: reg.id(rng.choice(names)) for c in cells}
        got = {(t.c1, t.c2, t.d, t.rule) for t in transition_sites(tiles, rs)}
        want = set()
        for c1 in tiles:
            for c2 in tiles:
                if c2 == (c1[0] + 1, c1[1]):
                    for rule in rs.lookup(tiles[c1], tiles[c2], H):
                        want.add((c1, c2, H, rule))
                if c2 == (c1[0], c1[1] - 1):
                    for rule in rs.lookup(tiles[c1], tiles[c2], V):
                        want.add((c1, c2, V, rule))
        assert got == want


def test_two_singletons_combine():
    system = small_system(
        ["a", "b"],
        [("a", "b", H, 1)],
        [],
        [({(0, 0): "a"}, 1, "a"), ({(0, 0): "b"}, 1, "b")],
    )
    a = {(0, 0): system.registry.id("a")}
    b = {(0, 0): system.registry.id("b")}
    offs = combination_placements(a, b, system.affinity, system.tau)
    assert offs == [(1, 0)]
    [union] = apply_event(a, CombineWith(tuple(b.items()), (1, 0)), system)
    assert len(union) == 2


def test_break_after_weakening_transition():
    system = small_system(
        ["a", "b", "B", "c"],
        [("a", "b", H, 1), ("b", "c", H, 1), ("a", "B", H, 1)],
        [("a", "b", "a", "B", H, "weaken")],
        [({(0, 0): "a", (1, 0): "b", (2, 0): "c"}, 1, "row")],
    )
    tiles = {c: system.registry.id(s) for c, s in [((0, 0), "a"), ((1, 0), "b"), ((2, 0), "c")]}
    assert break_candidates(tiles, system.affinity, system.tau) == []
    [site] = transition_sites(tiles, system.rules)
    [after] = apply_event(tiles, site, system)
    pieces = break_candidates(after, system.affinity, system.tau)
    assert pieces == [frozenset({(2, 0)})]
    rest, piece = apply_event(after, BreakOff(pieces[0]), system)
    assert sorted(rest) == [(0, 0), (1, 0)] and sorted(piece) == [(2, 0)]


def test_break_rejects_strong_cut():
    system = small_system(
        ["a", "b"],
        [("a", "b", H, 5)],
        [],
        [({(0, 0): "a", (1, 0): "b"}, 1, "x")],
        tau=2,
    )
    tiles = {(0, 0): system.registry.id("a"), (1, 0): system.registry.id("b")}
    with pytest.raises(TAEngineError):
        apply_event(tiles, BreakOff(frozenset({(1, 0)})), system)


def test_combine_rejects_overlap_and_weak_seam():
    system = small_system(
        ["a", "b"],
        [("a", "b", H, 1)],
        [],
        [({(0, 0): "a"}, 1, "a")],
        tau=2,
    )
    a = {(0, 0): system.registry.id("a")}
    b = {(0, 0): system.registry.id("b")}
    with pytest.raises(TAEngineError):
        apply_event(a, CombineWith(tuple(b.items()), (0, 0)), system)
    with pytest.raises(TAEngineError):
        apply_event(a, CombineWith(tuple(b.items()), (1, 0)), system)  # seam 1 < tau 2


# ---------------------------------------------------------------------------
# explore
# ---------------------------------------------------------------------------


def test_explore_inert_singleton():
    system = small_system(["a"], [], [], [({(0, 0): "a"}, 1, "a")])
    res = explore(system, depth_bound=5, count_bound=100)
    assert len(res.produced) == 1
    assert len(res.terminal) == 1
    assert not res.bound_hit


def test_explore_combine_closure_matches_hand_enumeration():
    # two states, one directional glue a->b: producibles are a, b, and ab
    system = small_system(
        ["a", "b"],
        [("a", "b", H, 1)],
        [],
        [({(0, 0): "a"}, 1, "a"), ({(0, 0): "b"}, 1, "b")],
    )
    res = explore(system, depth_bound=6, count_bound=100)
    reg = system.registry
    expected = {
        canonical_form({(0, 0): reg.id("a")}),
        canonical_form({(0, 0): reg.id("b")}),
        canonical_form({(0, 0): reg.id("a"), (1, 0): reg.id("b")}),
        # ab can meet another a on its right... b has no glue to a, so no
    }
    assert set(res.produced) == expected
    assert set(res.terminal) == {canonical_form({(0, 0): reg.id("a"), (1, 0): reg.id("b")})}


def trail_wire_system(length: int):
    """Wire variant whose signal leaves a distinct trail state, so finished
    wires cannot glue to each other and the producible set stays finite."""
    tiles = {(0, 0): "S"}
    for i in range(1, length + 1):
        tiles[(i, 0)] = "W"
    return small_system(
        states=["S", "W", "T"],
        affinities=[("S", "W", H, 2), ("W", "W", H, 2), ("T", "S", H, 2), ("T", "T", H, 2)],
        rules=[("S", "W", "T", "S", H, "wire")],
        initial=[(tiles, 1, "wire")],
        tau=2,
    )


def test_explore_wire_counts():
    system = trail_wire_system(4)
    res = explore(system, depth_bound=10, count_bound=100)
    # one assembly per signal-front position
    assert len(res.produced) == 5
    assert len(res.terminal) == 1


def test_stochastic_subset_of_explore():
    system = trail_wire_system(6)
    res = explore(system, depth_bound=12, count_bound=1000)
    world, records = run_stochastic(system, seed=5, max_events=100)
    for tiles in world.assemblies.values():
        assert canonical_form(tiles) in res.produced


# ---------------------------------------------------------------------------
# stochastic world
# ---------------------------------------------------------------------------


def test_run_deterministic_per_seed():
    system = wire_system(10)
    _, r1 = run_stochastic(system, seed=9, max_events=50)
    _, r2 = run_stochastic(system, seed=9, max_events=50)
    assert [r.to_json() for r in r1] == [r.to_json() for r in r2]


def test_empty_event_list_stops():
    system = small_system(["a"], [], [], [({(0, 0): "a"}, 1, "a")])
    world, records = run_stochastic(system, seed=1, max_events=10)
    assert records == []


def test_uniform_sampling_frequencies():
    """Ten independent toggle pairs; each step exactly ten events are
    applicable, so per-pair counts should be uniform within 5 sigma."""
    n_pairs, steps = 10, 10_000
    initial, states, affs, rules = [], [], [], []
    for i in range(n_pairs):
        a, b = f"a{i}", f"b{i}"
        states += [a, b]
        affs += [(a, b, H, 1), (b, a, H, 1)]
        rules += [(a, b, b, a, H, "tog"), (b, a, a, b, H, "tog")]
        initial.append(({(0, 0): a, (1, 0): b}, 1, f"pair{i}"))
    system = small_system(states, affs, rules, initial)
    world = World(system, seed=123)
    counts = {}
    for rec in world.run(steps):
        counts[rec.aid] = counts.get(rec.aid, 0) + 1
    assert len(world.assemblies) == n_pairs
    p = 1.0 / n_pairs
    mean = steps * p
    sigma = math.sqrt(steps * p * (1 - p))
    for aid, c in counts.items():
        assert abs(c - mean) < 5 * sigma, (aid, c)


def test_infinite_supply_combines_repeatedly():
    # an INF singleton "t" sticks to state "s" sites
    system = small_system(
        ["s", "t"],
        [("s", "t", H, 1)],
        [],
        [({(0, 0): "s"}, 1, "seed"), ({(0, 0): "t"}, INF, "timing")],
    )
    world = World(system, seed=2)
    events = world.applicable_events()
    assert len(events) == 1
    world.apply(events[0])
    # the attached t exposes... t has no further partners eastward, and the
    # supply remains infinite
    assert world.supply[1]["count"] == INF


def test_world_fingerprint_and_clone():
    system = wire_system(5)
    world = World(system, seed=0)
    world.run(2)
    twin = world.clone()
    assert twin.fingerprint() == world.fingerprint()
    world.run(1)
    assert twin.fingerprint() != world.fingerprint()


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def test_ta_file_round_trip():
    system = wire_system(3)
    text = format_ta_system(system)
    back = parse_ta_system(text)
    assert back.tau == system.tau
    assert back.registry.names == system.registry.names
    assert back.affinity.table == system.affinity.table
    assert len(back.rules) == len(system.rules)
    assert [ia.tiles for ia in back.initial] == [ia.tiles for ia in system.initial]


def test_ta_file_errors():
    with pytest.raises(TAFileError):
        parse_ta_system("STATES a\n")  # missing TAU
    try:
        parse_ta_system("TAU 1\nRULES\n  a b a b h\n")
    except TAFileError as err:
        assert err.line_no == 3
    else:
        raise AssertionError("undeclared rule state accepted")
