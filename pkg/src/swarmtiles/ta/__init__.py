from .system import (
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
    load_ta_system,
    parse_ta_system,
)
from .assembly import bond_edges, canonical_form, is_stable, min_cut
from .engine import (
    BreakOff,
    CombineWith,
    Transition,
    apply_event,
    break_candidates,
    combination_placements,
    explore,
    transition_sites,
)
from .world import EventRecord, World, run_stochastic, write_ta_trace

__all__ = [
    "H", "V", "INF",
    "AffinityFunction", "InitialAssembly", "Rule", "RuleSet", "StateRegistry",
    "TAFileError", "TASystem", "format_ta_system", "load_ta_system", "parse_ta_system",
    "bond_edges", "canonical_form", "is_stable", "min_cut",
    "BreakOff", "CombineWith", "Transition", "apply_event", "break_candidates",
    "combination_placements", "explore", "transition_sites",
    "EventRecord", "World", "run_stochastic", "write_ta_trace",
]
